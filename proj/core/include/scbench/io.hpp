#pragma once

#include "scbench/datagen.hpp"
#include "scbench/training.hpp"

#include <filesystem>
#include <string>

namespace scbench {

namespace fs = std::filesystem;

/// Row-major, headerless, comma separated, 17 significant digits.
void write_matrix_csv(const fs::path& path, const Matrix& m);
Matrix read_matrix_csv(const fs::path& path);

std::string gen_config_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const std::string& text);

/// X.csv, S.csv, D.csv and manifest.json (the generator config).
void write_dataset(const fs::path& dir, const Dataset& data);
Dataset read_dataset(const fs::path& dir);

std::string train_config_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

/// trace.csv: step,mse,latent_mcc,dict_mcc,l0,l1,flops_train_cum
void write_trace_csv(const fs::path& path, const TrainTrace& trace);
inline constexpr const char* kTraceHeader = "step,mse,latent_mcc,dict_mcc,l0,l1,flops_train_cum";

struct Checkpoint {
    Artifact artifact;
    MethodSpec method;
    Scenario scenario = Scenario::UnknownBoth;
    long steps = 0;
};

/// Directory of CSV matrices plus model.json (architecture, flags, steps).
void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const fs::path& dir);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// Number of data rows in a CSV, header excluded when has_header.
long count_csv_rows(const fs::path& path, bool has_header);

}  // namespace scbench
