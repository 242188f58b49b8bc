#include "scbench/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace scbench {

using nlohmann::json;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 24);
    char buf[64];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out.push_back(',');
            auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    write_text(path, out);
}

Matrix read_matrix_csv(const fs::path& path) {
    const std::string text = read_text(path);
    std::vector<double> values;
    Index rows = 0, cols = -1;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        if (line.empty()) continue;
        Index count = 0;
        const char* p = line.data();
        const char* stop = line.data() + line.size();
        while (p <= stop) {
            const char* comma = std::find(p, stop, ',');
            double v = 0.0;
            // skip leading spaces
            while (p < comma && *p == ' ') ++p;
            auto res = std::from_chars(p, comma, v);
            if (res.ec != std::errc()) throw Error("malformed number in " + path.string());
            values.push_back(v);
            ++count;
            p = comma + 1;
        }
        if (cols < 0) cols = count;
        if (count != cols) throw Error("ragged CSV " + path.string());
        ++rows;
    }
    if (cols < 0) cols = 0;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
    return m;
}

std::string gen_config_json(const GenConfig& cfg) {
    json j{{"N", cfg.n_sources},        {"M", cfg.n_measurements}, {"K", cfg.k_active},
           {"n_samples", cfg.n_samples}, {"seed", cfg.seed},        {"distribution", to_string(cfg.distribution)},
           {"alpha", cfg.alpha}};
    return j.dump(2);
}

GenConfig gen_config_from_json(const std::string& text) {
    GenConfig cfg;
    try {
        json j = json::parse(text);
        if (j.contains("config")) j = j.at("config");
        cfg.n_sources = j.value("N", cfg.n_sources);
        cfg.n_measurements = j.value("M", cfg.n_measurements);
        cfg.k_active = j.value("K", cfg.k_active);
        cfg.n_samples = j.value("n_samples", cfg.n_samples);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.distribution = code_distribution_from_string(j.value("distribution", to_string(cfg.distribution)));
        cfg.alpha = j.value("alpha", cfg.alpha);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("generator config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
    fs::create_directories(dir);
    write_matrix_csv(dir / "X.csv", data.X);
    write_matrix_csv(dir / "S.csv", data.S);
    write_matrix_csv(dir / "D.csv", data.dictionary.columns);
    json manifest{{"config", json::parse(gen_config_json(data.config))},
                  {"files", {{"X.csv", data.X.rows()}, {"S.csv", data.S.rows()}, {"D.csv", data.dictionary.columns.rows()}}}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
    Dataset d;
    d.config = gen_config_from_json(read_text(dir / "manifest.json"));
    d.X = read_matrix_csv(dir / "X.csv");
    d.S = read_matrix_csv(dir / "S.csv");
    d.dictionary = {read_matrix_csv(dir / "D.csv"), Provenance::GroundTruth};
    require_shape(d.X.rows() == d.S.rows(), "dataset: X and S row counts differ");
    require_shape(d.dictionary.measurements() == d.X.cols() && d.dictionary.atoms() == d.S.cols(),
                  "dataset: D must be M x N");
    return d;
}

namespace {

json infer_json(const InferConfig& c) {
    json j{{"steps", c.steps},         {"lr", c.lr},
           {"lr_relative", c.lr_relative}, {"lambda", c.lambda},
           {"init", to_string(c.init)}, {"init_scale", c.init_scale},
           {"threshold", c.threshold},  {"rule", c.rule == UpdateRule::Ista ? "ista" : "subgradient"},
           {"seed", c.seed}};
    j["topk"] = c.topk ? json(*c.topk) : json(nullptr);
    return j;
}

InferConfig infer_from_json(const json& j) {
    InferConfig c;
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    c.lr_relative = j.value("lr_relative", c.lr_relative);
    c.lambda = j.value("lambda", c.lambda);
    c.init = code_init_from_string(j.value("init", to_string(c.init)));
    c.init_scale = j.value("init_scale", c.init_scale);
    c.threshold = j.value("threshold", c.threshold);
    c.rule = j.value("rule", std::string("subgradient")) == "ista" ? UpdateRule::Ista : UpdateRule::Subgradient;
    c.seed = j.value("seed", c.seed);
    if (j.contains("topk") && !j.at("topk").is_null()) c.topk = j.at("topk").get<int>();
    return c;
}

}  // namespace

std::string train_config_json(const TrainConfig& cfg) {
    json j{{"scenario", to_string(cfg.scenario)},
           {"method", cfg.method.label()},
           {"hidden_layers", cfg.hidden_layers},
           {"steps", cfg.steps},
           {"lr", cfg.lr},
           {"code_lr", cfg.code_lr},
           {"lambda", cfg.lambda},
           {"batch_size", cfg.batch_size},
           {"eval_every", cfg.eval_every},
           {"seed", cfg.seed},
           {"use_bias", cfg.use_bias},
           {"l0_threshold", cfg.l0_threshold},
           {"eval_inference", infer_json(cfg.eval_inference)}};
    j["resample_every"] = cfg.resample_every ? json(*cfg.resample_every) : json(nullptr);
    j["train_topk"] = cfg.train_topk ? json(*cfg.train_topk) : json(nullptr);
    return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
    TrainConfig c;
    try {
        const json j = json::parse(text);
        c.scenario = scenario_from_string(j.value("scenario", to_string(c.scenario)));
        c.method = MethodSpec::parse(j.value("method", c.method.label()));
        c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
        c.steps = j.value("steps", c.steps);
        c.lr = j.value("lr", c.lr);
        c.code_lr = j.value("code_lr", c.code_lr);
        c.lambda = j.value("lambda", c.lambda);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.eval_every = j.value("eval_every", c.eval_every);
        c.seed = j.value("seed", c.seed);
        c.use_bias = j.value("use_bias", c.use_bias);
        c.l0_threshold = j.value("l0_threshold", c.l0_threshold);
        if (j.contains("eval_inference")) c.eval_inference = infer_from_json(j.at("eval_inference"));
        if (j.contains("resample_every") && !j.at("resample_every").is_null())
            c.resample_every = j.at("resample_every").get<int>();
        if (j.contains("train_topk") && !j.at("train_topk").is_null()) c.train_topk = j.at("train_topk").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("training config: ") + e.what());
    }
    return c;
}

void write_trace_csv(const fs::path& path, const TrainTrace& trace) {
    std::ostringstream out;
    out.precision(17);
    out << kTraceHeader << '\n';
    for (const TracePoint& p : trace.points) {
        const MetricsRecord& m = p.metrics;
        out << p.step << ',' << m.mse << ',' << m.latent_mcc << ',' << m.dict_mcc << ',' << m.l0_mean << ','
            << m.l1_mean << ',' << p.flops_train_cum << '\n';
    }
    write_text(path, out.str());
}

void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt) {
    fs::create_directories(dir);
    json meta{{"method", ckpt.method.label()}, {"scenario", to_string(ckpt.scenario)}, {"steps", ckpt.steps}};
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, SaeModel>) {
                meta["architecture"] = "sae";
                meta["use_bias"] = a.use_bias;
                meta["M"] = a.measurements();
                meta["N"] = a.latents();
                write_matrix_csv(dir / "encoder.csv", a.encoder);
                write_matrix_csv(dir / "decoder.csv", a.decoder.columns);
                if (a.use_bias) {
                    write_matrix_csv(dir / "encoder_bias.csv", a.encoder_bias);
                    write_matrix_csv(dir / "decoder_bias.csv", a.decoder_bias);
                }
            } else if constexpr (std::is_same_v<T, MlpModel>) {
                meta["architecture"] = "mlp";
                meta["use_bias"] = a.use_bias;
                meta["M"] = a.measurements();
                meta["N"] = a.latents();
                meta["hidden"] = a.hidden_width();
                meta["layers"] = a.layers.size();
                for (std::size_t l = 0; l < a.layers.size(); ++l) {
                    write_matrix_csv(dir / ("layer" + std::to_string(l) + "_weight.csv"), a.layers[l].weight);
                    if (a.use_bias)
                        write_matrix_csv(dir / ("layer" + std::to_string(l) + "_bias.csv"), a.layers[l].bias);
                }
                write_matrix_csv(dir / "decoder.csv", a.decoder.columns);
                if (a.use_bias) write_matrix_csv(dir / "decoder_bias.csv", a.decoder_bias);
            } else {
                meta["architecture"] = "sparse_coding";
                meta["use_bias"] = false;
                meta["M"] = a.dictionary.measurements();
                meta["N"] = a.dictionary.atoms();
                write_matrix_csv(dir / "decoder.csv", a.dictionary.columns);
                write_matrix_csv(dir / "train_codes.csv", a.train_codes);
            }
        },
        ckpt.artifact);
    write_text(dir / "model.json", meta.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& dir) {
    const json meta = json::parse(read_text(dir / "model.json"));
    Checkpoint c{SaeModel{}, MethodSpec::parse(meta.at("method").get<std::string>()),
                 scenario_from_string(meta.at("scenario").get<std::string>()), meta.value("steps", 0L)};
    const std::string arch = meta.at("architecture");
    const bool bias = meta.value("use_bias", false);
    const Dictionary decoder{read_matrix_csv(dir / "decoder.csv"), Provenance::Learned};
    auto vec = [&](const std::string& name) -> Vector {
        Matrix m = read_matrix_csv(dir / name);
        return Eigen::Map<Vector>(m.data(), m.size());
    };
    if (arch == "sae") {
        SaeModel m;
        m.encoder = read_matrix_csv(dir / "encoder.csv");
        m.decoder = decoder;
        m.use_bias = bias;
        m.encoder_bias = bias ? vec("encoder_bias.csv") : Vector::Zero(m.encoder.rows());
        m.decoder_bias = bias ? vec("decoder_bias.csv") : Vector::Zero(m.encoder.cols());
        c.artifact = std::move(m);
    } else if (arch == "mlp") {
        MlpModel m;
        const std::size_t layers = meta.at("layers").get<std::size_t>();
        for (std::size_t l = 0; l < layers; ++l) {
            DenseLayer layer;
            layer.weight = read_matrix_csv(dir / ("layer" + std::to_string(l) + "_weight.csv"));
            layer.bias = bias ? vec("layer" + std::to_string(l) + "_bias.csv") : Vector::Zero(layer.weight.rows());
            m.layers.push_back(std::move(layer));
        }
        m.decoder = decoder;
        m.use_bias = bias;
        m.decoder_bias = bias ? vec("decoder_bias.csv") : Vector::Zero(decoder.measurements());
        c.artifact = std::move(m);
    } else if (arch == "sparse_coding") {
        SparseCodingState s{decoder, {}};
        if (fs::exists(dir / "train_codes.csv")) s.train_codes = read_matrix_csv(dir / "train_codes.csv");
        c.artifact = std::move(s);
    } else {
        throw Error("unknown architecture '" + arch + "' in " + (dir / "model.json").string());
    }
    return c;
}

long count_csv_rows(const fs::path& path, bool has_header) {
    const std::string text = read_text(path);
    long lines = 0;
    for (std::size_t pos = 0; pos < text.size();) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        if (end > pos) ++lines;
        pos = end + 1;
    }
    return has_header && lines > 0 ? lines - 1 : lines;
}

}  // namespace scbench
