#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scbench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not conform.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration, detected before any compute is spent.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An optimisation produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& where, long step, double loss)
        : Error(where + ": non-finite loss " + std::to_string(loss) + " at step " +
                std::to_string(step)),
          step_(step),
          loss_(loss) {}

    long step() const noexcept { return step_; }
    double loss() const noexcept { return loss_; }

private:
    long step_;
    double loss_;
};

enum class Provenance { GroundTruth, Learned };

/// M x N matrix whose columns are feature directions ("atoms").
struct Dictionary {
    Matrix columns;
    Provenance provenance = Provenance::Learned;

    Index measurements() const noexcept { return columns.rows(); }
    Index atoms() const noexcept { return columns.cols(); }

    /// max_j | ||d_j|| - 1 |
    double max_norm_deviation() const {
        if (columns.cols() == 0) return 0.0;
        return (columns.colwise().norm().array() - 1.0).abs().maxCoeff();
    }
};

inline void require(bool condition, const char* message) {
    if (!condition) throw ConfigError(message);
}

inline void require_shape(bool condition, const std::string& message) {
    if (!condition) throw ShapeError(message);
}

}  // namespace scbench
