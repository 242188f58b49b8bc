#include "scbench/rng.hpp"

namespace scbench {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

Matrix Rng::normal_matrix(Index rows, Index cols, double stddev) {
    Matrix out(rows, cols);
    // column-major fill order is part of the reproducibility contract
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = stddev * normal();
    return out;
}

Vector Rng::unit_vector(Index dim) {
    Vector v(dim);
    double norm = 0.0;
    do {
        for (Index i = 0; i < dim; ++i) v(i) = normal();
        norm = v.norm();
    } while (norm < 1e-12);
    return v / norm;
}

}  // namespace scbench
