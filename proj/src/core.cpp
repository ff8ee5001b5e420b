#include "ciatr/core.hpp"

#include <cmath>

namespace ciatr {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_valid_grid(const Grid& img) {
    const auto h = img.rows();
    const auto w = img.cols();
    if (h < 8 || w < 8 || !is_pow2(static_cast<int>(h)) || !is_pow2(static_cast<int>(w))) {
        throw ShapeError("grid dimensions must be powers of two and >= 8, got " +
                         std::to_string(h) + "x" + std::to_string(w));
    }
    if (!img.isFinite().all()) {
        throw NumericError("grid contains non-finite values");
    }
}

Grid normalize_minmax(const Grid& img) {
    const double lo = img.minCoeff();
    const double hi = img.maxCoeff();
    if (hi <= lo) {
        return Grid::Zero(img.rows(), img.cols());
    }
    return (img - lo) / (hi - lo);
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::mt19937_64 make_rng(const SeedStream& s) {
    return std::mt19937_64(mix64(mix64(s.seed) ^ mix64(s.stream_id ^ 0xD6E8FEB86659FD93ull)));
}

SeedStream derive_stream(const SeedStream& root, std::uint64_t tag) {
    return SeedStream{mix64(root.seed ^ mix64(tag)), mix64(root.stream_id + tag)};
}

SeedStream derive_sample_seed(const SeedStream& root, std::uint64_t epoch,
                              std::uint64_t sample_index) {
    // stream_id = bijection(root) XOR (epoch << 32 | index): injective in
    // (epoch, index) for indices below 2^32 within one root.
    const std::uint64_t counter = (epoch << 32) | (sample_index & 0xFFFFFFFFull);
    return SeedStream{mix64(root.seed ^ 0xA24BAED4963EE407ull),
                      mix64(root.stream_id) ^ counter};
}

}  // namespace ciatr
