#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ciatr {

using Scalar = double;
using Grid = Eigen::ArrayXXd;          // real amplitude image, (row, col) indexed
using ComplexGrid = Eigen::ArrayXXcd;  // spectrum of a Grid, same shape
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using ChannelStack = std::vector<Grid>;  // c x h' x w' activation volume

/// Deterministic RNG handle: identical (seed, stream_id) always replays the
/// same draw sequence; distinct stream_ids decorrelate purposes.
struct SeedStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

// Error taxonomy. The CLI maps these onto its stable exit codes.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ciatr
