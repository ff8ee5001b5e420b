#pragma once

#include "ciatr/types.hpp"

namespace ciatr {

bool is_pow2(int n);

/// Throws ShapeError unless h, w >= 8, both powers of two, and every value is
/// finite.
void require_valid_grid(const Grid& img);

/// Affine min-max rescale into [0,1]. A constant image maps to all zeros.
Grid normalize_minmax(const Grid& img);

/// 64-bit finalizer (splitmix64). Used for all seed mixing so that derived
/// streams are decorrelated even for adjacent counters.
std::uint64_t mix64(std::uint64_t x);

/// RNG for a stream. The engine state depends on both seed and stream_id.
std::mt19937_64 make_rng(const SeedStream& s);

/// Child stream for a tagged purpose (mask sampling vs transform sampling...).
SeedStream derive_stream(const SeedStream& root, std::uint64_t tag);

/// Per-sample augmentation stream. Counter-based: the (epoch, sample_index)
/// pair is embedded injectively (each below 2^32), so parallel augmentation
/// cannot reorder draws and no two samples of one root share a stream.
SeedStream derive_sample_seed(const SeedStream& root, std::uint64_t epoch,
                              std::uint64_t sample_index);

}  // namespace ciatr
