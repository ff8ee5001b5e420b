#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ciatr/config.hpp"

namespace ciatr {

struct CellResult {
    std::string variant;
    int n = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    bool skipped = false;  // already complete before this run
};

struct ExperimentResult {
    std::vector<CellResult> cells;
};

/// Worker-count override; absence or values < 2 mean sequential mode.
int experiment_threads();

/// Runs the {seeds x n_values x variants} grid under cfg.out_dir.
///
/// Per seed one dataset is generated on disk with n_per_class =
/// max(n_values); a cell with a smaller n trains on the first n manifest
/// entries of each class, so sample sets are nested across n. Completed cells
/// (marker file `done`) are skipped on rerun. Cells may run on worker threads
/// (each cell itself stays sequential and deterministic). Writes summary.csv
/// (one row per cell) and aggregates.csv (mean/std per variant x n).
ExperimentResult run_experiment(const RunConfig& cfg);

std::filesystem::path cell_dir(const std::filesystem::path& out_dir,
                               const std::string& variant, int n, std::uint64_t seed);

}  // namespace ciatr
