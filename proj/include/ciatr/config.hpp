#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ciatr/configs.hpp"
#include "ciatr/types.hpp"

namespace ciatr {

/// Everything a CLI run needs, read from a flat `key = value` file with `#`
/// comments. Unknown keys are rejected; every field has a default.
struct RunConfig {
    ConfoundConfig data;
    AugmentConfig augment;
    TrainConfig train;
    std::filesystem::path data_dir = "data";
    std::filesystem::path out_dir = "out";
    std::filesystem::path checkpoint;  // optional; eval can take it on the command line
    std::vector<std::uint64_t> experiment_seeds = {1, 2, 3, 4, 5};
    std::vector<int> experiment_n_values = {5, 10, 25};
    std::vector<std::string> experiment_variants = {"ce-only", "aug", "aug-ld"};
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Maps an ablation name onto the train flags:
///   ce-only: augment_on=false, ld_on=false
///   aug:     augment_on=true,  ld_on=false
///   aug-ld:  augment_on=true,  ld_on=true
void apply_variant(TrainConfig& cfg, const std::string& variant);

}  // namespace ciatr
