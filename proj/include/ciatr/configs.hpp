#pragma once

#include <vector>

#include "ciatr/types.hpp"

namespace ciatr {

/// Knobs of the spatial-frequency hybrid augmentation.
struct AugmentConfig {
    bool enabled = true;
    // frequency half
    double ra_max = 0.3;                        // mask ratio drawn uniform in [0, ra_max]
    std::vector<int> rm_re_choices = {4, 8, 16};  // admissible patch edges
    // spatial half
    double include_prob = 0.5;   // per-transform inclusion probability
    double sigma_rotate = 1.0;   // magnitude std-devs, one per magnitude-carrying transform
    double sigma_translate = 1.0;
    double sigma_scale = 1.0;
    // resampling policy: false = fresh augmented copies every epoch
    bool fixed = false;
};

struct TrainConfig {
    int epochs = 150;
    int batch_size = 24;
    double lr = 0.01;
    double momentum = 0.9;
    double margin = 0.5;    // triplet margin m
    double lambda_d = 1.0;  // weight on the discrimination loss
    std::uint64_t seed = 1;
    bool augment_on = true;
    bool ld_on = true;
};

/// Synthetic-dataset geometry and confounding strength.
struct ConfoundConfig {
    int num_classes = 3;
    int n_per_class = 20;
    int height = 64;
    int width = 64;
    double rho = 0.9;         // train-split probability of the class-assigned bucket
    int num_ic_buckets = 4;
    int test_per_class = 200;
};

void validate(const AugmentConfig& cfg);
void validate(const TrainConfig& cfg);
void validate(const ConfoundConfig& cfg);

}  // namespace ciatr
