#pragma once

#include <vector>

#include "ciatr/configs.hpp"
#include "ciatr/types.hpp"

namespace ciatr {

/// The confounder: acquisition parameters that shape appearance but carry no
/// class information by themselves.
struct ImagingCondition {
    double azimuth_deg = 0.0;       // [0, 360)
    double background_level = 0.0;  // [0, 0.4] mean clutter amplitude
    double speckle_scale = 0.5;     // (0, 1] multiplicative-noise intensity
};

struct Scatterer {
    double row = 0.0;  // offset from image center, pixels
    double col = 0.0;
    double amplitude = 1.0;
    double extent = 2.0;  // Gaussian blob sigma, pixels
};

/// Class-specific point-scatterer layout. Layouts are asymmetric so no TF
/// member maps one class onto another.
struct SceneSpec {
    int class_id = 0;
    std::vector<Scatterer> scatterers;
};

struct LabeledImage {
    Grid image;
    int label = 0;
    ImagingCondition ic;  // recorded ground truth, hidden from the model
};

struct Dataset {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> test;
};

/// Deterministic per-class layout for an h x w frame. Independent of the
/// dataset seed so every seed shares the same target geometry.
SceneSpec make_scene_spec(int class_id, int h, int w);

/// Clutter floor + azimuth-rotated scatterer blobs, multiplied by unit-mean
/// speckle of intensity ic.speckle_scale. Throws ConfigError if a rotated
/// scatterer center leaves the frame.
Grid render_scene(const SceneSpec& spec, const ImagingCondition& ic, SeedStream rng,
                  int h, int w);

/// Azimuth bucket arc membership: bucket b covers [b*360/B, (b+1)*360/B).
int azimuth_bucket(double azimuth_deg, int num_buckets);

/// Background level attached to a bucket (the non-azimuth half of the
/// confound). Spans [0, 0.4] across buckets.
double bucket_background(int bucket, int num_buckets);

/// Confounded split generation. In train, a class-k sample lands in bucket
/// k mod B with probability rho, else in a uniform bucket; test buckets are
/// uniform and class-independent for every rho.
Dataset gen_dataset(const ConfoundConfig& cfg, SeedStream rng);

}  // namespace ciatr
