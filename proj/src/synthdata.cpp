#include "ciatr/synthdata.hpp"

#include <cmath>
#include <numbers>

#include "ciatr/core.hpp"

namespace ciatr {

namespace {

constexpr std::uint64_t kSceneSeed = 0x5CE4E5EEDull;  // layouts shared across dataset seeds
constexpr std::uint64_t kTrainTag = 11;
constexpr std::uint64_t kTestTag = 13;

constexpr double kSpeckleLo = 0.3;
constexpr double kSpeckleHi = 0.7;

Grid render_clean(const SceneSpec& spec, double azimuth_deg, double background, int h,
                  int w) {
    const double cr = (h - 1) / 2.0;
    const double cc = (w - 1) / 2.0;
    const double a = azimuth_deg * std::numbers::pi / 180.0;
    const double ca = std::cos(a);
    const double sa = std::sin(a);
    Grid img = Grid::Constant(h, w, background);
    for (const Scatterer& s : spec.scatterers) {
        const double r = cr + ca * s.row - sa * s.col;
        const double c = cc + sa * s.row + ca * s.col;
        if (r < 0.0 || r > h - 1.0 || c < 0.0 || c > w - 1.0) {
            throw ConfigError("scatterer of class " + std::to_string(spec.class_id) +
                              " leaves the frame at azimuth " +
                              std::to_string(azimuth_deg));
        }
        const double inv2s2 = 1.0 / (2.0 * s.extent * s.extent);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const double d2 = (i - r) * (i - r) + (j - c) * (j - c);
                img(i, j) += s.amplitude * std::exp(-d2 * inv2s2);
            }
        }
    }
    return img;
}

}  // namespace

SceneSpec make_scene_spec(int class_id, int h, int w) {
    SceneSpec spec;
    spec.class_id = class_id;
    auto gen = make_rng(SeedStream{kSceneSeed, static_cast<std::uint64_t>(class_id)});
    const double rmax = 0.32 * std::min(h, w);  // stays in-frame under any rotation
    const double rmin = 0.10 * std::min(h, w);
    std::uniform_real_distribution<double> radius(rmin, rmax);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> amp(0.7, 1.4);
    std::uniform_real_distribution<double> ext(1.6, 3.2);
    const int count = 4 + class_id % 3;
    for (int s = 0; s < count; ++s) {
        for (int attempt = 0; attempt < 256; ++attempt) {
            const double rad = radius(gen);
            const double th = angle(gen);
            Scatterer cand{rad * std::cos(th), rad * std::sin(th), amp(gen), ext(gen)};
            bool separated = true;
            for (const Scatterer& prev : spec.scatterers) {
                const double d = std::hypot(prev.row - cand.row, prev.col - cand.col);
                if (d < 2.5 * (prev.extent + cand.extent)) {
                    separated = false;
                    break;
                }
            }
            if (separated || attempt == 255) {
                spec.scatterers.push_back(cand);
                break;
            }
        }
    }
    return spec;
}

Grid render_scene(const SceneSpec& spec, const ImagingCondition& ic, SeedStream rng,
                  int h, int w) {
    Grid img = render_clean(spec, ic.azimuth_deg, ic.background_level, h, w);
    auto gen = make_rng(rng);
    std::exponential_distribution<double> unit_exp(1.0);
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < h; ++i) {
            img(i, j) *= 1.0 + ic.speckle_scale * (unit_exp(gen) - 1.0);
        }
    }
    return img;
}

int azimuth_bucket(double azimuth_deg, int num_buckets) {
    const double arc = 360.0 / num_buckets;
    int b = static_cast<int>(azimuth_deg / arc);
    return std::min(std::max(b, 0), num_buckets - 1);
}

// Mild secondary cue next to the dominant azimuth arc: spans 0.15..0.25 so
// clutter brightness alone cannot carry the class.
double bucket_background(int bucket, int num_buckets) {
    return 0.15 + 0.1 * (static_cast<double>(bucket) / (num_buckets - 1));
}

Dataset gen_dataset(const ConfoundConfig& cfg, SeedStream rng) {
    validate(cfg);
    std::vector<SceneSpec> scenes;
    scenes.reserve(cfg.num_classes);
    for (int k = 0; k < cfg.num_classes; ++k) {
        scenes.push_back(make_scene_spec(k, cfg.height, cfg.width));
    }

    const double arc = 360.0 / cfg.num_ic_buckets;
    Dataset ds;

    auto emit_split = [&](std::uint64_t tag, int per_class, bool confounded,
                          std::vector<LabeledImage>& out) {
        auto gen = make_rng(derive_stream(rng, tag));
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        std::uniform_int_distribution<int> any_bucket(0, cfg.num_ic_buckets - 1);
        std::uniform_real_distribution<double> in_arc(0.0, arc);
        std::uniform_real_distribution<double> speckle(kSpeckleLo, kSpeckleHi);
        std::uint64_t index = 0;
        for (int k = 0; k < cfg.num_classes; ++k) {
            for (int j = 0; j < per_class; ++j, ++index) {
                int bucket = any_bucket(gen);
                if (confounded && coin(gen) < cfg.rho) {
                    bucket = k % cfg.num_ic_buckets;
                }
                ImagingCondition ic;
                ic.azimuth_deg = bucket * arc + in_arc(gen);
                ic.background_level = bucket_background(bucket, cfg.num_ic_buckets);
                ic.speckle_scale = speckle(gen);
                const SeedStream sample_rng =
                    derive_sample_seed(derive_stream(rng, tag ^ 0xF00Dull), 0, index);
                out.push_back(LabeledImage{
                    render_scene(scenes[k], ic, sample_rng, cfg.height, cfg.width), k, ic});
            }
        }
    };

    emit_split(kTrainTag, cfg.n_per_class, true, ds.train);
    emit_split(kTestTag, cfg.test_per_class, false, ds.test);
    return ds;
}

}  // namespace ciatr
