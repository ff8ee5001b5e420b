#include "ciatr/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ciatr/core.hpp"

namespace ciatr {

namespace {

constexpr double kDegPerUnit = 15.0;   // rotate magnitude scaling
constexpr double kPixPerUnit = 3.0;    // translate magnitude scaling
constexpr double kScalePerUnit = 0.1;  // scale magnitude scaling
constexpr double kScaleMin = 0.7;
constexpr double kScaleMax = 1.3;

double bilinear(const Grid& img, double r, double c) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    const int r0 = static_cast<int>(std::floor(r));
    const int c0 = static_cast<int>(std::floor(c));
    const double fr = r - r0;
    const double fc = c - c0;
    auto at = [&](int i, int j) -> double {
        return (i < 0 || i >= h || j < 0 || j >= w) ? 0.0 : img(i, j);
    };
    return (1.0 - fr) * (1.0 - fc) * at(r0, c0) + (1.0 - fr) * fc * at(r0, c0 + 1) +
           fr * (1.0 - fc) * at(r0 + 1, c0) + fr * fc * at(r0 + 1, c0 + 1);
}

Grid rotate(const Grid& img, double angle_deg) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    const double cr = (h - 1) / 2.0;
    const double cc = (w - 1) / 2.0;
    const double a = angle_deg * std::numbers::pi / 180.0;
    const double ca = std::cos(a);
    const double sa = std::sin(a);
    Grid out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            // inverse map: rotate the output coordinate by -angle
            const double dr = i - cr;
            const double dc = j - cc;
            out(i, j) = bilinear(img, cr + ca * dr + sa * dc, cc - sa * dr + ca * dc);
        }
    }
    return out;
}

Grid scale(const Grid& img, double factor) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    const double cr = (h - 1) / 2.0;
    const double cc = (w - 1) / 2.0;
    Grid out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            out(i, j) = bilinear(img, cr + (i - cr) / factor, cc + (j - cc) / factor);
        }
    }
    return out;
}

Grid translate(const Grid& img, double shift) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    Grid out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            out(i, j) = bilinear(img, i - shift, j - shift);
        }
    }
    return out;
}

}  // namespace

const char* transform_name(Transform tf) {
    switch (tf) {
        case Transform::Rotate: return "rotate";
        case Transform::Scale: return "scale";
        case Transform::Translate: return "translate";
        case Transform::FlipH: return "flip_h";
        case Transform::FlipV: return "flip_v";
    }
    return "?";
}

TransformSpec sample_transform_spec(SeedStream rng, const AugmentConfig& cfg) {
    if (cfg.include_prob < 0.0 || cfg.include_prob > 1.0) {
        throw ConfigError("augment.include_prob must lie in [0,1]");
    }
    auto gen = make_rng(rng);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    TransformSpec spec;
    for (Transform tf : kTransformSet) {
        if (coin(gen) >= cfg.include_prob) continue;
        double sigma = 1.0;
        switch (tf) {
            case Transform::Rotate: sigma = cfg.sigma_rotate; break;
            case Transform::Scale: sigma = cfg.sigma_scale; break;
            case Transform::Translate: sigma = cfg.sigma_translate; break;
            default: break;  // flips ignore magnitude
        }
        std::normal_distribution<double> mag(0.0, sigma);
        spec.q.push_back(tf);
        spec.magnitudes.push_back(mag(gen));
    }
    return spec;
}

Grid rst(const Grid& img, const TransformSpec& spec) {
    if (spec.q.size() != spec.magnitudes.size()) {
        throw ConfigError("transform spec has mismatched q / magnitude lengths");
    }
    if (spec.q.empty()) {
        return img;
    }
    Grid out = img;
    for (std::size_t k = 0; k < spec.q.size(); ++k) {
        const double m = spec.magnitudes[k];
        switch (spec.q[k]) {
            case Transform::Rotate:
                out = rotate(out, m * kDegPerUnit);
                break;
            case Transform::Scale:
                out = scale(out, std::clamp(1.0 + kScalePerUnit * m, kScaleMin, kScaleMax));
                break;
            case Transform::Translate:
                out = translate(out, m * kPixPerUnit);
                break;
            case Transform::FlipH:
                out = out.rowwise().reverse().eval();
                break;
            case Transform::FlipV:
                out = out.colwise().reverse().eval();
                break;
        }
    }
    return out;
}

}  // namespace ciatr
