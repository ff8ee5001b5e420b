#pragma once

#include <array>
#include <vector>

#include "ciatr/configs.hpp"
#include "ciatr/types.hpp"

namespace ciatr {

/// The complete transformation set TF, in application order.
enum class Transform { Rotate, Scale, Translate, FlipH, FlipV };

inline constexpr std::array<Transform, 5> kTransformSet = {
    Transform::Rotate, Transform::Scale, Transform::Translate,
    Transform::FlipH, Transform::FlipV};

const char* transform_name(Transform tf);

/// A sampled transform combination q with one magnitude per member.
/// Members appear at most once, ordered as in kTransformSet.
struct TransformSpec {
    std::vector<Transform> q;
    std::vector<double> magnitudes;
};

/// Includes each TF member independently with probability cfg.include_prob
/// and draws its magnitude from Normal(0, sigma). Flip magnitudes are drawn
/// (Normal(0,1)) but ignored by rst.
TransformSpec sample_transform_spec(SeedStream rng, const AugmentConfig& cfg);

/// Applies spec.q in order with bilinear interpolation and zero padding:
///   rotate by M*15 degrees, scale by clamp(1 + 0.1*M, [0.7, 1.3]),
///   translate by M*3 pixels on both axes, flips mirror exactly.
/// Output dimensions equal input dimensions.
Grid rst(const Grid& img, const TransformSpec& spec);

}  // namespace ciatr
