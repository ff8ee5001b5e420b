#pragma once

#include "ciatr/model.hpp"
#include "ciatr/types.hpp"

namespace ciatr {

/// SSIM window edge (uniform window, stride 1) and stability constants.
inline constexpr int kSsimWindow = 8;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

struct HybridScore {
    double stm = 0.0;
    double vam = 0.0;
    double hm = 0.0;  // stm + vam, exactly
};

/// Mean SSIM over all channels and all 8x8 sliding windows (population
/// window statistics). Dynamic range L = max(|a|_inf, |b|_inf, 1e-6) sets
/// C1 = (K1*L)^2, C2 = (K2*L)^2.
double stm(const ChannelStack& a, const ChannelStack& b);

/// Cosine of the angle between u and v with an epsilon guard on the norms,
/// clamped to [-1, 1].
double vam(const Vec& u, const Vec& v);

HybridScore hm(const FeatureBundle& A, const FeatureBundle& B);

/// Gradients of hm with respect to one bundle's features.
struct BundleGrad {
    ChannelStack d_map;
    Vec d_vec;
};

BundleGrad zero_bundle_grad(const FeatureBundle& like);

/// Accumulates d_hm * d hm/d features into dA and dB. Exact up to the
/// non-differentiable points (vam clamp, L argmax ties); the dependence of
/// C1/C2 on L is included at the argmax entry.
void hm_backward(const FeatureBundle& A, const FeatureBundle& B, double d_hm,
                 BundleGrad& dA, BundleGrad& dB);

}  // namespace ciatr
