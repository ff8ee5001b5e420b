#pragma once

#include <vector>

#include "ciatr/types.hpp"

namespace ciatr {

// Fixed backbone: conv(3x3, pad 1, 8 ch) -> ReLU -> maxpool 2x2
//              -> conv(3x3, pad 1, 16 ch) -> ReLU -> maxpool 2x2
//              -> flatten -> linear.
inline constexpr int kConv1Out = 8;
inline constexpr int kConv2Out = 16;
inline constexpr int kKernel = 3;

/// Learnable parameters plus the input geometry they were built for.
/// Convolution kernels are stored GEMM-ready as (out_ch x in_ch*9) matrices;
/// kernel row layout is in_ch-major then kernel-row-major.
struct ModelParams {
    int input_h = 0;
    int input_w = 0;
    int num_classes = 0;
    Mat conv1_w;  // 8 x 9
    Vec conv1_b;  // 8
    Mat conv2_w;  // 16 x 72
    Vec conv2_b;  // 16
    Mat lin_w;    // C x F,   F = 16 * (h/4) * (w/4)
    Vec lin_b;    // C
};

/// Same shapes as ModelParams; accumulates loss gradients.
struct GradientBundle {
    Mat conv1_w;
    Vec conv1_b;
    Mat conv2_w;
    Vec conv2_b;
    Mat lin_w;
    Vec lin_b;
};

/// The mediator features for one image: last conv activation as a channel
/// stack, its channel-major row-major flattening, and the class logits.
struct FeatureBundle {
    ChannelStack feature_map;  // 16 x (h/4) x (w/4)
    Vec feature_vector;        // F
    Vec logits;                // C
};

/// Everything backward needs to replay one forward pass. Activation matrices
/// are (channels x pixels) with pixel index p = i*w + j.
struct ForwardTrace {
    Mat x1;  // 9 x h*w          im2col of the input
    Mat a1;  // 8 x h*w          conv1 pre-activation
    Mat p1;  // 8 x h*w/4        pooled ReLU(a1)
    std::vector<int> argmax1;    // pool1 winner pixel per (channel, pooled pixel)
    Mat x2;  // 72 x h*w/4       im2col of p1
    Mat a2;  // 16 x h*w/4       conv2 pre-activation
    Mat p2;  // 16 x h*w/16      pooled ReLU(a2)
    std::vector<int> argmax2;
    Vec feature_vector;
    Vec logits;
};

/// Upstream gradients for one sample. L_ce injects at the logits, L_d at the
/// feature map / vector; any entry may be empty (treated as zero).
struct FeatureGrad {
    ChannelStack d_feature_map;
    Vec d_feature_vector;
    Vec d_logits;
};

int feature_dim(int h, int w);

/// He-normal weights (Normal(0, sqrt(2/fan_in))), zero biases.
ModelParams init_params(SeedStream rng, int h, int w, int num_classes);

GradientBundle zero_gradients(const ModelParams& params);

FeatureBundle forward(const ModelParams& params, const Grid& img);
FeatureBundle forward(const ModelParams& params, const Grid& img, ForwardTrace& trace);

/// Exact reverse-mode gradients of the scalar loss whose per-sample upstream
/// gradients are given; contributions from the logits and feature paths are
/// summed into one bundle.
GradientBundle backward(const ModelParams& params,
                        const std::vector<ForwardTrace>& traces,
                        const std::vector<FeatureGrad>& upstream);

/// v <- momentum*v + grads; params <- params - lr*v.
void sgd_step(ModelParams& params, const GradientBundle& grads, double lr,
              double momentum, GradientBundle& velocity);

}  // namespace ciatr
