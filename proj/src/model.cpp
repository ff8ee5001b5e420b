#include "ciatr/model.hpp"

#include <cmath>

#include "ciatr/core.hpp"

namespace ciatr {

namespace {

// im2col for 3x3 same-padding convolution. in: (channels x h*w) activations,
// out: (channels*9 x h*w); row c*9 + (di+1)*3 + (dj+1) holds channel c
// shifted by (di, dj), zero outside the frame.
Mat im2col3x3(const Mat& in, int h, int w) {
    const int ch = static_cast<int>(in.rows());
    Mat out = Mat::Zero(ch * 9, h * w);
    for (int c = 0; c < ch; ++c) {
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                const int row = c * 9 + (di + 1) * 3 + (dj + 1);
                for (int i = 0; i < h; ++i) {
                    const int si = i + di;
                    if (si < 0 || si >= h) continue;
                    for (int j = 0; j < w; ++j) {
                        const int sj = j + dj;
                        if (sj < 0 || sj >= w) continue;
                        out(row, i * w + j) = in(c, si * w + sj);
                    }
                }
            }
        }
    }
    return out;
}

// Adjoint of im2col3x3: scatters (channels*9 x h*w) gradients back onto the
// (channels x h*w) input layout.
Mat col2im3x3(const Mat& cols, int h, int w, int ch) {
    Mat out = Mat::Zero(ch, h * w);
    for (int c = 0; c < ch; ++c) {
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                const int row = c * 9 + (di + 1) * 3 + (dj + 1);
                for (int i = 0; i < h; ++i) {
                    const int si = i + di;
                    if (si < 0 || si >= h) continue;
                    for (int j = 0; j < w; ++j) {
                        const int sj = j + dj;
                        if (sj < 0 || sj >= w) continue;
                        out(c, si * w + sj) += cols(row, i * w + j);
                    }
                }
            }
        }
    }
    return out;
}

// 2x2 stride-2 max pool over ReLU(a). Ties break toward the first maximal
// element in row-major window order. argmax records the winning input pixel
// index per (channel, pooled pixel), laid out channel-major.
Mat maxpool2(const Mat& a, int h, int w, std::vector<int>& argmax) {
    const int ch = static_cast<int>(a.rows());
    const int ph = h / 2;
    const int pw = w / 2;
    Mat out(ch, ph * pw);
    argmax.assign(static_cast<std::size_t>(ch) * ph * pw, 0);
    for (int c = 0; c < ch; ++c) {
        for (int i = 0; i < ph; ++i) {
            for (int j = 0; j < pw; ++j) {
                double best = -1.0;  // ReLU output is >= 0
                int best_p = (2 * i) * w + (2 * j);
                for (int di = 0; di < 2; ++di) {
                    for (int dj = 0; dj < 2; ++dj) {
                        const int p = (2 * i + di) * w + (2 * j + dj);
                        const double v = std::max(a(c, p), 0.0);
                        if (v > best) {
                            best = v;
                            best_p = p;
                        }
                    }
                }
                out(c, i * pw + j) = best;
                argmax[static_cast<std::size_t>(c) * ph * pw + i * pw + j] = best_p;
            }
        }
    }
    return out;
}

// Routes pooled-output gradients to the recorded winners, then gates by the
// ReLU mask (derivative 0 at a <= 0).
Mat unpool2(const Mat& d_pooled, const Mat& a, int h, int w,
            const std::vector<int>& argmax) {
    const int ch = static_cast<int>(a.rows());
    const int ph = h / 2;
    const int pw = w / 2;
    Mat out = Mat::Zero(ch, h * w);
    for (int c = 0; c < ch; ++c) {
        for (int q = 0; q < ph * pw; ++q) {
            const int p = argmax[static_cast<std::size_t>(c) * ph * pw + q];
            if (a(c, p) > 0.0) {
                out(c, p) += d_pooled(c, q);
            }
        }
    }
    return out;
}

void require_geometry(const ModelParams& params, const Grid& img) {
    if (img.rows() != params.input_h || img.cols() != params.input_w) {
        throw ShapeError("image " + std::to_string(img.rows()) + "x" +
                         std::to_string(img.cols()) + " does not match model input " +
                         std::to_string(params.input_h) + "x" +
                         std::to_string(params.input_w));
    }
}

}  // namespace

int feature_dim(int h, int w) { return kConv2Out * (h / 4) * (w / 4); }

ModelParams init_params(SeedStream rng, int h, int w, int num_classes) {
    if (h % 4 != 0 || w % 4 != 0) {
        throw ShapeError("model input dimensions must be divisible by 4");
    }
    auto gen = make_rng(rng);
    auto he_fill = [&gen](Mat& m, int fan_in) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                m(r, c) = dist(gen);
            }
        }
    };
    ModelParams p;
    p.input_h = h;
    p.input_w = w;
    p.num_classes = num_classes;
    p.conv1_w = Mat(kConv1Out, 9);
    he_fill(p.conv1_w, 9);
    p.conv1_b = Vec::Zero(kConv1Out);
    p.conv2_w = Mat(kConv2Out, kConv1Out * 9);
    he_fill(p.conv2_w, kConv1Out * 9);
    p.conv2_b = Vec::Zero(kConv2Out);
    const int F = feature_dim(h, w);
    p.lin_w = Mat(num_classes, F);
    he_fill(p.lin_w, F);
    p.lin_b = Vec::Zero(num_classes);
    return p;
}

GradientBundle zero_gradients(const ModelParams& params) {
    GradientBundle g;
    g.conv1_w = Mat::Zero(params.conv1_w.rows(), params.conv1_w.cols());
    g.conv1_b = Vec::Zero(params.conv1_b.size());
    g.conv2_w = Mat::Zero(params.conv2_w.rows(), params.conv2_w.cols());
    g.conv2_b = Vec::Zero(params.conv2_b.size());
    g.lin_w = Mat::Zero(params.lin_w.rows(), params.lin_w.cols());
    g.lin_b = Vec::Zero(params.lin_b.size());
    return g;
}

FeatureBundle forward(const ModelParams& params, const Grid& img, ForwardTrace& trace) {
    require_geometry(params, img);
    const int h = params.input_h;
    const int w = params.input_w;

    // input as a 1 x h*w activation row, pixel index p = i*w + j
    Mat in(1, h * w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            in(0, i * w + j) = img(i, j);
        }
    }

    trace.x1 = im2col3x3(in, h, w);
    trace.a1 = (params.conv1_w * trace.x1).colwise() + params.conv1_b;
    trace.p1 = maxpool2(trace.a1, h, w, trace.argmax1);

    const int h2 = h / 2;
    const int w2 = w / 2;
    trace.x2 = im2col3x3(trace.p1, h2, w2);
    trace.a2 = (params.conv2_w * trace.x2).colwise() + params.conv2_b;
    trace.p2 = maxpool2(trace.a2, h2, w2, trace.argmax2);

    const int h4 = h / 4;
    const int w4 = w / 4;
    const int F = feature_dim(h, w);
    FeatureBundle out;
    out.feature_vector = Vec(F);
    out.feature_map.reserve(kConv2Out);
    for (int c = 0; c < kConv2Out; ++c) {
        Grid channel(h4, w4);
        for (int i = 0; i < h4; ++i) {
            for (int j = 0; j < w4; ++j) {
                const double v = trace.p2(c, i * w4 + j);
                channel(i, j) = v;
                out.feature_vector[(c * h4 + i) * w4 + j] = v;
            }
        }
        out.feature_map.push_back(std::move(channel));
    }
    out.logits = params.lin_w * out.feature_vector + params.lin_b;
    trace.feature_vector = out.feature_vector;
    trace.logits = out.logits;
    return out;
}

FeatureBundle forward(const ModelParams& params, const Grid& img) {
    ForwardTrace trace;
    return forward(params, img, trace);
}

GradientBundle backward(const ModelParams& params,
                        const std::vector<ForwardTrace>& traces,
                        const std::vector<FeatureGrad>& upstream) {
    if (traces.size() != upstream.size()) {
        throw ShapeError("backward: trace/upstream count mismatch");
    }
    const int h = params.input_h;
    const int w = params.input_w;
    const int h2 = h / 2;
    const int w2 = w / 2;
    const int h4 = h / 4;
    const int w4 = w / 4;
    const int F = feature_dim(h, w);

    GradientBundle g = zero_gradients(params);
    for (std::size_t s = 0; s < traces.size(); ++s) {
        const ForwardTrace& tr = traces[s];
        const FeatureGrad& up = upstream[s];

        Vec d_logits = up.d_logits.size() > 0 ? up.d_logits : Vec::Zero(params.num_classes);
        Vec d_vec = Vec::Zero(F);
        if (up.d_feature_vector.size() > 0) {
            d_vec += up.d_feature_vector;
        }
        if (!up.d_feature_map.empty()) {
            for (int c = 0; c < kConv2Out; ++c) {
                const Grid& dm = up.d_feature_map[c];
                for (int i = 0; i < h4; ++i) {
                    for (int j = 0; j < w4; ++j) {
                        d_vec[(c * h4 + i) * w4 + j] += dm(i, j);
                    }
                }
            }
        }

        g.lin_w.noalias() += d_logits * tr.feature_vector.transpose();
        g.lin_b += d_logits;
        d_vec.noalias() += params.lin_w.transpose() * d_logits;

        // back to the pooled conv2 layout (channels x pixels)
        Mat d_p2(kConv2Out, h4 * w4);
        for (int c = 0; c < kConv2Out; ++c) {
            for (int i = 0; i < h4; ++i) {
                for (int j = 0; j < w4; ++j) {
                    d_p2(c, i * w4 + j) = d_vec[(c * h4 + i) * w4 + j];
                }
            }
        }

        const Mat d_a2 = unpool2(d_p2, tr.a2, h2, w2, tr.argmax2);
        g.conv2_w.noalias() += d_a2 * tr.x2.transpose();
        g.conv2_b += d_a2.rowwise().sum();
        const Mat d_x2 = params.conv2_w.transpose() * d_a2;
        const Mat d_p1 = col2im3x3(d_x2, h2, w2, kConv1Out);

        const Mat d_a1 = unpool2(d_p1, tr.a1, h, w, tr.argmax1);
        g.conv1_w.noalias() += d_a1 * tr.x1.transpose();
        g.conv1_b += d_a1.rowwise().sum();
    }
    return g;
}

void sgd_step(ModelParams& params, const GradientBundle& grads, double lr,
              double momentum, GradientBundle& velocity) {
    auto step = [lr, momentum](auto& p, const auto& g, auto& v) {
        v = momentum * v + g;
        p -= lr * v;
    };
    step(params.conv1_w, grads.conv1_w, velocity.conv1_w);
    step(params.conv1_b, grads.conv1_b, velocity.conv1_b);
    step(params.conv2_w, grads.conv2_w, velocity.conv2_w);
    step(params.conv2_b, grads.conv2_b, velocity.conv2_b);
    step(params.lin_w, grads.lin_w, velocity.lin_w);
    step(params.lin_b, grads.lin_b, velocity.lin_b);
}

}  // namespace ciatr
