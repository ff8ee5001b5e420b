#include "ciatr/similarity.hpp"

#include <cmath>

namespace ciatr {

namespace {

constexpr double kNormEps = 1e-12;
constexpr double kRangeFloor = 1e-6;

struct ArgMaxAbs {
    double value = 0.0;  // max |entry| over the whole stack
    int channel = 0;
    int row = 0;
    int col = 0;
    double sign = 1.0;
};

ArgMaxAbs max_abs(const ChannelStack& s) {
    ArgMaxAbs m;
    for (std::size_t c = 0; c < s.size(); ++c) {
        for (Eigen::Index i = 0; i < s[c].rows(); ++i) {
            for (Eigen::Index j = 0; j < s[c].cols(); ++j) {
                const double v = std::abs(s[c](i, j));
                if (v > m.value) {
                    m.value = v;
                    m.channel = static_cast<int>(c);
                    m.row = static_cast<int>(i);
                    m.col = static_cast<int>(j);
                    m.sign = s[c](i, j) < 0.0 ? -1.0 : 1.0;
                }
            }
        }
    }
    return m;
}

void require_same_shape(const ChannelStack& a, const ChannelStack& b) {
    if (a.size() != b.size() || a.empty()) {
        throw ShapeError("stm: channel count mismatch");
    }
    for (std::size_t c = 0; c < a.size(); ++c) {
        if (a[c].rows() != b[c].rows() || a[c].cols() != b[c].cols()) {
            throw ShapeError("stm: channel shape mismatch");
        }
        if (a[c].rows() < kSsimWindow || a[c].cols() < kSsimWindow) {
            throw ShapeError("stm: spatial extent below the 8x8 window");
        }
    }
}

// inclusive-exclusive 2D prefix sums: P(i+1, j+1) = sum over [0,i]x[0,j]
Grid prefix(const Grid& g) {
    Grid p = Grid::Zero(g.rows() + 1, g.cols() + 1);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
            p(i + 1, j + 1) = g(i, j) + p(i, j + 1) + p(i + 1, j) - p(i, j);
        }
    }
    return p;
}

double box(const Grid& p, int r0, int c0, int r1, int c1) {  // [r0,r1) x [c0,c1)
    return p(r1, c1) - p(r0, c1) - p(r1, c0) + p(r0, c0);
}

struct StmResult {
    double value = 0.0;
    double d_value_dL = 0.0;  // sensitivity to the dynamic range
};

// One pass computes the mean SSIM; with gradients requested it also fills
// per-channel coefficient maps whose box sums give d stm / d pixel (the
// per-window derivative is affine in the pixel values: alpha + beta*a + gamma*b).
StmResult stm_impl(const ChannelStack& a, const ChannelStack& b, double L,
                   ChannelStack* da, ChannelStack* db) {
    const int ch = static_cast<int>(a.size());
    const int h = static_cast<int>(a[0].rows());
    const int w = static_cast<int>(a[0].cols());
    const int wh = h - kSsimWindow + 1;
    const int ww = w - kSsimWindow + 1;
    const double N = static_cast<double>(kSsimWindow) * kSsimWindow;
    const double c1 = (kSsimK1 * L) * (kSsimK1 * L);
    const double c2 = (kSsimK2 * L) * (kSsimK2 * L);
    const double total = static_cast<double>(ch) * wh * ww;

    StmResult res;
    for (int c = 0; c < ch; ++c) {
        const Grid pa = prefix(a[c]);
        const Grid pb = prefix(b[c]);
        const Grid paa = prefix(a[c] * a[c]);
        const Grid pbb = prefix(b[c] * b[c]);
        const Grid pab = prefix(a[c] * b[c]);

        Grid alpha_a, beta_a, gamma_a, alpha_b, beta_b, gamma_b;
        if (da != nullptr) {
            alpha_a = Grid::Zero(wh, ww);
            beta_a = Grid::Zero(wh, ww);
            gamma_a = Grid::Zero(wh, ww);
            alpha_b = Grid::Zero(wh, ww);
            beta_b = Grid::Zero(wh, ww);
            gamma_b = Grid::Zero(wh, ww);
        }

        for (int y = 0; y < wh; ++y) {
            for (int x = 0; x < ww; ++x) {
                const int r1 = y + kSsimWindow;
                const int x1 = x + kSsimWindow;
                const double sa = box(pa, y, x, r1, x1);
                const double sb = box(pb, y, x, r1, x1);
                const double saa = box(paa, y, x, r1, x1);
                const double sbb = box(pbb, y, x, r1, x1);
                const double sab = box(pab, y, x, r1, x1);
                const double mu_a = sa / N;
                const double mu_b = sb / N;
                const double var_a = saa / N - mu_a * mu_a;
                const double var_b = sbb / N - mu_b * mu_b;
                const double cov = sab / N - mu_a * mu_b;

                const double n1 = 2.0 * mu_a * mu_b + c1;
                const double d1 = mu_a * mu_a + mu_b * mu_b + c1;
                const double n2 = 2.0 * cov + c2;
                const double d2 = var_a + var_b + c2;
                const double lum = n1 / d1;
                const double str = n2 / d2;
                res.value += lum * str;
                res.d_value_dL += (str * (1.0 - lum) / d1) * (2.0 * kSsimK1 * kSsimK1 * L) +
                                  (lum * (1.0 - str) / d2) * (2.0 * kSsimK2 * kSsimK2 * L);

                if (da != nullptr) {
                    // d s / d a_i = alpha + beta*a_i + gamma*b_i for i in window
                    const double la = 2.0 * str / (N * d1);
                    const double lc = 2.0 * lum / (N * d2);
                    beta_a(y, x) = -lc * str;
                    gamma_a(y, x) = lc;
                    alpha_a(y, x) = la * (mu_b - lum * mu_a) + lc * (str * mu_a - mu_b);
                    beta_b(y, x) = -lc * str;
                    gamma_b(y, x) = lc;
                    alpha_b(y, x) = la * (mu_a - lum * mu_b) + lc * (str * mu_b - mu_a);
                }
            }
        }

        if (da != nullptr) {
            const Grid Pal_a = prefix(alpha_a), Pbe_a = prefix(beta_a), Pga_a = prefix(gamma_a);
            const Grid Pal_b = prefix(alpha_b), Pbe_b = prefix(beta_b), Pga_b = prefix(gamma_b);
            Grid& ga = (*da)[c];
            Grid& gb = (*db)[c];
            for (int i = 0; i < h; ++i) {
                const int y0 = std::max(0, i - kSsimWindow + 1);
                const int y1 = std::min(wh - 1, i) + 1;
                if (y0 >= y1) continue;
                for (int j = 0; j < w; ++j) {
                    const int x0 = std::max(0, j - kSsimWindow + 1);
                    const int x1 = std::min(ww - 1, j) + 1;
                    if (x0 >= x1) continue;
                    ga(i, j) += (box(Pal_a, y0, x0, y1, x1) +
                                 a[c](i, j) * box(Pbe_a, y0, x0, y1, x1) +
                                 b[c](i, j) * box(Pga_a, y0, x0, y1, x1)) /
                                total;
                    gb(i, j) += (box(Pal_b, y0, x0, y1, x1) +
                                 b[c](i, j) * box(Pbe_b, y0, x0, y1, x1) +
                                 a[c](i, j) * box(Pga_b, y0, x0, y1, x1)) /
                                total;
                }
            }
        }
    }
    res.value /= total;
    res.d_value_dL /= total;
    return res;
}

}  // namespace

double stm(const ChannelStack& a, const ChannelStack& b) {
    require_same_shape(a, b);
    const double L = std::max({max_abs(a).value, max_abs(b).value, kRangeFloor});
    return stm_impl(a, b, L, nullptr, nullptr).value;
}

double vam(const Vec& u, const Vec& v) {
    if (u.size() != v.size()) {
        throw ShapeError("vam: length mismatch");
    }
    const double nu = std::max(u.norm(), kNormEps);
    const double nv = std::max(v.norm(), kNormEps);
    const double raw = u.dot(v) / (nu * nv);
    return std::clamp(raw, -1.0, 1.0);
}

HybridScore hm(const FeatureBundle& A, const FeatureBundle& B) {
    HybridScore score;
    score.stm = stm(A.feature_map, B.feature_map);
    score.vam = vam(A.feature_vector, B.feature_vector);
    score.hm = score.stm + score.vam;
    return score;
}

BundleGrad zero_bundle_grad(const FeatureBundle& like) {
    BundleGrad g;
    g.d_map.reserve(like.feature_map.size());
    for (const Grid& ch : like.feature_map) {
        g.d_map.push_back(Grid::Zero(ch.rows(), ch.cols()));
    }
    g.d_vec = Vec::Zero(like.feature_vector.size());
    return g;
}

void hm_backward(const FeatureBundle& A, const FeatureBundle& B, double d_hm,
                 BundleGrad& dA, BundleGrad& dB) {
    require_same_shape(A.feature_map, B.feature_map);
    if (d_hm == 0.0) {
        return;
    }

    // stm part
    const ArgMaxAbs ma = max_abs(A.feature_map);
    const ArgMaxAbs mb = max_abs(B.feature_map);
    const double L = std::max({ma.value, mb.value, kRangeFloor});
    ChannelStack da, db;
    for (const Grid& ch : A.feature_map) {
        da.push_back(Grid::Zero(ch.rows(), ch.cols()));
        db.push_back(Grid::Zero(ch.rows(), ch.cols()));
    }
    const StmResult r = stm_impl(A.feature_map, B.feature_map, L, &da, &db);
    // chain through L = max(|a|, |b|, floor) at the winning entry
    if (ma.value > mb.value && ma.value > kRangeFloor) {
        da[ma.channel](ma.row, ma.col) += ma.sign * r.d_value_dL;
    } else if (mb.value > ma.value && mb.value > kRangeFloor) {
        db[mb.channel](mb.row, mb.col) += mb.sign * r.d_value_dL;
    }
    for (std::size_t c = 0; c < da.size(); ++c) {
        dA.d_map[c] += d_hm * da[c];
        dB.d_map[c] += d_hm * db[c];
    }

    // vam part
    const Vec& u = A.feature_vector;
    const Vec& v = B.feature_vector;
    const double nu = std::max(u.norm(), kNormEps);
    const double nv = std::max(v.norm(), kNormEps);
    const double raw = u.dot(v) / (nu * nv);
    if (raw > -1.0 && raw < 1.0) {
        Vec du = v / (nu * nv);
        Vec dv = u / (nu * nv);
        if (u.norm() > kNormEps) du -= raw * u / (nu * nu);
        if (v.norm() > kNormEps) dv -= raw * v / (nv * nv);
        dA.d_vec += d_hm * du;
        dB.d_vec += d_hm * dv;
    }
}

}  // namespace ciatr
