#include "ciatr/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ciatr/core.hpp"

namespace ciatr {

namespace {

using Cplx = std::complex<double>;

// In-place radix-2 Cooley-Tukey on a strided slice of length n (power of two).
// sign = -1 forward, +1 inverse (unscaled).
void fft1d(Cplx* data, int n, int stride, int sign) {
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i * stride], data[j * stride]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / len;
        const Cplx wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            Cplx w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                Cplx u = data[(i + k) * stride];
                Cplx v = data[(i + k + len / 2) * stride] * w;
                data[(i + k) * stride] = u + v;
                data[(i + k + len / 2) * stride] = u - v;
                w *= wlen;
            }
        }
    }
}

ComplexGrid transform2d(const ComplexGrid& in, int sign) {
    const int h = static_cast<int>(in.rows());
    const int w = static_cast<int>(in.cols());
    if (!is_pow2(h) || !is_pow2(w)) {
        throw ShapeError("fft2/ifft2 require power-of-two dimensions, got " +
                         std::to_string(h) + "x" + std::to_string(w));
    }
    ComplexGrid out = in;
    // Eigen arrays are column-major: a column is contiguous (stride 1 over
    // rows), a row has stride h.
    for (int j = 0; j < w; ++j) fft1d(out.data() + j * h, h, 1, sign);
    for (int i = 0; i < h; ++i) fft1d(out.data() + i, w, h, sign);
    return out;
}

}  // namespace

ComplexGrid fft2(const ComplexGrid& img) { return transform2d(img, -1); }

ComplexGrid fft2(const Grid& img) {
    return fft2(ComplexGrid(img.cast<Cplx>()));
}

ComplexGrid ifft2(const ComplexGrid& spec) {
    ComplexGrid out = transform2d(spec, +1);
    out /= static_cast<double>(spec.rows() * spec.cols());
    return out;
}

void require_valid_mask(const MaskSpec& mask, int h, int w) {
    if (mask.rm_re <= 0 || h % mask.rm_re != 0 || w % mask.rm_re != 0) {
        throw ConfigError("mask patch edge " + std::to_string(mask.rm_re) +
                          " does not tile a " + std::to_string(h) + "x" +
                          std::to_string(w) + " spectrum");
    }
    if (mask.rm_ra < 0.0 || mask.rm_ra > 1.0) {
        throw ConfigError("mask ratio must lie in [0,1]");
    }
    const int num_patches = (h / mask.rm_re) * (w / mask.rm_re);
    const auto expect = static_cast<std::size_t>(std::llround(mask.rm_ra * num_patches));
    if (mask.rm_l.size() != expect) {
        throw ConfigError("mask patch count " + std::to_string(mask.rm_l.size()) +
                          " does not match round(rm_ra * num_patches) = " +
                          std::to_string(expect));
    }
    std::vector<int> sorted = mask.rm_l;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted[k] <= 0 || sorted[k] >= num_patches) {
            throw ConfigError("mask patch index out of range (or DC patch)");
        }
        if (k > 0 && sorted[k] == sorted[k - 1]) {
            throw ConfigError("duplicate mask patch index");
        }
    }
}

MaskSpec sample_mask_spec(int h, int w, SeedStream rng, const AugmentConfig& cfg) {
    auto gen = make_rng(rng);
    MaskSpec mask;
    if (cfg.rm_re_choices.empty()) {
        throw ConfigError("augment.rm_re_choices must not be empty");
    }
    for (int re : cfg.rm_re_choices) {
        if (re <= 0 || h % re != 0 || w % re != 0) {
            throw ConfigError("augment.rm_re_choices entry " + std::to_string(re) +
                              " does not divide " + std::to_string(h) + "x" +
                              std::to_string(w));
        }
    }
    std::uniform_int_distribution<std::size_t> pick(0, cfg.rm_re_choices.size() - 1);
    mask.rm_re = cfg.rm_re_choices[pick(gen)];
    std::uniform_real_distribution<double> ratio(0.0, cfg.ra_max);
    mask.rm_ra = cfg.ra_max > 0.0 ? ratio(gen) : 0.0;

    const int num_patches = (h / mask.rm_re) * (w / mask.rm_re);
    const int count = static_cast<int>(std::llround(mask.rm_ra * num_patches));
    // partial Fisher-Yates over the non-DC patches [1, num_patches)
    std::vector<int> pool(num_patches - 1);
    for (int i = 0; i < num_patches - 1; ++i) pool[i] = i + 1;
    const int take = std::min(count, num_patches - 1);
    for (int i = 0; i < take; ++i) {
        std::uniform_int_distribution<int> slot(i, num_patches - 2);
        std::swap(pool[i], pool[slot(gen)]);
    }
    mask.rm_l.assign(pool.begin(), pool.begin() + take);
    // rm_ra may round to more patches than exist without DC; clamp and keep
    // the invariant |rm_l| = round(rm_ra * num_patches) by lowering rm_ra.
    if (take < count) {
        mask.rm_ra = static_cast<double>(take) / num_patches;
    }
    require_valid_mask(mask, h, w);
    return mask;
}

ComplexGrid rfm(const ComplexGrid& spec, const MaskSpec& mask) {
    const int h = static_cast<int>(spec.rows());
    const int w = static_cast<int>(spec.cols());
    require_valid_mask(mask, h, w);
    if (mask.rm_l.empty()) {
        return spec;
    }
    ComplexGrid out = spec;
    const int patches_per_row = w / mask.rm_re;
    for (int p : mask.rm_l) {
        const int pr = p / patches_per_row;
        const int pc = p % patches_per_row;
        const int r0 = pr * mask.rm_re;
        const int c0 = pc * mask.rm_re;
        for (int i = r0; i < r0 + mask.rm_re; ++i) {
            for (int j = c0; j < c0 + mask.rm_re; ++j) {
                out(i, j) = 0.0;
                out((h - i) % h, (w - j) % w) = 0.0;  // Hermitian mirror
            }
        }
    }
    return out;
}

}  // namespace ciatr
