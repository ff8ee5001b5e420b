#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ciatr/core.hpp"
#include "ciatr/fourier.hpp"

using namespace ciatr;

namespace {

Grid random_grid(int h, int w, std::uint64_t seed) {
    auto gen = make_rng(SeedStream{seed, 99});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Grid img(h, w);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) img(i, j) = u(gen);
    return img;
}

// brute-force O(N^2) reference transform, independent of the radix-2 path
ComplexGrid naive_dft2(const Grid& img) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    ComplexGrid out(h, w);
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double phase = -2.0 * std::numbers::pi *
                                         (static_cast<double>(u) * i / h +
                                          static_cast<double>(v) * j / w);
                    acc += img(i, j) * std::complex<double>(std::cos(phase), std::sin(phase));
                }
            }
            out(u, v) = acc;
        }
    }
    return out;
}

double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b) {
    return (a - b).abs().maxCoeff();
}

AugmentConfig small_cfg() {
    AugmentConfig cfg;
    cfg.rm_re_choices = {4, 8};
    return cfg;
}

}  // namespace

TEST_CASE("constant image has a DC-only spectrum") {
    const Grid img = Grid::Constant(16, 16, 3.5);
    const ComplexGrid spec = fft2(img);
    CHECK(std::abs(spec(0, 0) - std::complex<double>(3.5 * 256, 0.0)) < 1e-9);
    double off_dc = 0.0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            if (i != 0 || j != 0) off_dc = std::max(off_dc, std::abs(spec(i, j)));
    CHECK(off_dc < 1e-9);
}

TEST_CASE("unit impulse transforms to the all-ones spectrum") {
    Grid img = Grid::Zero(16, 16);
    img(0, 0) = 1.0;
    const ComplexGrid spec = fft2(img);
    CHECK((spec - ComplexGrid::Constant(16, 16, 1.0)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("fft2 matches the naive DFT oracle on a 64x64 random image") {
    const Grid img = random_grid(64, 64, 1);
    CHECK(max_abs_diff(fft2(img), naive_dft2(img)) < 1e-8);
}

TEST_CASE("Parseval holds with the unnormalized-forward convention") {
    const Grid img = random_grid(32, 32, 2);
    const ComplexGrid spec = fft2(img);
    const double lhs = spec.abs2().sum();
    const double rhs = 32.0 * 32.0 * img.square().sum();
    CHECK(std::abs(lhs - rhs) / rhs < 1e-6);
}

TEST_CASE("ifft2 inverts fft2 to 1e-9") {
    const Grid img = random_grid(64, 64, 3);
    const ComplexGrid back = ifft2(fft2(img));
    CHECK((back.real() - img).abs().maxCoeff() < 1e-9);
    CHECK(back.imag().abs().maxCoeff() < 1e-9);
}

TEST_CASE("all-ones spectrum inverts to the unit impulse") {
    const ComplexGrid ones = ComplexGrid::Constant(16, 16, 1.0);
    const ComplexGrid img = ifft2(ones);
    CHECK(std::abs(img(0, 0) - 1.0) < 1e-12);
    double off = 0.0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            if (i != 0 || j != 0) off = std::max(off, std::abs(img(i, j)));
    CHECK(off < 1e-12);
}

TEST_CASE("ifft2 is linear") {
    const Grid f = random_grid(16, 16, 4);
    const Grid g = random_grid(16, 16, 5);
    const ComplexGrid F = fft2(f);
    const ComplexGrid G = fft2(g);
    const ComplexGrid lhs = ifft2(2.5 * F + (-1.25) * G);
    const ComplexGrid rhs = 2.5 * ifft2(F) + (-1.25) * ifft2(G);
    CHECK(max_abs_diff(lhs, rhs) < 1e-9);
}

TEST_CASE("fft2 rejects non-power-of-two input") {
    const Grid bad = Grid::Zero(12, 16);
    CHECK_THROWS_AS(fft2(bad), ShapeError);
}

TEST_CASE("mask sampling: zero ratio bound gives the empty mask") {
    AugmentConfig cfg = small_cfg();
    cfg.ra_max = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const MaskSpec mask = sample_mask_spec(64, 64, SeedStream{s, 0}, cfg);
        CHECK(mask.rm_l.empty());
        CHECK(mask.rm_ra == 0.0);
    }
}

TEST_CASE("64x64 spectrum with rm_re=8 tiles into 64 patches") {
    // patch count is h*w / rm_re^2
    MaskSpec mask;
    mask.rm_re = 8;
    const int num_patches = (64 / 8) * (64 / 8);
    CHECK(num_patches == 64);
    for (int p = 1; p < num_patches; ++p) mask.rm_l.push_back(p);
    mask.rm_ra = static_cast<double>(mask.rm_l.size()) / num_patches;
    CHECK_NOTHROW(require_valid_mask(mask, 64, 64));
}

TEST_CASE("mask ratio sampler has the expected mean over 10000 draws") {
    AugmentConfig cfg = small_cfg();
    cfg.ra_max = 0.3;
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        sum += sample_mask_spec(64, 64, SeedStream{s, 1}, cfg).rm_ra;
    }
    const double mean = sum / 10000.0;
    CHECK(mean > 0.145);
    CHECK(mean < 0.155);
}

TEST_CASE("sampled masks satisfy their own invariants") {
    AugmentConfig cfg;
    cfg.rm_re_choices = {4, 8, 16};
    cfg.ra_max = 1.0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const MaskSpec mask = sample_mask_spec(64, 64, SeedStream{s, 2}, cfg);
        CHECK_NOTHROW(require_valid_mask(mask, 64, 64));
    }
}

TEST_CASE("rfm with an empty mask is bitwise identity") {
    const Grid img = random_grid(32, 32, 6);
    const ComplexGrid spec = fft2(img);
    MaskSpec mask;
    mask.rm_re = 8;
    mask.rm_ra = 0.0;
    const ComplexGrid out = rfm(spec, mask);
    bool identical = true;
    for (int i = 0; i < 32 && identical; ++i) {
        for (int j = 0; j < 32; ++j) {
            if (out(i, j) != spec(i, j)) {
                identical = false;
                break;
            }
        }
    }
    CHECK(identical);
}

TEST_CASE("masking every non-DC patch leaves the constant mean image") {
    const Grid img = random_grid(64, 64, 7);
    MaskSpec mask;
    mask.rm_re = 16;
    const int num_patches = 16;
    for (int p = 1; p < num_patches; ++p) mask.rm_l.push_back(p);
    mask.rm_ra = static_cast<double>(num_patches - 1) / num_patches;
    const ComplexGrid out = ifft2(rfm(fft2(img), mask));
    const double mean = img.mean();
    CHECK((out.real() - mean).abs().maxCoeff() < 1e-9);
    CHECK(out.imag().abs().maxCoeff() < 1e-9);
}

TEST_CASE("masked real images stay real after inversion") {
    AugmentConfig cfg;
    cfg.rm_re_choices = {4, 8, 16};
    cfg.ra_max = 0.5;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Grid img = random_grid(64, 64, 100 + s);
        const MaskSpec mask = sample_mask_spec(64, 64, SeedStream{s, 3}, cfg);
        const ComplexGrid out = ifft2(rfm(fft2(img), mask));
        CHECK(out.imag().abs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("rfm never increases spectral energy and is idempotent") {
    AugmentConfig cfg = small_cfg();
    cfg.ra_max = 0.6;
    for (std::uint64_t s = 0; s < 25; ++s) {
        const Grid img = random_grid(32, 32, 200 + s);
        const ComplexGrid spec = fft2(img);
        const MaskSpec mask = sample_mask_spec(32, 32, SeedStream{s, 4}, cfg);
        const ComplexGrid once = rfm(spec, mask);
        CHECK(once.abs2().sum() <= spec.abs2().sum() + 1e-9);
        const ComplexGrid twice = rfm(once, mask);
        CHECK(max_abs_diff(once, twice) == 0.0);
    }
}

TEST_CASE("rfm rejects a mask that does not tile the spectrum") {
    const ComplexGrid spec = fft2(random_grid(32, 32, 8));
    MaskSpec mask;
    mask.rm_re = 12;  // 12 does not divide 32
    mask.rm_ra = 0.0;
    CHECK_THROWS_AS(rfm(spec, mask), ConfigError);
}
