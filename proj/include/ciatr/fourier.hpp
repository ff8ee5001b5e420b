#pragma once

#include <vector>

#include "ciatr/configs.hpp"
#include "ciatr/types.hpp"

namespace ciatr {

/// Unnormalized forward 2D DFT (radix-2). Satisfies Parseval with the
/// convention sum|F|^2 = h*w * sum|x|^2.
ComplexGrid fft2(const Grid& img);
ComplexGrid fft2(const ComplexGrid& img);

/// Inverse 2D DFT; carries the full 1/(h*w) normalization.
ComplexGrid ifft2(const ComplexGrid& spec);

/// Random frequency mask parameters.
///
/// The unshifted spectrum is tiled by rm_re x rm_re patches indexed row-major
/// over the (h/rm_re) x (w/rm_re) patch grid; patch 0 holds the DC
/// coefficient and is never maskable. rm_l lists the zeroed patches.
struct MaskSpec {
    int rm_re = 8;
    double rm_ra = 0.0;
    std::vector<int> rm_l;
};

/// Throws ConfigError if the mask does not tile an h x w spectrum or violates
/// the MaskSpec invariants (count, range, DC exclusion, duplicates).
void require_valid_mask(const MaskSpec& mask, int h, int w);

/// Draws rm_re uniformly from cfg.rm_re_choices, rm_ra uniformly from
/// [0, cfg.ra_max], and round(rm_ra * num_patches) patch indices uniformly
/// without replacement from the non-DC patches.
MaskSpec sample_mask_spec(int h, int w, SeedStream rng, const AugmentConfig& cfg);

/// Zeroes every coefficient of the masked patches and the Hermitian mirror
/// position of each, so a real image stays real after ifft2. All other
/// coefficients pass through unchanged.
ComplexGrid rfm(const ComplexGrid& spec, const MaskSpec& mask);

}  // namespace ciatr
