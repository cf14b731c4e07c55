#pragma once

// Alignment of the 550 nm sub-image onto the 620 nm reference.
//
// Transforms act on centred pixel coordinates q = p - c, where c is the
// image centre ((w-1)/2, (h-1)/2):  q' = scale * R(rotation) * q + (dx, dy).
// estimate_transform(moving, reference) returns t such that
// apply_transform(reference, t) reproduces moving.

#include "mpyro/image.hpp"
#include "mpyro/segmentation.hpp"

#include <optional>
#include <string>

namespace mpyro {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct SimilarityTransform {
    double scale = 1.0;
    double rotation = 0.0; // radians, counter-clockwise in (x right, y down) pixel axes
    double dx = 0.0;
    double dy = 0.0;

    static SimilarityTransform identity() { return {}; }

    Vec2 apply(Vec2 q) const;
    SimilarityTransform inverse() const;
    /// (*this)(other(q))
    SimilarityTransform compose(const SimilarityTransform& other) const;
};

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double dynamic_range = 65535.0;
    double k1 = 0.01;
    double k2 = 0.03;
};

struct RegistrationParams {
    int upscale_factor = 3;
    double ssim_gate = 0.80;
    /// Minimum normalized phase-correlation peak of the translation step.
    double min_peak = 0.02;
    /// Minimum normalized cross-correlation after refinement.
    double min_correlation = 0.5;
    int refine_iterations = 60;
    /// Gaussian pre-smoothing (pixels of the estimation grid) applied to both
    /// images before refinement; 0 disables it.
    double refine_smoothing = 2.0;
    SegmentationParams segmentation;
    SsimParams ssim;

    void validate() const;
};

struct RegistrationResult {
    SimilarityTransform transform; // in original (not upscaled) pixel units
    double ssim = 0.0;
    bool accepted = false;
    SubImage warped; // moving aligned onto the reference grid
    /// Reference passed through the same up/down resampling as `warped`, so
    /// pixel-wise ratios see matched interpolation blur.
    SubImage reference_resampled;
    std::string reason; // empty when accepted
};

/// Bilinear resampling onto a factor-times denser grid, pixel centres aligned.
SubImage upscale_image(const SubImage& img, int factor);

/// factor x factor box average; dimensions must be divisible by factor.
SubImage downscale_image(const SubImage& img, int factor);

/// out(p) = img(t^-1(p)) sampled bilinearly; samples falling outside img are 0.
SubImage apply_transform(const SubImage& img, const SimilarityTransform& t, int out_width, int out_height);

/// Mean local SSIM (Gaussian window, replicate borders). With a mask, the
/// local SSIM map is averaged over masked pixels only.
double ssim(const SubImage& a, const SubImage& b, const SsimParams& params = {}, const Mask* mask = nullptr);

/// Log-polar phase correlation of windowed magnitude spectra for scale and
/// rotation, phase correlation for translation, then Gauss-Newton refinement
/// of all four parameters with a linear photometric model. Throws
/// RegistrationError when no reliable transform exists.
SimilarityTransform estimate_transform(const SubImage& moving, const SubImage& reference,
                                       const RegistrationParams& params = {});

/// Upscale, estimate, warp moving onto reference, downscale, and gate on SSIM
/// over the union of both melt-pool masks.
RegistrationResult register_pair(const SubImage& moving, const SubImage& reference,
                                 const RegistrationParams& params = {});

} // namespace mpyro
