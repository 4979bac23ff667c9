#pragma once

#include "iifcn/image.hpp"
#include "iifcn/rng.hpp"

namespace iifcn {

struct AugmentConfig {
    real stage1_prob = 0.2; // each photometric transform, independently
    real stage2_prob = 0.2; // each flip and the rotation, independently
    real stage3_prob = 0.5; // the zoom
    real factor_lo = 0.7, factor_hi = 1.3; // contrast and color scale
    real sigma_lo = 0.5, sigma_hi = 1.5;   // blur
    real zoom_lo = 0.6, zoom_hi = 1.0;     // per-axis crop fraction

    void validate() const;
};

enum class PhotometricKind { contrast, color, blur, hist_eq };

// Image-only transforms; parameters drawn from rng per the config ranges.
// contrast scales each channel about its own mean; color scales chroma about
// the BT.601 luminance (hue preserving); blur is Gaussian truncated at 3
// sigma with reflected borders; hist_eq equalizes luminance only.
ImageU8 photometric(const ImageU8& image, PhotometricKind kind, Rng& rng,
                    const AugmentConfig& cfg = {});

struct GeometricOp {
    enum class Kind { flip_lr, flip_ud, rotate, zoom };
    Kind kind = Kind::flip_lr;
    real angle_deg = 0;                     // rotate
    int64_t y0 = 0, x0 = 0, rh = 0, rw = 0; // zoom rectangle

    static GeometricOp flip_lr() { return {Kind::flip_lr, 0, 0, 0, 0, 0}; }
    static GeometricOp flip_ud() { return {Kind::flip_ud, 0, 0, 0, 0, 0}; }
    static GeometricOp rotate(real deg) { return {Kind::rotate, deg, 0, 0, 0, 0}; }
    static GeometricOp zoom(int64_t y0, int64_t x0, int64_t rh, int64_t rw) {
        return {Kind::zoom, 0, y0, x0, rh, rw};
    }
};

// Applies the same transform to image and mask. Flips are exact
// permutations; rotation resamples bilinearly (image) and nearest (mask)
// with zero fill; zoom crops the rectangle and rescales to the original
// size. Out-of-bounds zoom rectangles raise std::invalid_argument.
SamplePair geometric(const SamplePair& pair, const GeometricOp& op);

// The full three-stage pipeline with a fixed draw order, so a fixed rng
// stream reproduces the output bitwise.
SamplePair augment(const SamplePair& sample, const AugmentConfig& cfg, Rng& rng);

} // namespace iifcn
