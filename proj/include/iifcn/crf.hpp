#pragma once

#include <vector>

#include "iifcn/image.hpp"
#include "iifcn/tensor.hpp"

namespace iifcn {

// Dense pairwise binary CRF with Potts compatibility (unit penalty) and a
// two-kernel potential: a smoothness Gaussian on pixel distance plus an
// appearance Gaussian on distance and color. Mean field runs exactly in
// O(N^2); images above max_side are processed at reduced resolution.
struct CrfParams {
    real smoothness_weight = 3;  // w_s
    real smoothness_sigma = 3;   // pixels
    real appearance_weight = 10; // w_a
    real appearance_sigma = 60;  // pixels
    real color_sigma = 20;       // intensity units (0..255 scale)
    int64_t iterations = 10;
    int64_t max_side = 128;

    void validate() const; // sigmas > 0, weights >= 0, iterations >= 1
};

// unary = -log(max(prob, 1e-12)), elementwise; prob (2, h, w).
Tensor unary_from_prob(const Tensor& prob);

struct MeanFieldStats {
    std::vector<int64_t> label_flips; // argmax changes per iteration
};

// image: (3, h, w) in intensity units (0..255 scale); unary: (2, h, w).
// Synchronous updates, every message computed from the previous iterate.
// Returns marginals (2, h, w) at the input resolution; above the cap the
// problem is solved bilinearly downsampled and the marginals come back
// nearest-upsampled.
Tensor mean_field(const Tensor& image, const Tensor& unary, const CrfParams& params,
                  MeanFieldStats* stats = nullptr);

// Full post-processing: unaries from probabilities, mean field, argmax,
// binary {0, 255} mask at the image resolution. prob: (2, h, w) or
// (1, 2, h, w) matching the image size.
ImageU8 refine(const ImageU8& image, const Tensor& prob, const CrfParams& params);

} // namespace iifcn
