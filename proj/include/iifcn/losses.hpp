#pragma once

#include "iifcn/autodiff.hpp"

namespace iifcn {

// Per-pixel loss weights derived from the object fraction of a mask:
// background pixels weigh p, object pixels 1-p, both divided by 2p(1-p).
// For a non-clamped mask the weights sum to exactly h*w.
struct WeightFilter {
    Tensor weights; // (h, w)
    real p = 0;     // clamped object fraction
    real n = 0;     // object pixel count
};

// mask: (h, w) with values {0, 255} only.
WeightFilter reweight_filter(const Tensor& mask, real eps = 1e-4);

// prob: (2, h, w) or (1, 2, h, w) softmax output, channel 1 = object;
// target: (h, w) mask in {0, 255}. Mean of weight * -log(prob of true class),
// probabilities floored at 1e-12 inside the log.
Var weighted_entropy_loss(const Var& prob, const Tensor& target, const WeightFilter& filter);

// Elementwise threshold: >= 0.5 -> 1, else 0 (0.5 itself maps to 1).
Tensor harden(const Tensor& a);

enum class JaccardMode { literal, soft };

// Surrogate overlap loss on maps a (prediction) and b (binary ground truth
// in {0,1}); with S = sum(a)+sum(b) and D = sum|a-b|, the loss is
// log10(S/(k*S-D) + 1 - 1/k), or 0 when either map is empty.
// Literal mode hardens a first and carries no gradient.
real jaccard_loss(const Tensor& a, const Tensor& b, real k, JaccardMode mode);
Var jaccard_loss(const Var& a, const Tensor& b, real k, JaccardMode mode);

struct CombinedLoss {
    Var total;   // entropy + 1.0 * jaccard
    Var entropy; // scalar term, for logging
    Var jaccard; // scalar term, for logging
};

// prob: (1, 2, h, w) or (2, h, w); target: (h, w) mask in {0, 255}.
// Builds the weight filter from the target, evaluates the weighted entropy
// plus the overlap term on the object channel.
CombinedLoss combined_loss(const Var& prob, const Tensor& target, real k = 1.1,
                           JaccardMode mode = JaccardMode::soft);

} // namespace iifcn
