#pragma once

#include <string>
#include <vector>

#include "iifcn/tensor.hpp"

namespace iifcn {

struct MetricReport {
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    real sensitivity = 0, specificity = 0, accuracy = 0, dice = 0, jaccard = 0;
};

// mask = 1 where prob > t (strict), else 0. t must lie in [0, 1].
Tensor threshold_mask(const Tensor& prob, real t = 0.8);

// pred and gt: same shape, values in {0, 1} or {0, 255}; nonzero = object.
// Ratios with an empty denominator report 1 when prediction and truth agree
// on being empty over that ratio's support, else 0.
MetricReport evaluate(const Tensor& pred, const Tensor& gt);

// Unweighted mean of the per-image metrics; confusion counts summed.
MetricReport dataset_mean(const std::vector<MetricReport>& reports);

std::string metric_csv_header();
std::string metric_csv_line(const std::string& image_id, const MetricReport& r);

} // namespace iifcn
