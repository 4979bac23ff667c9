#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "iifcn/config.hpp"
#include "iifcn/dataset.hpp"
#include "iifcn/metrics.hpp"

namespace iifcn {

struct EpochLog {
    int64_t epoch = 0; // global, 1-based
    int64_t stage = 0; // 1-based
    real mean_train_loss = 0;
    real entropy_term = 0;
    real jaccard_term = 0;
    real val_jaccard_baseline = 0;
    real val_jaccard_crf = 0;
    real wall_seconds = 0;
};

struct TrainResult {
    Model model;
    std::vector<EpochLog> log;
};

// Multi-scale training: the last val_split samples are held out, the rest
// are re-augmented every epoch from a stream keyed by (seed, sample index,
// global epoch) and resized to the stage resolution (snapped to
// admissibility). Batch gradients are averaged, optimized with Adam, and
// each epoch ends with validation at threshold 0.8 with and without CRF
// refinement. out_dir empty = no checkpoints; progress, when given,
// receives one csv line per epoch.
TrainResult train(const std::vector<SamplePair>& dataset, const RunConfig& cfg,
                  const std::string& out_dir = "", std::ostream* progress = nullptr);

// Per-image pad-and-crop inference, threshold, optional CRF, metric mean.
MetricReport validate(const Model& model, const std::vector<SamplePair>& samples, real threshold,
                      bool with_crf, const CrfParams& crf);

std::string epoch_csv_header();
std::string epoch_csv_line(const EpochLog& e);

} // namespace iifcn
