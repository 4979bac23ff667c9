#pragma once

#include <string>
#include <vector>

#include "iifcn/adam.hpp"
#include "iifcn/augment.hpp"
#include "iifcn/crf.hpp"
#include "iifcn/losses.hpp"
#include "iifcn/model.hpp"

namespace iifcn {

struct ScaleStage {
    int64_t h = 0, w = 0;
    int64_t batch = 1;
    int64_t epochs = 0;
};

struct TrainConfig {
    // Three scales, small to large; sizes are snapped to admissibility by
    // the trainer. 25 epochs split as evenly as integers allow.
    std::vector<ScaleStage> stages = {{252, 380, 8, 8}, {444, 688, 4, 8}, {636, 956, 2, 9}};
    AdamConfig adam;
    uint64_t seed = 1;
    int64_t val_split = 200;
    int64_t checkpoint_every = 5;
    JaccardMode jaccard_mode = JaccardMode::soft;
    real jaccard_k = 1.1;

    void validate() const;
};

struct RunConfig {
    ModelConfig model;
    AugmentConfig augment;
    TrainConfig train;
    CrfParams crf;
    std::string data_dir;
    std::string out_dir;

    void validate() const;
};

// Plain-text `section.key = value` lines; '#' starts a comment; every key
// optional (defaults apply); unknown keys rejected. parse(serialize(x))
// reproduces x.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

} // namespace iifcn
