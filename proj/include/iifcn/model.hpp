#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "iifcn/block.hpp"

namespace iifcn {

struct DilatedSpec {
    int64_t kernel = 3;
    int64_t rate = 2;
};

struct ModelConfig {
    int64_t blocks = 5;
    std::vector<int64_t> widths = {32, 64, 128, 256, 512};
    std::vector<int64_t> branch_channels;                   // empty: widths/4, at least 1
    std::vector<DilatedSpec> dilated_head = {{3, 2}, {3, 4}};
    int64_t num_classes = 2;

    void validate() const;
    std::vector<int64_t> resolved_branch_channels() const;
};

// A spatial extent H runs through B encoder blocks iff H = 2^B * h + 4*(2^B - 1)
// for some bottleneck extent h >= 1.
bool admissible(int64_t extent, int64_t blocks);
int64_t nearest_admissible(int64_t extent, int64_t blocks); // smallest admissible >= extent
int64_t bottleneck_extent(int64_t extent, int64_t blocks);  // requires admissibility

// Encoder-decoder with additive bridges and a dilated head, ending in a
// two-channel softmax over background/object.
class Model {
public:
    Model(const ModelConfig& cfg, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    const std::vector<Var>& parameters() const { return params_; }
    int64_t parameter_count() const;
    void zero_grad();

    // images (N, 3, H, W) with admissible H, W -> probabilities (N, 2, H, W).
    Var forward(const Var& images) const;

    // Arbitrary (N, 3, H, W): reflect-pads up to the nearest admissible size,
    // runs forward without tracking gradients, crops back to (H, W).
    Tensor pad_and_crop_infer(const Tensor& images) const;

private:
    ModelConfig cfg_;
    std::vector<BlockSpec> enc_specs_, dec_specs_;
    std::vector<BlockParams> enc_params_, dec_params_;
    std::vector<Var> adapters_; // per decoder block; null when channels already match
    std::vector<ConvParams> head_;
    ConvParams classifier_;
    std::vector<Var> params_;
};

} // namespace iifcn
