#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iifcn/autodiff.hpp"
#include "iifcn/rng.hpp"

namespace iifcn {

// The identity inception block: four parallel valid-padding branches of
// different depth and kernel size, concatenated, fused by a size-preserving
// 2x2 convolution, then 2x2 max-pooled. The reversed form mirrors it with
// transpose convolutions and an initial stride-2 upsampling.
//
// Branch kernel stacks (forward):  [5x5]  [3x3,3x3]  [1x1,5x5]  [1x1,3x3,3x3]
// Each branch shrinks the spatial extent by exactly 4 and emits
// branch_channels channels; the reversed stacks grow by exactly 4.
struct BlockSpec {
    enum class Direction { forward, reversed };

    int64_t in_channels = 1;
    int64_t branch_channels = 1;
    int64_t out_channels = 1;
    Direction direction = Direction::forward;

    void validate() const;
    int64_t fused_channels() const { return 4 * branch_channels; }
};

struct ConvParams {
    Var kernel;
    Var bias; // null for adapters
};

struct BlockParams {
    std::vector<std::vector<ConvParams>> branches; // four stacks
    ConvParams fusion;                             // forward: 2x2 preserve; reversed: 1x1 projection
    ConvParams up;                                 // reversed only: 2x2 stride-2 transpose
};

// Creates the parameter set in a fixed order, appending every Var to `out`.
// Names are "<prefix>.<piece>" so checkpoints stay stable.
BlockParams make_block_params(const BlockSpec& spec, const std::string& prefix, Rng& rng,
                              std::vector<Var>& out);

// Closed-form number of scalar parameters of a block.
int64_t block_param_count(const BlockSpec& spec);

// Encoder block. Input (N, Cin, H, W) with H-4, W-4 positive and even;
// output (N, Cout, (H-4)/2, (W-4)/2). When fusion_out is non-null it
// receives the pre-pool fusion activation (the bridge tap).
Var forward_block(const Var& x, const BlockSpec& spec, const BlockParams& params,
                  Var* fusion_out = nullptr);

// Decoder block. Input (N, Cin, h, w); output (N, Cout, 2h+4, 2w+4).
// `bridge`, when given, is added right after the upsampling stage.
Var reversed_block(const Var& x, const BlockSpec& spec, const BlockParams& params,
                   const Var& bridge = nullptr);

struct BlockShape {
    int64_t h = 0, w = 0;
    bool admissible = false;
};

// Pure spatial arithmetic: forward (H-4)/2 with H > 4 and H-4 even;
// reversed 2H+4, always admissible.
BlockShape block_shape(BlockSpec::Direction direction, int64_t h, int64_t w);

} // namespace iifcn
