#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iifcn/tensor.hpp"

namespace iifcn {

// Interleaved 8-bit raster, 1 (mask) or 3 (RGB) channels.
struct ImageU8 {
    int64_t h = 0, w = 0, channels = 0;
    std::vector<uint8_t> pixels; // row-major, channel-interleaved

    ImageU8() = default;
    ImageU8(int64_t h_, int64_t w_, int64_t channels_, uint8_t fill = 0);

    uint8_t& at(int64_t y, int64_t x, int64_t c) {
        return pixels[(y * w + x) * channels + c];
    }
    uint8_t at(int64_t y, int64_t x, int64_t c) const {
        return pixels[(y * w + x) * channels + c];
    }
    bool same_shape(const ImageU8& o) const {
        return h == o.h && w == o.w && channels == o.channels;
    }
};

// An RGB image with its binary mask; the unit of ingestion and augmentation.
struct SamplePair {
    ImageU8 image; // 3 channels
    ImageU8 mask;  // 1 channel, values {0, 255}
    std::string id;

    void validate() const; // shapes agree, mask strictly binary
};

// (1, C, H, W) tensor scaled to [0, 1].
Tensor image_to_tensor(const ImageU8& img);
// Inverse of image_to_tensor: clamps to [0, 1], scales, rounds.
ImageU8 tensor_to_image(const Tensor& t);
// (h, w) tensor keeping raw {0, 255} values.
Tensor mask_to_tensor(const ImageU8& mask);
ImageU8 tensor_to_mask(const Tensor& t); // expects values {0, 255}

// Center-aligned resampling (src = (dst + 0.5) * scale - 0.5); same-size
// calls return an exact copy. Bilinear clamps at the borders.
ImageU8 resize_bilinear(const ImageU8& img, int64_t h, int64_t w);
ImageU8 resize_nearest(const ImageU8& img, int64_t h, int64_t w);

// Same resampling on (C, h, w) double planes, used by the CRF resolution cap.
Tensor resize_bilinear(const Tensor& chw, int64_t h, int64_t w);
Tensor resize_nearest(const Tensor& chw, int64_t h, int64_t w);

uint8_t clamp_u8(real v);

} // namespace iifcn
