#include "iifcn/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iifcn {

ImageU8::ImageU8(int64_t h_, int64_t w_, int64_t channels_, uint8_t fill)
    : h(h_), w(w_), channels(channels_) {
    if (h < 1 || w < 1 || (channels != 1 && channels != 3))
        throw std::invalid_argument("image: extents must be positive with 1 or 3 channels");
    pixels.assign(static_cast<size_t>(h * w * channels), fill);
}

void SamplePair::validate() const {
    if (image.channels != 3) throw std::invalid_argument("sample: image must have 3 channels");
    if (mask.channels != 1) throw std::invalid_argument("sample: mask must have 1 channel");
    if (image.h != mask.h || image.w != mask.w)
        throw std::invalid_argument("sample: image and mask sizes differ");
    for (uint8_t v : mask.pixels)
        if (v != 0 && v != 255)
            throw std::invalid_argument("sample: mask must contain only 0 and 255");
}

uint8_t clamp_u8(real v) {
    if (v <= 0) return 0;
    if (v >= 255) return 255;
    return uint8_t(std::lround(v));
}

Tensor image_to_tensor(const ImageU8& img) {
    Tensor t({1, img.channels, img.h, img.w});
    for (int64_t c = 0; c < img.channels; ++c)
        for (int64_t y = 0; y < img.h; ++y)
            for (int64_t x = 0; x < img.w; ++x)
                t.at(0, c, y, x) = real(img.at(y, x, c)) / 255.0;
    return t;
}

ImageU8 tensor_to_image(const Tensor& t) {
    if (t.ndim() != 4 || t.n() != 1 || (t.c() != 1 && t.c() != 3))
        throw std::invalid_argument("tensor_to_image: expected (1, 1|3, H, W)");
    ImageU8 img(t.h(), t.w(), t.c());
    for (int64_t c = 0; c < img.channels; ++c)
        for (int64_t y = 0; y < img.h; ++y)
            for (int64_t x = 0; x < img.w; ++x)
                img.at(y, x, c) = clamp_u8(t.at(0, c, y, x) * 255.0);
    return img;
}

Tensor mask_to_tensor(const ImageU8& mask) {
    if (mask.channels != 1) throw std::invalid_argument("mask_to_tensor: mask must be 1-channel");
    Tensor t({mask.h, mask.w});
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = real(mask.pixels[static_cast<size_t>(i)]);
    return t;
}

ImageU8 tensor_to_mask(const Tensor& t) {
    if (t.ndim() != 2) throw std::invalid_argument("tensor_to_mask: expected (h, w)");
    ImageU8 m(t.shape()[0], t.shape()[1], 1);
    for (int64_t i = 0; i < t.numel(); ++i) {
        real v = t[i];
        if (v != 0.0 && v != 255.0)
            throw std::invalid_argument("tensor_to_mask: values must be exactly 0 or 255");
        m.pixels[static_cast<size_t>(i)] = uint8_t(v);
    }
    return m;
}

namespace {

void check_target(int64_t h, int64_t w) {
    if (h < 1 || w < 1) throw std::invalid_argument("resize: target extents must be positive");
}

} // namespace

ImageU8 resize_bilinear(const ImageU8& img, int64_t h, int64_t w) {
    check_target(h, w);
    if (h == img.h && w == img.w) return img;
    ImageU8 out(h, w, img.channels);
    real sy = real(img.h) / real(h), sx = real(img.w) / real(w);
    for (int64_t y = 0; y < h; ++y) {
        real fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, real(img.h - 1));
        int64_t y0 = int64_t(fy), y1 = std::min(y0 + 1, img.h - 1);
        real wy = fy - y0;
        for (int64_t x = 0; x < w; ++x) {
            real fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, real(img.w - 1));
            int64_t x0 = int64_t(fx), x1 = std::min(x0 + 1, img.w - 1);
            real wx = fx - x0;
            for (int64_t c = 0; c < img.channels; ++c) {
                real top = (1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
                real bot = (1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
                out.at(y, x, c) = clamp_u8((1 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

ImageU8 resize_nearest(const ImageU8& img, int64_t h, int64_t w) {
    check_target(h, w);
    if (h == img.h && w == img.w) return img;
    ImageU8 out(h, w, img.channels);
    real sy = real(img.h) / real(h), sx = real(img.w) / real(w);
    for (int64_t y = 0; y < h; ++y) {
        int64_t ys = std::clamp(int64_t((y + 0.5) * sy), int64_t{0}, img.h - 1);
        for (int64_t x = 0; x < w; ++x) {
            int64_t xs = std::clamp(int64_t((x + 0.5) * sx), int64_t{0}, img.w - 1);
            for (int64_t c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(ys, xs, c);
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& chw, int64_t h, int64_t w) {
    if (chw.ndim() != 3) throw std::invalid_argument("resize_bilinear: expected (C, h, w)");
    check_target(h, w);
    int64_t C = chw.shape()[0], H = chw.shape()[1], W = chw.shape()[2];
    if (h == H && w == W) return chw;
    Tensor out({C, h, w});
    real sy = real(H) / real(h), sx = real(W) / real(w);
    for (int64_t y = 0; y < h; ++y) {
        real fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, real(H - 1));
        int64_t y0 = int64_t(fy), y1 = std::min(y0 + 1, H - 1);
        real wy = fy - y0;
        for (int64_t x = 0; x < w; ++x) {
            real fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, real(W - 1));
            int64_t x0 = int64_t(fx), x1 = std::min(x0 + 1, W - 1);
            real wx = fx - x0;
            for (int64_t c = 0; c < C; ++c) {
                real top = (1 - wx) * chw[(c * H + y0) * W + x0] + wx * chw[(c * H + y0) * W + x1];
                real bot = (1 - wx) * chw[(c * H + y1) * W + x0] + wx * chw[(c * H + y1) * W + x1];
                out[(c * h + y) * w + x] = (1 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

Tensor resize_nearest(const Tensor& chw, int64_t h, int64_t w) {
    if (chw.ndim() != 3) throw std::invalid_argument("resize_nearest: expected (C, h, w)");
    check_target(h, w);
    int64_t C = chw.shape()[0], H = chw.shape()[1], W = chw.shape()[2];
    if (h == H && w == W) return chw;
    Tensor out({C, h, w});
    real sy = real(H) / real(h), sx = real(W) / real(w);
    for (int64_t y = 0; y < h; ++y) {
        int64_t ys = std::clamp(int64_t((y + 0.5) * sy), int64_t{0}, H - 1);
        for (int64_t x = 0; x < w; ++x) {
            int64_t xs = std::clamp(int64_t((x + 0.5) * sx), int64_t{0}, W - 1);
            for (int64_t c = 0; c < C; ++c) out[(c * h + y) * w + x] = chw[(c * H + ys) * W + xs];
        }
    }
    return out;
}

} // namespace iifcn
