#include "iifcn/augment.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace iifcn {

namespace {

constexpr real kYr = 0.299, kYg = 0.587, kYb = 0.114;

real luminance(const ImageU8& img, int64_t y, int64_t x) {
    return kYr * img.at(y, x, 0) + kYg * img.at(y, x, 1) + kYb * img.at(y, x, 2);
}

void check_rgb(const ImageU8& img, const char* who) {
    if (img.channels != 3)
        throw std::invalid_argument(std::string(who) + ": expected a 3-channel image");
}

ImageU8 adjust_contrast(const ImageU8& img, real factor) {
    std::array<real, 3> mean = {0, 0, 0};
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x)
            for (int64_t c = 0; c < 3; ++c) mean[static_cast<size_t>(c)] += img.at(y, x, c);
    for (auto& m : mean) m /= real(img.h * img.w);
    ImageU8 out(img.h, img.w, 3);
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x)
            for (int64_t c = 0; c < 3; ++c)
                out.at(y, x, c) =
                    clamp_u8(mean[static_cast<size_t>(c)] + factor * (img.at(y, x, c) - mean[static_cast<size_t>(c)]));
    return out;
}

ImageU8 adjust_color(const ImageU8& img, real factor) {
    ImageU8 out(img.h, img.w, 3);
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x) {
            real lum = luminance(img, y, x);
            for (int64_t c = 0; c < 3; ++c)
                out.at(y, x, c) = clamp_u8(lum + factor * (img.at(y, x, c) - lum));
        }
    return out;
}

int64_t reflect_index(int64_t i, int64_t n) {
    if (n == 1) return 0;
    int64_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

ImageU8 gaussian_blur(const ImageU8& img, real sigma) {
    int64_t radius = std::max<int64_t>(1, int64_t(std::ceil(3 * sigma)));
    std::vector<real> kernel(static_cast<size_t>(2 * radius + 1));
    real sum = 0;
    for (int64_t i = -radius; i <= radius; ++i) {
        real v = std::exp(-real(i * i) / (2 * sigma * sigma));
        kernel[static_cast<size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : kernel) v /= sum;

    // Separable pass, horizontal then vertical, in double precision.
    std::vector<real> tmp(img.pixels.size()), res(img.pixels.size());
    auto idx = [&](int64_t y, int64_t x, int64_t c) {
        return static_cast<size_t>((y * img.w + x) * img.channels + c);
    };
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x)
            for (int64_t c = 0; c < img.channels; ++c) {
                real acc = 0;
                for (int64_t i = -radius; i <= radius; ++i)
                    acc += kernel[static_cast<size_t>(i + radius)] *
                           img.at(y, reflect_index(x + i, img.w), c);
                tmp[idx(y, x, c)] = acc;
            }
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x)
            for (int64_t c = 0; c < img.channels; ++c) {
                real acc = 0;
                for (int64_t i = -radius; i <= radius; ++i)
                    acc += kernel[static_cast<size_t>(i + radius)] * tmp[idx(reflect_index(y + i, img.h), x, c)];
                res[idx(y, x, c)] = acc;
            }
    ImageU8 out(img.h, img.w, img.channels);
    for (size_t i = 0; i < res.size(); ++i) out.pixels[i] = clamp_u8(res[i]);
    return out;
}

ImageU8 equalize_luminance(const ImageU8& img) {
    const int64_t total = img.h * img.w;
    std::array<int64_t, 256> hist = {};
    std::vector<int> lum(static_cast<size_t>(total));
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x) {
            int v = int(std::lround(luminance(img, y, x)));
            v = std::min(255, std::max(0, v));
            lum[static_cast<size_t>(y * img.w + x)] = v;
            hist[static_cast<size_t>(v)]++;
        }
    std::array<int64_t, 256> cdf = {};
    int64_t run = 0, cdf_min = 0;
    bool seen = false;
    for (int v = 0; v < 256; ++v) {
        run += hist[static_cast<size_t>(v)];
        cdf[static_cast<size_t>(v)] = run;
        if (!seen && hist[static_cast<size_t>(v)] > 0) {
            cdf_min = run;
            seen = true;
        }
    }
    std::array<int, 256> map = {};
    for (int v = 0; v < 256; ++v) {
        if (total == cdf_min) // constant luminance, nothing to spread
            map[static_cast<size_t>(v)] = v;
        else
            map[static_cast<size_t>(v)] = int(std::lround(real(cdf[static_cast<size_t>(v)] - cdf_min) /
                                             real(total - cdf_min) * 255.0));
    }
    ImageU8 out(img.h, img.w, 3);
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x) {
            int old_l = lum[static_cast<size_t>(y * img.w + x)];
            real delta = real(map[static_cast<size_t>(old_l)] - old_l); // shift Y, keep chroma
            for (int64_t c = 0; c < 3; ++c)
                out.at(y, x, c) = clamp_u8(img.at(y, x, c) + delta);
        }
    return out;
}

// Bilinear sample with zero outside the canvas.
real sample_bilinear_zero(const ImageU8& img, real fy, real fx, int64_t c) {
    int64_t y0 = int64_t(std::floor(fy)), x0 = int64_t(std::floor(fx));
    real wy = fy - y0, wx = fx - x0;
    real acc = 0;
    for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx) {
            int64_t y = y0 + dy, x = x0 + dx;
            if (y < 0 || y >= img.h || x < 0 || x >= img.w) continue;
            real wgt = (dy ? wy : 1 - wy) * (dx ? wx : 1 - wx);
            acc += wgt * img.at(y, x, c);
        }
    return acc;
}

uint8_t sample_nearest_zero(const ImageU8& img, real fy, real fx, int64_t c) {
    int64_t y = int64_t(std::lround(fy)), x = int64_t(std::lround(fx));
    if (y < 0 || y >= img.h || x < 0 || x >= img.w) return 0;
    return img.at(y, x, c);
}

ImageU8 flip(const ImageU8& img, bool horizontal) {
    ImageU8 out(img.h, img.w, img.channels);
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x)
            for (int64_t c = 0; c < img.channels; ++c)
                out.at(y, x, c) =
                    horizontal ? img.at(y, img.w - 1 - x, c) : img.at(img.h - 1 - y, x, c);
    return out;
}

ImageU8 rotate_image(const ImageU8& img, real deg, bool bilinear) {
    real rad = deg * std::acos(-1.0) / 180.0;
    real cs = std::cos(rad), sn = std::sin(rad);
    real cy = real(img.h - 1) / 2, cx = real(img.w - 1) / 2;
    ImageU8 out(img.h, img.w, img.channels);
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x) {
            real dy = y - cy, dx = x - cx;
            real fy = cs * dy - sn * dx + cy; // inverse rotation of the output grid
            real fx = sn * dy + cs * dx + cx;
            for (int64_t c = 0; c < img.channels; ++c)
                out.at(y, x, c) = bilinear ? clamp_u8(sample_bilinear_zero(img, fy, fx, c))
                                           : sample_nearest_zero(img, fy, fx, c);
        }
    return out;
}

ImageU8 crop(const ImageU8& img, int64_t y0, int64_t x0, int64_t rh, int64_t rw) {
    ImageU8 out(rh, rw, img.channels);
    for (int64_t y = 0; y < rh; ++y)
        for (int64_t x = 0; x < rw; ++x)
            for (int64_t c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

void binarize_mask(ImageU8& mask) {
    for (auto& v : mask.pixels) v = v >= 128 ? 255 : 0;
}

} // namespace

void AugmentConfig::validate() const {
    auto prob = [](real p) { return p >= 0 && p <= 1; };
    if (!prob(stage1_prob) || !prob(stage2_prob) || !prob(stage3_prob))
        throw std::invalid_argument("augment config: probabilities must lie in [0, 1]");
    if (!(factor_lo <= factor_hi) || !(sigma_lo <= sigma_hi) || !(zoom_lo <= zoom_hi))
        throw std::invalid_argument("augment config: ranges must be ordered");
    if (sigma_lo <= 0) throw std::invalid_argument("augment config: sigma must be positive");
    if (zoom_lo <= 0 || zoom_hi > 1)
        throw std::invalid_argument("augment config: zoom fractions must lie in (0, 1]");
}

ImageU8 photometric(const ImageU8& image, PhotometricKind kind, Rng& rng,
                    const AugmentConfig& cfg) {
    check_rgb(image, "photometric");
    switch (kind) {
    case PhotometricKind::contrast:
        return adjust_contrast(image, rng.uniform(cfg.factor_lo, cfg.factor_hi));
    case PhotometricKind::color:
        return adjust_color(image, rng.uniform(cfg.factor_lo, cfg.factor_hi));
    case PhotometricKind::blur:
        return gaussian_blur(image, rng.uniform(cfg.sigma_lo, cfg.sigma_hi));
    case PhotometricKind::hist_eq:
        return equalize_luminance(image);
    }
    throw std::invalid_argument("photometric: unknown kind");
}

SamplePair geometric(const SamplePair& pair, const GeometricOp& op) {
    pair.validate();
    SamplePair out;
    out.id = pair.id;
    switch (op.kind) {
    case GeometricOp::Kind::flip_lr:
        out.image = flip(pair.image, true);
        out.mask = flip(pair.mask, true);
        break;
    case GeometricOp::Kind::flip_ud:
        out.image = flip(pair.image, false);
        out.mask = flip(pair.mask, false);
        break;
    case GeometricOp::Kind::rotate:
        out.image = rotate_image(pair.image, op.angle_deg, true);
        out.mask = rotate_image(pair.mask, op.angle_deg, false);
        break;
    case GeometricOp::Kind::zoom: {
        if (op.y0 < 0 || op.x0 < 0 || op.rh < 1 || op.rw < 1 ||
            op.y0 + op.rh > pair.image.h || op.x0 + op.rw > pair.image.w)
            throw std::invalid_argument("geometric: zoom rectangle out of bounds");
        out.image = resize_bilinear(crop(pair.image, op.y0, op.x0, op.rh, op.rw), pair.image.h,
                                    pair.image.w);
        out.mask = resize_nearest(crop(pair.mask, op.y0, op.x0, op.rh, op.rw), pair.mask.h,
                                  pair.mask.w);
        break;
    }
    }
    binarize_mask(out.mask);
    return out;
}

SamplePair augment(const SamplePair& sample, const AugmentConfig& cfg, Rng& rng) {
    sample.validate();
    cfg.validate();
    SamplePair cur = sample;

    const PhotometricKind stage1[] = {PhotometricKind::contrast, PhotometricKind::color,
                                      PhotometricKind::blur, PhotometricKind::hist_eq};
    for (PhotometricKind kind : stage1)
        if (rng.bernoulli(cfg.stage1_prob)) cur.image = photometric(cur.image, kind, rng, cfg);

    if (rng.bernoulli(cfg.stage2_prob)) cur = geometric(cur, GeometricOp::flip_lr());
    if (rng.bernoulli(cfg.stage2_prob)) cur = geometric(cur, GeometricOp::flip_ud());
    if (rng.bernoulli(cfg.stage2_prob))
        cur = geometric(cur, GeometricOp::rotate(rng.uniform(0.0, 360.0)));

    if (rng.bernoulli(cfg.stage3_prob)) {
        int64_t h = cur.image.h, w = cur.image.w;
        auto span = [&](int64_t n) {
            real frac = rng.uniform(cfg.zoom_lo, cfg.zoom_hi);
            int64_t len = std::clamp<int64_t>(int64_t(std::lround(frac * real(n))), 1, n);
            return len;
        };
        int64_t rh = span(h), rw = span(w);
        int64_t y0 = int64_t(rng.uniform_int(uint64_t(h - rh + 1)));
        int64_t x0 = int64_t(rng.uniform_int(uint64_t(w - rw + 1)));
        cur = geometric(cur, GeometricOp::zoom(y0, x0, rh, rw));
    }
    return cur;
}

} // namespace iifcn
