#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "iifcn/augment.hpp"
#include "iifcn/image.hpp"
#include "iifcn/rng.hpp"

using namespace iifcn;

namespace {

ImageU8 random_rgb(int64_t h, int64_t w, Rng& rng, int lo = 0, int hi = 255) {
    ImageU8 img(h, w, 3);
    for (auto& p : img.pixels)
        p = uint8_t(lo + rng.uniform_int(hi - lo + 1));
    return img;
}

ImageU8 random_mask_img(int64_t h, int64_t w, Rng& rng, double p = 0.4) {
    ImageU8 m(h, w, 1);
    for (auto& px : m.pixels) px = rng.bernoulli(p) ? 255 : 0;
    return m;
}

SamplePair random_pair(int64_t h, int64_t w, Rng& rng) {
    SamplePair s;
    s.image = random_rgb(h, w, rng);
    s.mask = random_mask_img(h, w, rng);
    s.id = "t";
    return s;
}

bool same_pixels(const ImageU8& a, const ImageU8& b) {
    return a.same_shape(b) && a.pixels == b.pixels;
}

int64_t object_count(const ImageU8& mask) {
    int64_t n = 0;
    for (uint8_t p : mask.pixels) n += p == 255 ? 1 : 0;
    return n;
}

bool mask_binary(const ImageU8& mask) {
    for (uint8_t p : mask.pixels)
        if (p != 0 && p != 255) return false;
    return true;
}

} // namespace

TEST_CASE("clamp_u8 saturates and rounds") {
    CHECK(clamp_u8(-3.0) == 0);
    CHECK(clamp_u8(0.0) == 0);
    CHECK(clamp_u8(0.4) == 0);
    CHECK(clamp_u8(0.6) == 1);
    CHECK(clamp_u8(127.5) == 128);
    CHECK(clamp_u8(254.4) == 254);
    CHECK(clamp_u8(255.0) == 255);
    CHECK(clamp_u8(300.0) == 255);
}

TEST_CASE("image and mask tensor round trips") {
    Rng rng(201);
    ImageU8 img = random_rgb(5, 7, rng);
    Tensor t = image_to_tensor(img);
    CHECK(t.shape() == std::vector<int64_t>{1, 3, 5, 7});
    for (int64_t y = 0; y < 5; ++y)
        for (int64_t x = 0; x < 7; ++x)
            for (int64_t c = 0; c < 3; ++c)
                CHECK(t.at(0, c, y, x) == doctest::Approx(img.at(y, x, c) / 255.0).epsilon(1e-15));
    CHECK(same_pixels(tensor_to_image(t), img));

    ImageU8 m = random_mask_img(4, 6, rng);
    Tensor mt = mask_to_tensor(m);
    CHECK(mt.shape() == std::vector<int64_t>{4, 6});
    for (int64_t i = 0; i < 24; ++i) CHECK(mt[i] == real(m.pixels[size_t(i)]));
    CHECK(same_pixels(tensor_to_mask(mt), m));

    Tensor bad({1, 2}, {0.0, 0.5});
    CHECK_THROWS_AS(tensor_to_mask(bad), std::invalid_argument);
}

TEST_CASE("resizing to the same size copies exactly") {
    Rng rng(203);
    ImageU8 img = random_rgb(6, 9, rng);
    CHECK(same_pixels(resize_bilinear(img, 6, 9), img));
    CHECK(same_pixels(resize_nearest(img, 6, 9), img));
}

TEST_CASE("bilinear doubling of a two-pixel row hits the box centers") {
    ImageU8 row(1, 2, 1);
    row.at(0, 0, 0) = 0;
    row.at(0, 1, 0) = 100;
    ImageU8 up = resize_bilinear(row, 1, 4);
    CHECK(up.at(0, 0, 0) == 0);
    CHECK(up.at(0, 1, 0) == 25);
    CHECK(up.at(0, 2, 0) == 75);
    CHECK(up.at(0, 3, 0) == 100);

    ImageU8 near = resize_nearest(row, 1, 4);
    CHECK(near.at(0, 0, 0) == 0);
    CHECK(near.at(0, 1, 0) == 0);
    CHECK(near.at(0, 2, 0) == 100);
    CHECK(near.at(0, 3, 0) == 100);
}

TEST_CASE("resize on double planes matches the raster convention") {
    Tensor plane({1, 1, 2}, {0.0, 100.0});
    Tensor up = resize_bilinear(plane, 1, 4);
    CHECK(up[0] == doctest::Approx(0.0));
    CHECK(up[1] == doctest::Approx(25.0));
    CHECK(up[2] == doctest::Approx(75.0));
    CHECK(up[3] == doctest::Approx(100.0));
    Tensor down = resize_nearest(up, 1, 2);
    CHECK(down[0] == 25.0);
    CHECK(down[1] == 100.0);

    Rng rng(207);
    Tensor flat = Tensor::full({2, 3, 3}, 7.25);
    Tensor big = resize_bilinear(flat, 7, 5);
    for (int64_t i = 0; i < big.numel(); ++i) CHECK(big[i] == doctest::Approx(7.25));
}

TEST_CASE("contrast adjustment matches a literal transcription") {
    Rng data(211);
    ImageU8 img = random_rgb(9, 11, data);
    Rng r1 = Rng::stream(4, 0, 0, 0);
    Rng r2 = Rng::stream(4, 0, 0, 0);
    AugmentConfig cfg;
    ImageU8 out = photometric(img, PhotometricKind::contrast, r1, cfg);
    double factor = r2.uniform(cfg.factor_lo, cfg.factor_hi);
    std::array<double, 3> mean = {0, 0, 0};
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x)
            for (int64_t c = 0; c < 3; ++c) mean[size_t(c)] += img.at(y, x, c);
    for (auto& m : mean) m /= double(img.h * img.w);
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x)
            for (int64_t c = 0; c < 3; ++c) {
                uint8_t want = clamp_u8(mean[size_t(c)] + factor * (img.at(y, x, c) - mean[size_t(c)]));
                CHECK(out.at(y, x, c) == want);
            }
    CHECK(r1.next_u64() == r2.next_u64());
}

TEST_CASE("color adjustment scales chroma about the luminance") {
    Rng data(213);
    ImageU8 img = random_rgb(8, 8, data);
    Rng r1 = Rng::stream(6, 0, 0, 0);
    Rng r2 = Rng::stream(6, 0, 0, 0);
    AugmentConfig cfg;
    ImageU8 out = photometric(img, PhotometricKind::color, r1, cfg);
    double factor = r2.uniform(cfg.factor_lo, cfg.factor_hi);
    for (int64_t y = 0; y < img.h; ++y)
        for (int64_t x = 0; x < img.w; ++x) {
            double lum = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
            for (int64_t c = 0; c < 3; ++c)
                CHECK(out.at(y, x, c) == clamp_u8(lum + factor * (img.at(y, x, c) - lum)));
        }

    ImageU8 gray(4, 4, 3, 90);
    Rng r3(1);
    CHECK(same_pixels(photometric(gray, PhotometricKind::color, r3, cfg), gray));
}

TEST_CASE("blurring a constant image changes nothing") {
    ImageU8 flat(10, 12, 3, 137);
    Rng rng(217);
    ImageU8 out = photometric(flat, PhotometricKind::blur, rng);
    CHECK(same_pixels(out, flat));
}

TEST_CASE("histogram equalization fixes a uniform-luminance image") {
    ImageU8 img(16, 16, 3);
    for (int v = 0; v < 256; ++v)
        for (int64_t c = 0; c < 3; ++c)
            img.pixels[size_t(v * 3 + c)] = uint8_t(v);
    Rng rng(219);
    ImageU8 out = photometric(img, PhotometricKind::hist_eq, rng);
    CHECK(same_pixels(out, img));

    ImageU8 constant(6, 6, 3, 77);
    Rng rng2(221);
    CHECK(same_pixels(photometric(constant, PhotometricKind::hist_eq, rng2), constant));
}

TEST_CASE("histogram equalization of a dark image raises contrast") {
    ImageU8 img(8, 8, 3);
    Rng data(223);
    for (auto& p : img.pixels) p = uint8_t(40 + data.uniform_int(30));
    Rng rng(227);
    ImageU8 out = photometric(img, PhotometricKind::hist_eq, rng);
    int lo = 255, hi = 0;
    for (uint8_t p : out.pixels) {
        lo = std::min(lo, int(p));
        hi = std::max(hi, int(p));
    }
    CHECK(hi - lo > 100);
}

TEST_CASE("flips are exact involutive permutations") {
    Rng rng(229);
    SamplePair s = random_pair(7, 9, rng);
    SamplePair lr = geometric(s, GeometricOp::flip_lr());
    for (int64_t y = 0; y < 7; ++y)
        for (int64_t x = 0; x < 9; ++x) {
            for (int64_t c = 0; c < 3; ++c)
                CHECK(lr.image.at(y, x, c) == s.image.at(y, 8 - x, c));
            CHECK(lr.mask.at(y, x, 0) == s.mask.at(y, 8 - x, 0));
        }
    CHECK(object_count(lr.mask) == object_count(s.mask));
    SamplePair twice = geometric(lr, GeometricOp::flip_lr());
    CHECK(same_pixels(twice.image, s.image));
    CHECK(same_pixels(twice.mask, s.mask));

    SamplePair ud = geometric(s, GeometricOp::flip_ud());
    for (int64_t y = 0; y < 7; ++y)
        for (int64_t x = 0; x < 9; ++x)
            CHECK(ud.mask.at(y, x, 0) == s.mask.at(6 - y, x, 0));
    SamplePair ud2 = geometric(ud, GeometricOp::flip_ud());
    CHECK(same_pixels(ud2.image, s.image));
    CHECK(same_pixels(ud2.mask, s.mask));
}

TEST_CASE("zero-degree rotation is the identity") {
    Rng rng(233);
    SamplePair s = random_pair(6, 8, rng);
    SamplePair r = geometric(s, GeometricOp::rotate(0.0));
    CHECK(same_pixels(r.image, s.image));
    CHECK(same_pixels(r.mask, s.mask));
}

TEST_CASE("half-turn rotation equals the two flips composed") {
    Rng rng(239);
    SamplePair s = random_pair(8, 8, rng);
    SamplePair r = geometric(s, GeometricOp::rotate(180.0));
    SamplePair f = geometric(geometric(s, GeometricOp::flip_lr()), GeometricOp::flip_ud());
    CHECK(same_pixels(r.image, f.image));
    CHECK(same_pixels(r.mask, f.mask));
}

TEST_CASE("rotation keeps the mask binary and fills with background") {
    Rng rng(241);
    SamplePair s = random_pair(11, 13, rng);
    for (double deg : {17.0, 63.5, 118.0, 260.25, 341.0}) {
        SamplePair r = geometric(s, GeometricOp::rotate(deg));
        CHECK(r.image.h == s.image.h);
        CHECK(r.image.w == s.image.w);
        CHECK(mask_binary(r.mask));
    }
}

TEST_CASE("full-frame zoom is the identity") {
    Rng rng(251);
    SamplePair s = random_pair(9, 7, rng);
    SamplePair z = geometric(s, GeometricOp::zoom(0, 0, 9, 7));
    CHECK(same_pixels(z.image, s.image));
    CHECK(same_pixels(z.mask, s.mask));
}

TEST_CASE("zoom crops then rescales to the original size") {
    Rng rng(253);
    SamplePair s = random_pair(12, 10, rng);
    SamplePair z = geometric(s, GeometricOp::zoom(2, 1, 8, 7));
    CHECK(z.image.h == 12);
    CHECK(z.image.w == 10);
    CHECK(mask_binary(z.mask));

    ImageU8 crop(8, 7, 3);
    for (int64_t y = 0; y < 8; ++y)
        for (int64_t x = 0; x < 7; ++x)
            for (int64_t c = 0; c < 3; ++c) crop.at(y, x, c) = s.image.at(y + 2, x + 1, c);
    CHECK(same_pixels(z.image, resize_bilinear(crop, 12, 10)));

    CHECK_THROWS_AS(geometric(s, GeometricOp::zoom(6, 0, 8, 7)), std::invalid_argument);
    CHECK_THROWS_AS(geometric(s, GeometricOp::zoom(0, 0, 13, 7)), std::invalid_argument);
}

TEST_CASE("zero-probability config leaves the sample untouched") {
    Rng rng(257);
    SamplePair s = random_pair(10, 10, rng);
    AugmentConfig cfg;
    cfg.stage1_prob = 0.0;
    cfg.stage2_prob = 0.0;
    cfg.stage3_prob = 0.0;
    Rng draw(3);
    SamplePair out = augment(s, cfg, draw);
    CHECK(same_pixels(out.image, s.image));
    CHECK(same_pixels(out.mask, s.mask));
}

TEST_CASE("augmentation is reproducible from the seed") {
    Rng rng(263);
    SamplePair s = random_pair(14, 12, rng);
    AugmentConfig cfg;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng a = Rng::stream(seed, 1, 2, 3);
        Rng b = Rng::stream(seed, 1, 2, 3);
        SamplePair oa = augment(s, cfg, a);
        SamplePair ob = augment(s, cfg, b);
        CHECK(same_pixels(oa.image, ob.image));
        CHECK(same_pixels(oa.mask, ob.mask));
        CHECK(mask_binary(oa.mask));
        CHECK(oa.image.h == s.image.h);
        CHECK(oa.image.w == s.image.w);
        oa.validate();
    }
}

TEST_CASE("augment consumes draws in the documented order") {
    Rng data(269);
    SamplePair s = random_pair(15, 13, data);
    for (int64_t c = 0; c < 3; ++c) s.image.at(7, 6, c) = 255;

    AugmentConfig cfg;
    int identity_pred = 0, identity_seen = 0;
    for (uint64_t seed = 1000; seed < 1400; ++seed) {
        Rng run = Rng::stream(seed, 0, 0, 0);
        Rng rep = Rng::stream(seed, 0, 0, 0);
        SamplePair out = augment(s, cfg, run);

        bool contrast = rep.bernoulli(cfg.stage1_prob);
        if (contrast) rep.uniform(cfg.factor_lo, cfg.factor_hi);
        bool color = rep.bernoulli(cfg.stage1_prob);
        if (color) rep.uniform(cfg.factor_lo, cfg.factor_hi);
        bool blur = rep.bernoulli(cfg.stage1_prob);
        if (blur) rep.uniform(cfg.sigma_lo, cfg.sigma_hi);
        bool histeq = rep.bernoulli(cfg.stage1_prob);
        bool flip_l = rep.bernoulli(cfg.stage2_prob);
        bool flip_u = rep.bernoulli(cfg.stage2_prob);
        bool rot = rep.bernoulli(cfg.stage2_prob);
        if (rot) rep.uniform(0.0, 360.0);
        bool zoom = rep.bernoulli(cfg.stage3_prob);
        int64_t rh = s.image.h, rw = s.image.w;
        if (zoom) {
            rh = std::clamp<int64_t>(std::lround(rep.uniform(cfg.zoom_lo, cfg.zoom_hi) * s.image.h),
                                     1, s.image.h);
            rw = std::clamp<int64_t>(std::lround(rep.uniform(cfg.zoom_lo, cfg.zoom_hi) * s.image.w),
                                     1, s.image.w);
            rep.uniform_int(s.image.h - rh + 1);
            rep.uniform_int(s.image.w - rw + 1);
        }
        CHECK(run.next_u64() == rep.next_u64());

        bool anything = contrast || color || blur || histeq || flip_l || flip_u || rot ||
                        (zoom && !(rh == s.image.h && rw == s.image.w));
        bool is_identity = same_pixels(out.image, s.image) && same_pixels(out.mask, s.mask);
        if (!anything) {
            ++identity_pred;
            CHECK(is_identity);
        }
        if (is_identity) ++identity_seen;

        if (!contrast && !color && !blur && !histeq && flip_l && !flip_u && !rot && !zoom) {
            SamplePair want = geometric(s, GeometricOp::flip_lr());
            CHECK(same_pixels(out.image, want.image));
            CHECK(same_pixels(out.mask, want.mask));
        }
    }
    CHECK(identity_pred > 0);
    CHECK(identity_seen >= identity_pred);
}
