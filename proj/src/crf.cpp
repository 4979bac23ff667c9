#include "iifcn/crf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iifcn/parallel.hpp"

namespace iifcn {

namespace {

constexpr real kProbFloor = 1e-12;
// Full kernel matrix is cached below this many pixels (48x48 -> ~42 MB).
constexpr int64_t kKernelCacheLimit = 2304;

void softmax_pair(real a, real b, real& pa, real& pb) {
    real m = std::max(a, b);
    real ea = std::exp(a - m), eb = std::exp(b - m);
    real z = ea + eb;
    pa = ea / z;
    pb = eb / z;
}

struct Problem {
    int64_t h, w, n;
    const Tensor& image; // (3, h, w)
    const Tensor& unary; // (2, h, w)
};

// One mean-field solve at the given resolution. Gather form: pixel i's
// message is summed over all j != i in row order, so the result does not
// depend on the thread partition.
Tensor solve(const Problem& pb, const CrfParams& prm, MeanFieldStats* stats) {
    const int64_t h = pb.h, w = pb.w, n = pb.n;

    // Spatial factors depend only on (|dy|, |dx|).
    std::vector<real> t_smooth(static_cast<size_t>(h * w)), t_app(static_cast<size_t>(h * w));
    real inv_g = 1.0 / (2 * prm.smoothness_sigma * prm.smoothness_sigma);
    real inv_a = 1.0 / (2 * prm.appearance_sigma * prm.appearance_sigma);
    for (int64_t dy = 0; dy < h; ++dy)
        for (int64_t dx = 0; dx < w; ++dx) {
            real d2 = real(dy * dy + dx * dx);
            t_smooth[static_cast<size_t>(dy * w + dx)] = prm.smoothness_weight * std::exp(-d2 * inv_g);
            t_app[static_cast<size_t>(dy * w + dx)] = prm.appearance_weight * std::exp(-d2 * inv_a);
        }

    // Color factor: table-driven when every intensity is an integer in
    // [0, 255] (then the squared difference indexes exactly), else direct.
    real inv_b = 1.0 / (2 * prm.color_sigma * prm.color_sigma);
    bool integral = true;
    for (int64_t i = 0; i < pb.image.numel() && integral; ++i) {
        real v = pb.image[i];
        integral = v >= 0 && v <= 255 && v == std::floor(v);
    }
    std::vector<real> color_table;
    if (integral) {
        color_table.resize(3 * 255 * 255 + 1);
        for (size_t k = 0; k < color_table.size(); ++k)
            color_table[k] = std::exp(-real(k) * inv_b);
    }
    std::vector<real> r(static_cast<size_t>(n)), g(static_cast<size_t>(n)), b(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        r[static_cast<size_t>(i)] = pb.image[i];
        g[static_cast<size_t>(i)] = pb.image[n + i];
        b[static_cast<size_t>(i)] = pb.image[2 * n + i];
    }

    auto kernel = [&](int64_t i, int64_t j) {
        int64_t dy = std::abs(i / w - j / w), dx = std::abs(i % w - j % w);
        real dr = r[static_cast<size_t>(i)] - r[static_cast<size_t>(j)];
        real dg = g[static_cast<size_t>(i)] - g[static_cast<size_t>(j)];
        real db = b[static_cast<size_t>(i)] - b[static_cast<size_t>(j)];
        real c2 = dr * dr + dg * dg + db * db;
        real color = integral ? color_table[static_cast<size_t>(c2 + 0.5)] : std::exp(-c2 * inv_b);
        int64_t d = dy * w + dx;
        return t_smooth[static_cast<size_t>(d)] + t_app[static_cast<size_t>(d)] * color;
    };

    std::vector<real> kmat;
    if (n <= kKernelCacheLimit) {
        kmat.resize(static_cast<size_t>(n * n));
        parallel_for(n, [&](int64_t begin, int64_t end) {
            for (int64_t i = begin; i < end; ++i)
                for (int64_t j = 0; j < n; ++j) kmat[static_cast<size_t>(i * n + j)] = kernel(i, j);
        });
    }

    std::vector<real> q0(static_cast<size_t>(n)), q1(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) softmax_pair(-pb.unary[i], -pb.unary[n + i], q0[static_cast<size_t>(i)], q1[static_cast<size_t>(i)]);

    std::vector<real> m0(static_cast<size_t>(n)), m1(static_cast<size_t>(n)), n0(static_cast<size_t>(n)), n1(static_cast<size_t>(n));
    if (stats) stats->label_flips.assign(static_cast<size_t>(prm.iterations), 0);

    for (int64_t it = 0; it < prm.iterations; ++it) {
        parallel_for(n, [&](int64_t begin, int64_t end) {
            for (int64_t i = begin; i < end; ++i) {
                real acc0 = 0, acc1 = 0;
                if (!kmat.empty()) {
                    const real* row = kmat.data() + i * n;
                    for (int64_t j = 0; j < n; ++j) {
                        acc0 += row[j] * q0[static_cast<size_t>(j)];
                        acc1 += row[j] * q1[static_cast<size_t>(j)];
                    }
                    // row[i] covers j == i; its kernel value is w_s + w_a
                    real self = row[i];
                    acc0 -= self * q0[static_cast<size_t>(i)];
                    acc1 -= self * q1[static_cast<size_t>(i)];
                } else {
                    for (int64_t j = 0; j < n; ++j) {
                        if (j == i) continue;
                        real kv = kernel(i, j);
                        acc0 += kv * q0[static_cast<size_t>(j)];
                        acc1 += kv * q1[static_cast<size_t>(j)];
                    }
                }
                m0[static_cast<size_t>(i)] = acc0;
                m1[static_cast<size_t>(i)] = acc1;
            }
        });
        int64_t flips = 0;
        for (int64_t i = 0; i < n; ++i) {
            // Potts with unit penalty couples each label to the other's message.
            real e0 = -pb.unary[i] - m1[static_cast<size_t>(i)];
            real e1 = -pb.unary[n + i] - m0[static_cast<size_t>(i)];
            softmax_pair(e0, e1, n0[static_cast<size_t>(i)], n1[static_cast<size_t>(i)]);
            bool before = q1[static_cast<size_t>(i)] >= q0[static_cast<size_t>(i)];
            bool after = n1[static_cast<size_t>(i)] >= n0[static_cast<size_t>(i)];
            if (before != after) ++flips;
        }
        q0.swap(n0);
        q1.swap(n1);
        if (stats) stats->label_flips[static_cast<size_t>(it)] = flips;
    }

    Tensor out({2, h, w});
    for (int64_t i = 0; i < n; ++i) {
        out[i] = q0[static_cast<size_t>(i)];
        out[n + i] = q1[static_cast<size_t>(i)];
    }
    return out;
}

Tensor squeeze_prob(const Tensor& prob) {
    if (prob.ndim() == 3 && prob.shape()[0] == 2) return prob;
    if (prob.ndim() == 4 && prob.n() == 1 && prob.c() == 2) {
        Tensor out({2, prob.h(), prob.w()});
        for (int64_t i = 0; i < out.numel(); ++i) out[i] = prob[i];
        return out;
    }
    throw std::invalid_argument("crf: probabilities must be (2, h, w) or (1, 2, h, w)");
}

} // namespace

void CrfParams::validate() const {
    if (smoothness_sigma <= 0 || appearance_sigma <= 0 || color_sigma <= 0)
        throw std::invalid_argument("crf params: bandwidths must be positive");
    if (smoothness_weight < 0 || appearance_weight < 0)
        throw std::invalid_argument("crf params: weights must be nonnegative");
    if (iterations < 1) throw std::invalid_argument("crf params: iterations must be >= 1");
    if (max_side < 1) throw std::invalid_argument("crf params: max_side must be >= 1");
}

Tensor unary_from_prob(const Tensor& prob) {
    Tensor p = squeeze_prob(prob);
    Tensor out(p.shape());
    for (int64_t i = 0; i < p.numel(); ++i) out[i] = -std::log(std::max(p[i], kProbFloor));
    return out;
}

Tensor mean_field(const Tensor& image, const Tensor& unary, const CrfParams& params,
                  MeanFieldStats* stats) {
    params.validate();
    if (image.ndim() != 3 || image.shape()[0] != 3)
        throw std::invalid_argument("mean_field: image must be (3, h, w)");
    if (unary.ndim() != 3 || unary.shape()[0] != 2)
        throw std::invalid_argument("mean_field: unary must be (2, h, w)");
    int64_t h = image.shape()[1], w = image.shape()[2];
    if (unary.shape()[1] != h || unary.shape()[2] != w)
        throw std::invalid_argument("mean_field: image and unary sizes differ");

    int64_t side = std::max(h, w);
    if (side <= params.max_side) {
        Problem pb{h, w, h * w, image, unary};
        return solve(pb, params, stats);
    }

    real scale = real(params.max_side) / real(side);
    int64_t hs = std::max<int64_t>(1, int64_t(std::lround(real(h) * scale)));
    int64_t ws = std::max<int64_t>(1, int64_t(std::lround(real(w) * scale)));
    Tensor img_small = resize_bilinear(image, hs, ws);
    // Quantize back to 8-bit so the reduced image is still an image (and the
    // color table applies).
    for (int64_t i = 0; i < img_small.numel(); ++i)
        img_small[i] = real(clamp_u8(img_small[i]));
    Tensor unary_small = resize_bilinear(unary, hs, ws);
    Problem pb{hs, ws, hs * ws, img_small, unary_small};
    Tensor q_small = solve(pb, params, stats);
    return resize_nearest(q_small, h, w);
}

ImageU8 refine(const ImageU8& image, const Tensor& prob, const CrfParams& params) {
    if (image.channels != 3) throw std::invalid_argument("refine: image must have 3 channels");
    Tensor p = squeeze_prob(prob);
    if (p.shape()[1] != image.h || p.shape()[2] != image.w)
        throw std::invalid_argument("refine: image and probability sizes differ");
    Tensor planes({3, image.h, image.w});
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < image.h; ++y)
            for (int64_t x = 0; x < image.w; ++x)
                planes[(c * image.h + y) * image.w + x] = real(image.at(y, x, c));

    Tensor q = mean_field(planes, unary_from_prob(p), params);
    ImageU8 mask(image.h, image.w, 1);
    int64_t n = image.h * image.w;
    for (int64_t i = 0; i < n; ++i) mask.pixels[static_cast<size_t>(i)] = q[n + i] >= q[i] ? 255 : 0;
    return mask;
}

} // namespace iifcn
