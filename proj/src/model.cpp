#include "iifcn/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "iifcn/init.hpp"
#include "iifcn/parallel.hpp"

namespace iifcn {

void ModelConfig::validate() const {
    if (blocks < 1) throw std::invalid_argument("model config: blocks must be >= 1");
    if ((int64_t)widths.size() != blocks)
        throw std::invalid_argument("model config: widths must list one channel count per block");
    for (int64_t w : widths)
        if (w < 1) throw std::invalid_argument("model config: widths must be positive");
    if (!branch_channels.empty()) {
        if ((int64_t)branch_channels.size() != blocks)
            throw std::invalid_argument(
                "model config: branch_channels must be empty or one count per block");
        for (int64_t b : branch_channels)
            if (b < 1) throw std::invalid_argument("model config: branch_channels must be positive");
    }
    if (dilated_head.empty())
        throw std::invalid_argument("model config: dilated head needs at least one convolution");
    for (const auto& d : dilated_head) {
        if (d.kernel < 1 || d.kernel % 2 == 0)
            throw std::invalid_argument("model config: dilated head kernels must be odd");
        if (d.rate < 1) throw std::invalid_argument("model config: dilation rate must be >= 1");
    }
    if (num_classes != 2)
        throw std::invalid_argument("model config: only two-class output is supported");
}

std::vector<int64_t> ModelConfig::resolved_branch_channels() const {
    if (!branch_channels.empty()) return branch_channels;
    std::vector<int64_t> bc(widths.size());
    for (size_t i = 0; i < widths.size(); ++i) bc[i] = std::max<int64_t>(1, widths[i] / 4);
    return bc;
}

bool admissible(int64_t extent, int64_t blocks) {
    if (blocks < 1) throw std::invalid_argument("admissible: blocks must be >= 1");
    int64_t step = int64_t{1} << blocks;
    int64_t offset = 4 * (step - 1);
    return extent >= step + offset && (extent - offset) % step == 0;
}

int64_t nearest_admissible(int64_t extent, int64_t blocks) {
    if (blocks < 1) throw std::invalid_argument("nearest_admissible: blocks must be >= 1");
    int64_t step = int64_t{1} << blocks;
    int64_t offset = 4 * (step - 1);
    int64_t h = std::max<int64_t>(1, (extent - offset + step - 1) / step);
    return step * h + offset;
}

int64_t bottleneck_extent(int64_t extent, int64_t blocks) {
    if (!admissible(extent, blocks))
        throw std::invalid_argument("bottleneck_extent: size " + std::to_string(extent) +
                                    " is not admissible for " + std::to_string(blocks) +
                                    " blocks");
    int64_t step = int64_t{1} << blocks;
    return (extent - 4 * (step - 1)) / step;
}

Model::Model(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = Rng::stream(seed, 0x11, 0, 0);
    const int64_t B = cfg_.blocks;
    const auto& w = cfg_.widths;
    auto bc = cfg_.resolved_branch_channels();

    for (int64_t i = 0; i < B; ++i) {
        BlockSpec s;
        s.direction = BlockSpec::Direction::forward;
        s.in_channels = i == 0 ? 3 : w[i - 1];
        s.branch_channels = bc[i];
        s.out_channels = w[i];
        enc_specs_.push_back(s);
        enc_params_.push_back(make_block_params(s, "enc" + std::to_string(i + 1), rng, params_));
    }
    for (int64_t j = 0; j < B; ++j) {
        BlockSpec s;
        s.direction = BlockSpec::Direction::reversed;
        s.in_channels = j == 0 ? w[B - 1] : w[B - j];
        s.branch_channels = bc[B - 1 - j];
        s.out_channels = w[B - 1 - j];
        dec_specs_.push_back(s);
        dec_params_.push_back(make_block_params(s, "dec" + std::to_string(j + 1), rng, params_));
        int64_t bridge_c = w[B - 1 - j]; // encoder fusion output at the mirrored level
        if (bridge_c != s.in_channels) {
            Tensor k = he_normal({s.in_channels, bridge_c, 1, 1}, bridge_c, rng);
            Var a = parameter(k, "bridge" + std::to_string(j + 1) + ".kernel");
            params_.push_back(a);
            adapters_.push_back(a);
        } else {
            adapters_.push_back(nullptr);
        }
    }
    for (size_t i = 0; i < cfg_.dilated_head.size(); ++i) {
        const auto& d = cfg_.dilated_head[i];
        std::string name = "head" + std::to_string(i + 1);
        ConvParams cp;
        cp.kernel = parameter(he_normal({w[0], w[0], d.kernel, d.kernel},
                                        w[0] * d.kernel * d.kernel, rng),
                              name + ".kernel");
        cp.bias = parameter(Tensor::full({w[0]}, 0.0), name + ".bias");
        params_.push_back(cp.kernel);
        params_.push_back(cp.bias);
        head_.push_back(cp);
    }
    classifier_.kernel =
        parameter(he_normal({cfg_.num_classes, w[0], 1, 1}, w[0], rng), "cls.kernel");
    classifier_.bias = parameter(Tensor::full({cfg_.num_classes}, 0.0), "cls.bias");
    params_.push_back(classifier_.kernel);
    params_.push_back(classifier_.bias);
}

int64_t Model::parameter_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
}

void Model::zero_grad() {
    for (const auto& p : params_) p->zero_grad();
}

Var Model::forward(const Var& images) const {
    if (!images || images->value.ndim() != 4 || images->value.c() != 3)
        throw std::invalid_argument("forward: input must be (N, 3, H, W)");
    int64_t H = images->value.h(), W = images->value.w();
    if (!admissible(H, cfg_.blocks) || !admissible(W, cfg_.blocks))
        throw std::invalid_argument(
            "forward: input " + std::to_string(H) + "x" + std::to_string(W) +
            " is not admissible for " + std::to_string(cfg_.blocks) +
            " blocks; nearest admissible is " +
            std::to_string(nearest_admissible(H, cfg_.blocks)) + "x" +
            std::to_string(nearest_admissible(W, cfg_.blocks)));

    const int64_t B = cfg_.blocks;
    std::vector<Var> fusions(B);
    Var x = images;
    for (int64_t i = 0; i < B; ++i) x = forward_block(x, enc_specs_[i], enc_params_[i], &fusions[i]);
    for (int64_t j = 0; j < B; ++j) {
        Var bridge = fusions[B - 1 - j];
        if (adapters_[j]) bridge = conv2d(bridge, adapters_[j], nullptr, Padding::valid());
        x = reversed_block(x, dec_specs_[j], dec_params_[j], bridge);
    }
    for (size_t i = 0; i < head_.size(); ++i)
        x = relu(conv2d(x, head_[i].kernel, head_[i].bias,
                        Padding::dilated(cfg_.dilated_head[i].rate)));
    x = conv2d(x, classifier_.kernel, classifier_.bias, Padding::valid());
    return softmax2(x);
}

namespace {

// Reflect index without repeating the border sample; a single-pixel extent
// just repeats itself.
int64_t reflect_index(int64_t i, int64_t n) {
    if (n == 1) return 0;
    int64_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

Tensor reflect_pad(const Tensor& x, int64_t pad_top, int64_t pad_bottom, int64_t pad_left,
                   int64_t pad_right) {
    int64_t N = x.n(), C = x.c(), H = x.h(), W = x.w();
    int64_t Ho = H + pad_top + pad_bottom, Wo = W + pad_left + pad_right;
    Tensor out({N, C, Ho, Wo});
    parallel_for(N * C, [&](int64_t begin, int64_t end) {
        for (int64_t nc = begin; nc < end; ++nc) {
            int64_t n = nc / C, c = nc % C;
            for (int64_t y = 0; y < Ho; ++y) {
                int64_t sy = reflect_index(y - pad_top, H);
                for (int64_t xw = 0; xw < Wo; ++xw) {
                    int64_t sx = reflect_index(xw - pad_left, W);
                    out.at(n, c, y, xw) = x.at(n, c, sy, sx);
                }
            }
        }
    });
    return out;
}

} // namespace

Tensor Model::pad_and_crop_infer(const Tensor& images) const {
    if (images.ndim() != 4 || images.c() != 3)
        throw std::invalid_argument("pad_and_crop_infer: input must be (N, 3, H, W)");
    int64_t H = images.h(), W = images.w();
    int64_t Ht = nearest_admissible(H, cfg_.blocks), Wt = nearest_admissible(W, cfg_.blocks);
    Tensor padded = images;
    if (Ht != H || Wt != W) {
        int64_t dh = Ht - H, dw = Wt - W;
        padded = reflect_pad(images, dh / 2, dh - dh / 2, dw / 2, dw - dw / 2);
    }
    Var prob = forward(constant(padded));
    if (Ht == H && Wt == W) return prob->value;
    Var cropped = center_crop(prob, H, W);
    return cropped->value;
}

} // namespace iifcn
