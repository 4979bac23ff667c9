#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iifcn/checkpoint.hpp"
#include "iifcn/config.hpp"
#include "iifcn/crf.hpp"
#include "iifcn/dataset.hpp"
#include "iifcn/metrics.hpp"
#include "iifcn/png_io.hpp"
#include "iifcn/trainer.hpp"

namespace {

using namespace iifcn;

Tensor object_prob_plane(const Tensor& prob) { // (1,2,h,w) -> (h,w)
    int64_t h = prob.h(), w = prob.w();
    Tensor out({h, w});
    for (int64_t i = 0; i < h * w; ++i) out[i] = prob[h * w + i];
    return out;
}

ImageU8 prob_to_png(const Tensor& plane) { // (h,w) in [0,1] -> 8-bit gray
    ImageU8 img(plane.shape()[0], plane.shape()[1], 1);
    for (int64_t i = 0; i < plane.numel(); ++i) img.pixels[static_cast<size_t>(i)] = clamp_u8(plane[i] * 255.0);
    return img;
}

ImageU8 binary_to_png(const Tensor& mask) { // values {0,1} -> {0,255}
    ImageU8 img(mask.shape()[0], mask.shape()[1], 1);
    for (int64_t i = 0; i < mask.numel(); ++i)
        img.pixels[static_cast<size_t>(i)] = mask[i] != 0.0 ? 255 : 0;
    return img;
}

int run_train(const std::string& data_dir, const std::string& config_path, int64_t synthetic,
              uint64_t seed, bool seed_given, const std::string& out_dir) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed_given) cfg.train.seed = seed;
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    std::vector<SamplePair> samples;
    if (synthetic > 0) {
        int64_t h = nearest_admissible(cfg.train.stages[0].h, cfg.model.blocks);
        int64_t w = nearest_admissible(cfg.train.stages[0].w, cfg.model.blocks);
        samples = synth_dataset(synthetic, h, w, cfg.train.seed);
    } else {
        if (cfg.data_dir.empty())
            throw std::invalid_argument("train: provide --data or --synthetic");
        samples = load_dataset(cfg.data_dir).samples;
    }
    std::string out = cfg.out_dir.empty() ? "." : cfg.out_dir;
    train(samples, cfg, out, &std::cout);
    return 0;
}

int run_infer(const std::string& ckpt, const std::string& image_path, real threshold, bool use_crf,
              const std::string& out_path, const std::string& prob_out) {
    Model model = load_checkpoint(ckpt);
    ImageU8 image = read_png(image_path);
    if (image.channels != 3) throw std::invalid_argument("infer: image must be RGB");
    Tensor prob = model.pad_and_crop_infer(image_to_tensor(image));
    if (use_crf) {
        CrfParams params;
        write_png(out_path, refine(image, prob, params));
    } else {
        write_png(out_path, binary_to_png(threshold_mask(object_prob_plane(prob), threshold)));
    }
    if (!prob_out.empty()) write_png(prob_out, prob_to_png(object_prob_plane(prob)));
    return 0;
}

int run_eval(const std::string& ckpt, const std::string& data_dir, real threshold, bool use_crf) {
    Model model = load_checkpoint(ckpt);
    Dataset ds = load_dataset(data_dir);
    if (ds.samples.empty()) throw std::invalid_argument("eval: dataset is empty");
    CrfParams params;
    std::cout << metric_csv_header() << "\n";
    std::vector<MetricReport> reports;
    for (const auto& s : ds.samples) {
        Tensor prob = model.pad_and_crop_infer(image_to_tensor(s.image));
        Tensor gt = mask_to_tensor(s.mask);
        MetricReport r;
        if (use_crf)
            r = evaluate(mask_to_tensor(refine(s.image, prob, params)), gt);
        else
            r = evaluate(threshold_mask(object_prob_plane(prob), threshold), gt);
        reports.push_back(r);
        std::cout << metric_csv_line(s.id, r) << "\n";
    }
    std::cout << metric_csv_line("mean", dataset_mean(reports)) << "\n";
    return 0;
}

int run_refine(const std::string& image_path, const std::string& prob_path,
               const std::string& out_path, int64_t iters) {
    ImageU8 image = read_png(image_path);
    if (image.channels != 3) throw std::invalid_argument("refine: image must be RGB");
    ImageU8 prob_img = read_png(prob_path);
    if (prob_img.channels != 1)
        throw std::invalid_argument("refine: probability map must be grayscale");
    if (prob_img.h != image.h || prob_img.w != image.w)
        throw std::invalid_argument("refine: image and probability sizes differ");
    Tensor prob({2, image.h, image.w});
    int64_t n = image.h * image.w;
    for (int64_t i = 0; i < n; ++i) {
        real p = real(prob_img.pixels[static_cast<size_t>(i)]) / 255.0;
        prob[i] = 1 - p;
        prob[n + i] = p;
    }
    CrfParams params;
    params.iterations = iters;
    write_png(out_path, refine(image, prob, params));
    return 0;
}

int run_synth(int64_t n, const std::vector<int64_t>& size, uint64_t seed,
              const std::string& out_dir) {
    auto samples = synth_dataset(n, size[0], size[1], seed);
    for (const auto& s : samples) save_pair(out_dir, s);
    std::cout << "wrote " << samples.size() << " pairs to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lesion segmentation with an inception encoder-decoder"};
    app.require_subcommand(1);

    auto* t = app.add_subcommand("train", "Train a model");
    std::string t_data, t_config, t_out;
    int64_t t_synth = 0;
    uint64_t t_seed = 0;
    t->add_option("--data", t_data, "Dataset directory (<id>.png + <id>_segmentation.png)");
    t->add_option("--config", t_config, "Configuration file");
    t->add_option("--synthetic", t_synth, "Generate N synthetic samples instead of loading data");
    auto* t_seed_opt = t->add_option("--seed", t_seed, "Override the configured seed");
    t->add_option("--out", t_out, "Output directory for checkpoints and the log");

    auto* i = app.add_subcommand("infer", "Segment one image");
    std::string i_ckpt, i_image, i_out, i_prob_out;
    real i_threshold = 0.8;
    bool i_crf = false;
    i->add_option("--checkpoint", i_ckpt, "Model checkpoint")->required();
    i->add_option("--image", i_image, "Input RGB PNG")->required();
    i->add_option("--threshold", i_threshold, "Object probability threshold");
    i->add_flag("--crf", i_crf, "Refine with the dense CRF instead of thresholding");
    i->add_option("--out", i_out, "Output mask PNG")->required();
    i->add_option("--prob-out", i_prob_out, "Also write the probability map PNG");

    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    std::string e_ckpt, e_data;
    real e_threshold = 0.8;
    bool e_crf = false;
    e->add_option("--checkpoint", e_ckpt, "Model checkpoint")->required();
    e->add_option("--data", e_data, "Dataset directory")->required();
    e->add_option("--threshold", e_threshold, "Object probability threshold");
    e->add_flag("--crf", e_crf, "Refine with the dense CRF before scoring");

    auto* r = app.add_subcommand("refine", "CRF-refine a probability map");
    std::string r_image, r_prob, r_out;
    int64_t r_iters = 10;
    r->add_option("--image", r_image, "Original RGB PNG")->required();
    r->add_option("--prob", r_prob, "Grayscale probability map PNG")->required();
    r->add_option("--out", r_out, "Output mask PNG")->required();
    r->add_option("--crf-iters", r_iters, "Mean-field iterations");

    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
    int64_t s_n = 0;
    std::vector<int64_t> s_size;
    uint64_t s_seed = 1;
    std::string s_out;
    s->add_option("--n", s_n, "Number of samples")->required();
    s->add_option("--size", s_size, "Height and width")->expected(2)->required();
    s->add_option("--seed", s_seed, "Generator seed");
    s->add_option("--out", s_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
        if (t->parsed())
            return run_train(t_data, t_config, t_synth, t_seed, t_seed_opt->count() > 0, t_out);
        if (i->parsed()) return run_infer(i_ckpt, i_image, i_threshold, i_crf, i_out, i_prob_out);
        if (e->parsed()) return run_eval(e_ckpt, e_data, e_threshold, e_crf);
        if (r->parsed()) return run_refine(r_image, r_prob, r_out, r_iters);
        if (s->parsed()) return run_synth(s_n, s_size, s_seed, s_out);
        return 1;
    } catch (const CLI::ParseError& ex) {
        int code = app.exit(ex);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "internal error: " << ex.what() << "\n";
        return 2;
    }
}
