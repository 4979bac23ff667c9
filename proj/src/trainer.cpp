#include "iifcn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "iifcn/checkpoint.hpp"
#include "iifcn/crf.hpp"

namespace iifcn {

namespace {

SamplePair resize_pair(const SamplePair& s, int64_t h, int64_t w) {
    SamplePair out;
    out.id = s.id;
    out.image = resize_bilinear(s.image, h, w);
    out.mask = resize_nearest(s.mask, h, w); // nearest keeps {0,255} exact
    return out;
}

Tensor object_plane(const Tensor& prob) { // (1,2,h,w) -> (h,w) of channel 1
    int64_t h = prob.h(), w = prob.w();
    Tensor out({h, w});
    for (int64_t i = 0; i < h * w; ++i) out[i] = prob[h * w + i];
    return out;
}

} // namespace

MetricReport validate(const Model& model, const std::vector<SamplePair>& samples, real threshold,
                      bool with_crf, const CrfParams& crf) {
    if (samples.empty()) throw std::invalid_argument("validate: no samples");
    std::vector<MetricReport> reports;
    reports.reserve(samples.size());
    for (const auto& s : samples) {
        Tensor prob = model.pad_and_crop_infer(image_to_tensor(s.image));
        Tensor gt = mask_to_tensor(s.mask);
        if (with_crf) {
            ImageU8 refined = refine(s.image, prob, crf);
            reports.push_back(evaluate(mask_to_tensor(refined), gt));
        } else {
            reports.push_back(evaluate(threshold_mask(object_plane(prob), threshold), gt));
        }
    }
    return dataset_mean(reports);
}

TrainResult train(const std::vector<SamplePair>& dataset, const RunConfig& cfg,
                  const std::string& out_dir, std::ostream* progress) {
    cfg.validate();
    const TrainConfig& tc = cfg.train;
    if (int64_t(dataset.size()) <= tc.val_split)
        throw std::invalid_argument("train: dataset of " + std::to_string(dataset.size()) +
                                    " samples cannot spare a validation split of " +
                                    std::to_string(tc.val_split));
    int64_t train_n = int64_t(dataset.size()) - tc.val_split;
    std::vector<SamplePair> val(dataset.begin() + train_n, dataset.end());

    TrainResult result{Model(cfg.model, tc.seed), {}};
    Model& model = result.model;
    Adam adam(model.parameters(), tc.adam);

    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    if (progress) *progress << epoch_csv_header() << "\n" << std::flush;

    int64_t global_epoch = 0;
    for (size_t stage_i = 0; stage_i < tc.stages.size(); ++stage_i) {
        const ScaleStage& stage = tc.stages[stage_i];
        int64_t sh = nearest_admissible(stage.h, cfg.model.blocks);
        int64_t sw = nearest_admissible(stage.w, cfg.model.blocks);

        for (int64_t e = 0; e < stage.epochs; ++e) {
            ++global_epoch;
            auto t0 = std::chrono::steady_clock::now();

            std::vector<int64_t> order(static_cast<size_t>(train_n));
            for (int64_t i = 0; i < train_n; ++i) order[static_cast<size_t>(i)] = i;
            Rng shuffle_rng = Rng::stream(tc.seed, 0xE, uint64_t(global_epoch), 0);
            for (int64_t i = train_n - 1; i > 0; --i) {
                int64_t j = int64_t(shuffle_rng.uniform_int(uint64_t(i + 1)));
                std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
            }

            real loss_sum = 0, entropy_sum = 0, jaccard_sum = 0;
            int64_t seen = 0;
            for (int64_t start = 0; start < train_n; start += stage.batch) {
                int64_t bn = std::min(stage.batch, train_n - start);
                Var batch_total;
                std::string batch_ids;
                for (int64_t bi = 0; bi < bn; ++bi) {
                    int64_t idx = order[static_cast<size_t>(start + bi)];
                    Rng aug_rng = Rng::stream(tc.seed, uint64_t(idx), uint64_t(global_epoch), 1);
                    SamplePair s = augment(dataset[static_cast<size_t>(idx)], cfg.augment, aug_rng);
                    s = resize_pair(s, sh, sw);
                    batch_ids += (bi ? "," : "") + s.id;

                    Var prob = model.forward(constant(image_to_tensor(s.image)));
                    CombinedLoss parts = combined_loss(prob, mask_to_tensor(s.mask),
                                                       tc.jaccard_k, tc.jaccard_mode);
                    loss_sum += parts.total->value[0];
                    entropy_sum += parts.entropy->value[0];
                    jaccard_sum += parts.jaccard->value[0];
                    batch_total = batch_total ? add(batch_total, parts.total) : parts.total;
                }
                Var batch_loss = mul_scalar(batch_total, 1.0 / real(bn));
                if (!std::isfinite(batch_loss->value[0]))
                    throw std::runtime_error(
                        "train: non-finite loss in epoch " + std::to_string(global_epoch) +
                        ", batch starting at sample " + std::to_string(start) + " (" + batch_ids +
                        ")");
                model.zero_grad();
                backward(batch_loss);
                adam.step();
                seen += bn;
            }

            EpochLog log;
            log.epoch = global_epoch;
            log.stage = int64_t(stage_i) + 1;
            log.mean_train_loss = loss_sum / real(seen);
            log.entropy_term = entropy_sum / real(seen);
            log.jaccard_term = jaccard_sum / real(seen);
            if (!val.empty()) {
                log.val_jaccard_baseline = validate(model, val, 0.8, false, cfg.crf).jaccard;
                log.val_jaccard_crf = validate(model, val, 0.8, true, cfg.crf).jaccard;
            }
            log.wall_seconds =
                std::chrono::duration<real>(std::chrono::steady_clock::now() - t0).count();
            result.log.push_back(log);
            if (progress) *progress << epoch_csv_line(log) << "\n" << std::flush;

            if (!out_dir.empty() && global_epoch % tc.checkpoint_every == 0)
                save_checkpoint(model, out_dir + "/model_epoch_" +
                                           std::to_string(global_epoch) + ".ckpt");
        }
    }

    if (!out_dir.empty()) {
        save_checkpoint(model, out_dir + "/model_final.ckpt");
        std::ofstream log_out(out_dir + "/train_log.csv", std::ios::trunc);
        log_out << epoch_csv_header() << "\n";
        for (const auto& e : result.log) log_out << epoch_csv_line(e) << "\n";
    }
    return result;
}

std::string epoch_csv_header() {
    return "epoch,stage,mean_train_loss,entropy_term,jaccard_term,val_jaccard_baseline,"
           "val_jaccard_crf,wall_seconds";
}

std::string epoch_csv_line(const EpochLog& e) {
    char buf[320];
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.3f",
                  (long long)e.epoch, (long long)e.stage, e.mean_train_loss, e.entropy_term,
                  e.jaccard_term, e.val_jaccard_baseline, e.val_jaccard_crf, e.wall_seconds);
    return buf;
}

} // namespace iifcn
