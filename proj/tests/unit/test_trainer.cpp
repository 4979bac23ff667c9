#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "iifcn/checkpoint.hpp"
#include "iifcn/trainer.hpp"

using namespace iifcn;
namespace fs = std::filesystem;

namespace {

RunConfig toy_config() {
    RunConfig cfg;
    cfg.model.blocks = 1;
    cfg.model.widths = {4};
    cfg.model.branch_channels = {2};
    cfg.model.dilated_head = {{3, 2}};
    cfg.train.stages = {{20, 20, 2, 2}};
    cfg.train.seed = 5;
    cfg.train.val_split = 2;
    cfg.train.checkpoint_every = 1;
    cfg.crf.iterations = 2;
    cfg.crf.max_side = 16;
    return cfg;
}

bool same_params(const Model& a, const Model& b) {
    if (a.parameters().size() != b.parameters().size()) return false;
    for (size_t i = 0; i < a.parameters().size(); ++i) {
        const Tensor& x = a.parameters()[i]->value;
        const Tensor& y = b.parameters()[i]->value;
        if (x.shape() != y.shape()) return false;
        for (int64_t j = 0; j < x.numel(); ++j)
            if (x[j] != y[j]) return false;
    }
    return true;
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("iifcn_train_" + tag);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("training refuses a dataset the validation split would consume") {
    RunConfig cfg = toy_config();
    cfg.train.val_split = 3;
    std::vector<SamplePair> data = synth_dataset(3, 20, 20, 3);
    CHECK_THROWS_WITH_AS(
        train(data, cfg),
        doctest::Contains("train: dataset of 3 samples cannot spare a validation split of 3"),
        std::invalid_argument);
}

TEST_CASE("zero scheduled epochs leave the freshly seeded model untouched") {
    RunConfig cfg = toy_config();
    cfg.train.stages = {{20, 20, 2, 0}};
    std::vector<SamplePair> data = synth_dataset(4, 20, 20, 3);

    fs::path dir = fresh_dir("zero");
    TrainResult r = train(data, cfg, dir.string());
    CHECK(r.log.empty());
    Model fresh(cfg.model, cfg.train.seed);
    CHECK(same_params(r.model, fresh));

    CHECK(fs::exists(dir / "model_final.ckpt"));
    std::ifstream log_in(dir / "train_log.csv");
    std::string line;
    REQUIRE(std::getline(log_in, line));
    CHECK(line == epoch_csv_header());
    CHECK_FALSE(std::getline(log_in, line));
    fs::remove_all(dir);
}

TEST_CASE("identical seeds reproduce the run exactly") {
    RunConfig cfg = toy_config();
    std::vector<SamplePair> data = synth_dataset(6, 20, 20, 3);

    TrainResult a = train(data, cfg);
    TrainResult b = train(data, cfg);
    REQUIRE(a.log.size() == 2);
    REQUIRE(b.log.size() == 2);
    for (size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].epoch == b.log[i].epoch);
        CHECK(a.log[i].stage == b.log[i].stage);
        CHECK(a.log[i].mean_train_loss == b.log[i].mean_train_loss);
        CHECK(a.log[i].entropy_term == b.log[i].entropy_term);
        CHECK(a.log[i].jaccard_term == b.log[i].jaccard_term);
        CHECK(a.log[i].val_jaccard_baseline == b.log[i].val_jaccard_baseline);
        CHECK(a.log[i].val_jaccard_crf == b.log[i].val_jaccard_crf);
    }
    CHECK(same_params(a.model, b.model));

    RunConfig other = cfg;
    other.train.seed = 6;
    TrainResult c = train(data, other);
    CHECK_FALSE(same_params(a.model, c.model));

    for (const auto& e : a.log) {
        CHECK(std::isfinite(e.mean_train_loss));
        CHECK(e.mean_train_loss > 0);
        CHECK(e.entropy_term >= 0);
        CHECK(e.jaccard_term >= 0);
        CHECK(doctest::Approx(e.mean_train_loss).epsilon(1e-9) ==
              e.entropy_term + e.jaccard_term);
        CHECK(e.val_jaccard_baseline >= 0);
        CHECK(e.val_jaccard_baseline <= 1);
        CHECK(e.val_jaccard_crf >= 0);
        CHECK(e.val_jaccard_crf <= 1);
        CHECK(e.wall_seconds >= 0);
    }
    CHECK(a.log[0].epoch == 1);
    CHECK(a.log[1].epoch == 2);
    CHECK(a.log[0].stage == 1);
}

TEST_CASE("a trailing zero-epoch stage changes nothing") {
    std::vector<SamplePair> data = synth_dataset(6, 20, 20, 3);
    RunConfig one = toy_config();
    RunConfig two = toy_config();
    two.train.stages = {{20, 20, 2, 2}, {28, 28, 2, 0}};

    TrainResult a = train(data, one);
    TrainResult b = train(data, two);
    CHECK(a.log.size() == b.log.size());
    CHECK(same_params(a.model, b.model));
}

TEST_CASE("loss falls by half on an easy deterministic problem") {
    RunConfig cfg = toy_config();
    cfg.train.stages = {{20, 20, 2, 20}};
    cfg.train.val_split = 0; // skip per-epoch validation, focus on the optimizer
    cfg.train.adam.lr = 8e-3;
    cfg.augment.stage1_prob = 0;
    cfg.augment.stage2_prob = 0;
    cfg.augment.stage3_prob = 0;
    std::vector<SamplePair> data = synth_dataset(8, 20, 20, 3);

    TrainResult r = train(data, cfg);
    REQUIRE(r.log.size() == 20);
    for (const auto& e : r.log) {
        CHECK(std::isfinite(e.mean_train_loss));
        CHECK(e.val_jaccard_baseline == 0.0);
        CHECK(e.val_jaccard_crf == 0.0);
    }
    real first = r.log.front().mean_train_loss;
    real last = r.log.back().mean_train_loss;
    CHECK(last < 0.5 * first);
}

TEST_CASE("training writes checkpoints, a csv log, and progress lines") {
    RunConfig cfg = toy_config();
    std::vector<SamplePair> data = synth_dataset(6, 20, 20, 3);
    fs::path dir = fresh_dir("artifacts");
    std::ostringstream progress;

    TrainResult r = train(data, cfg, dir.string(), &progress);
    REQUIRE(r.log.size() == 2);

    CHECK(fs::exists(dir / "model_epoch_1.ckpt"));
    CHECK(fs::exists(dir / "model_epoch_2.ckpt"));
    CHECK(fs::exists(dir / "model_final.ckpt"));

    Model final_model = load_checkpoint((dir / "model_final.ckpt").string());
    CHECK(same_params(final_model, r.model));
    Model mid = load_checkpoint((dir / "model_epoch_1.ckpt").string());
    CHECK_FALSE(same_params(mid, r.model));

    std::string expected = epoch_csv_header() + "\n";
    for (const auto& e : r.log) expected += epoch_csv_line(e) + "\n";
    CHECK(progress.str() == expected);

    std::ifstream log_in(dir / "train_log.csv");
    std::stringstream file_text;
    file_text << log_in.rdbuf();
    CHECK(file_text.str() == expected);
    fs::remove_all(dir);
}

TEST_CASE("checkpoint cadence follows checkpoint_every") {
    RunConfig cfg = toy_config();
    cfg.train.stages = {{20, 20, 2, 3}};
    cfg.train.checkpoint_every = 2;
    std::vector<SamplePair> data = synth_dataset(6, 20, 20, 3);
    fs::path dir = fresh_dir("cadence");

    train(data, cfg, dir.string());
    CHECK_FALSE(fs::exists(dir / "model_epoch_1.ckpt"));
    CHECK(fs::exists(dir / "model_epoch_2.ckpt"));
    CHECK_FALSE(fs::exists(dir / "model_epoch_3.ckpt"));
    CHECK(fs::exists(dir / "model_final.ckpt"));
    fs::remove_all(dir);
}

TEST_CASE("validate aggregates per-image metrics") {
    RunConfig cfg = toy_config();
    Model model(cfg.model, 1);
    std::vector<SamplePair> data = synth_dataset(3, 20, 20, 3);

    MetricReport base = validate(model, data, 0.8, false, cfg.crf);
    CHECK(base.jaccard >= 0);
    CHECK(base.jaccard <= 1);
    CHECK(base.tp + base.fp + base.tn + base.fn == 3 * 20 * 20);

    MetricReport crf = validate(model, data, 0.8, true, cfg.crf);
    CHECK(crf.jaccard >= 0);
    CHECK(crf.jaccard <= 1);

    CHECK_THROWS_WITH_AS(validate(model, {}, 0.8, false, cfg.crf),
                         doctest::Contains("validate: no samples"), std::invalid_argument);
}

TEST_CASE("epoch csv formatting is stable") {
    CHECK(epoch_csv_header() ==
          "epoch,stage,mean_train_loss,entropy_term,jaccard_term,val_jaccard_baseline,"
          "val_jaccard_crf,wall_seconds");
    EpochLog e;
    e.epoch = 3;
    e.stage = 2;
    e.mean_train_loss = 0.5;
    e.entropy_term = 0.25;
    e.jaccard_term = 0.125;
    e.val_jaccard_baseline = 0.75;
    e.val_jaccard_crf = 0.5;
    e.wall_seconds = 1.5;
    CHECK(epoch_csv_line(e) == "3,2,0.5,0.25,0.125,0.75,0.5,1.500");
}
