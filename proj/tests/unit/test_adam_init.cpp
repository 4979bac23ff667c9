#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "iifcn/adam.hpp"
#include "iifcn/autodiff.hpp"
#include "iifcn/init.hpp"
#include "iifcn/rng.hpp"

using namespace iifcn;

TEST_CASE("adam defaults are pinned") {
    AdamConfig c;
    CHECK(c.lr == 1e-4);
    CHECK(c.beta1 == 0.9);
    CHECK(c.beta2 == 0.9999);
    CHECK(c.epsilon == 1e-8);
}

TEST_CASE("zero gradient leaves the parameter unchanged") {
    Var w = parameter(Tensor({2}, {1.5, -2.0}), "w");
    Adam opt({w}, AdamConfig{});
    w->ensure_grad();
    opt.step();
    CHECK(w->value[0] == 1.5);
    CHECK(w->value[1] == -2.0);
    CHECK(opt.step_count() == 1);
}

TEST_CASE("first step moves by about lr against the gradient sign") {
    AdamConfig cfg;
    cfg.lr = 1e-3;
    Var w = parameter(Tensor({3}, {0.0, 0.0, 0.0}), "w");
    Adam opt({w}, cfg);
    w->ensure_grad();
    w->grad[0] = 0.7;
    w->grad[1] = -123.0;
    w->grad[2] = 1e-3;
    opt.step();
    for (int64_t i = 0; i < 3; ++i) {
        double g = (i == 0) ? 0.7 : (i == 1 ? -123.0 : 1e-3);
        double want = -cfg.lr * g / (std::fabs(g) + cfg.epsilon);
        CHECK(w->value[i] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("adam update matches a scalar transcription") {
    AdamConfig cfg;
    cfg.lr = 0.01;
    Var w = parameter(Tensor({1}, {0.3}), "w");
    Adam opt({w}, cfg);

    double m = 0.0, v = 0.0, x = 0.3;
    Rng rng(55);
    for (int t = 1; t <= 25; ++t) {
        double g = rng.uniform(-2.0, 2.0);
        w->ensure_grad();
        w->grad[0] = g;
        opt.step();

        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
        double mhat = m / (1 - std::pow(cfg.beta1, t));
        double vhat = v / (1 - std::pow(cfg.beta2, t));
        x -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);

        CHECK(w->value[0] == doctest::Approx(x).epsilon(1e-13));
        CHECK(opt.first_moment(0)[0] == doctest::Approx(m).epsilon(1e-13));
        CHECK(opt.second_moment(0)[0] == doctest::Approx(v).epsilon(1e-13));
        CHECK(opt.second_moment(0)[0] >= 0.0);
    }
    CHECK(opt.step_count() == 25);
}

TEST_CASE("200 adam steps on x squared reach the basin") {
    AdamConfig cfg;
    cfg.lr = 0.1;
    Var w = parameter(Tensor({1}, {1.0}), "w");
    Adam opt({w}, cfg);
    for (int t = 0; t < 200; ++t) {
        opt.zero_grad();
        backward(sum(mul(w, w)));
        opt.step();
    }
    CHECK(std::fabs(w->value[0]) < 0.05);
}

TEST_CASE("adam drives a tiny conv toward a target") {
    Rng rng(61);
    Tensor x = testutil::rand_tensor({1, 1, 4, 4}, rng);
    Tensor target = testutil::rand_tensor({1, 1, 2, 2}, rng, -0.2, 0.2);
    Var k = parameter(testutil::rand_tensor({1, 1, 3, 3}, rng, -0.3, 0.3), "k");
    AdamConfig cfg;
    cfg.lr = 0.02;
    Adam opt({k}, cfg);

    auto loss_value = [&]() {
        Var y = conv2d(constant(x), k, nullptr, Padding::valid());
        Var d = add(y, mul_scalar(constant(target), -1.0));
        Var l = sum(mul(d, d));
        return l;
    };
    double first = loss_value()->value[0];
    for (int t = 0; t < 150; ++t) {
        opt.zero_grad();
        backward(loss_value());
        opt.step();
    }
    double last = loss_value()->value[0];
    CHECK(last < 0.01 * first);
}

TEST_CASE("he_normal is deterministic with the stated spread") {
    Rng a = Rng::stream(9, 1, 2, 3);
    Rng b = Rng::stream(9, 1, 2, 3);
    Tensor t1 = he_normal({64, 64, 3, 3}, 64 * 3 * 3, a);
    Tensor t2 = he_normal({64, 64, 3, 3}, 64 * 3 * 3, b);
    CHECK(testutil::max_abs_diff(t1, t2) == 0.0);

    double sum = 0.0, sq = 0.0;
    for (int64_t i = 0; i < t1.numel(); ++i) {
        sum += t1[i];
        sq += t1[i] * t1[i];
    }
    double n = static_cast<double>(t1.numel());
    double mean = sum / n;
    double sd = std::sqrt(sq / n - mean * mean);
    double want = std::sqrt(2.0 / 576.0);
    CHECK(std::fabs(sd - want) < 0.1 * want);
    CHECK(std::fabs(mean) < 0.1 * want);
}

TEST_CASE("he_normal draws in flat order") {
    Rng a = Rng::stream(5, 0, 0, 0);
    Rng b = Rng::stream(5, 0, 0, 0);
    Tensor t = he_normal({2, 3}, 12, a);
    double std = std::sqrt(2.0 / 12.0);
    for (int64_t i = 0; i < 6; ++i)
        CHECK(t[i] == doctest::Approx(std * b.normal()).epsilon(1e-15));
}
