#include <cmath>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "gvs/checkpoint.hpp"
#include "gvs/error.hpp"
#include "gvs/optim.hpp"
#include "gvs/sampler.hpp"
#include "gvs/train.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace gvs;

TEST_CASE("adamw: zero gradient, first step, decoupled decay") {
    Vector p = Vector::Constant(3, 0.7);
    AdamWState s = AdamWState::zeros(3);
    adamw_step(p, Vector::Zero(3), s, 0.1, 0.0);
    CHECK(p == Vector::Constant(3, 0.7));

    Vector q = Vector::Constant(1, 1.0);
    s = AdamWState::zeros(1);
    adamw_step(q, Vector::Constant(1, 1.0), s, 0.1, 0.0);
    CHECK(q(0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(s.step == 1);

    Vector r = Vector::Constant(2, 2.0);
    s = AdamWState::zeros(2);
    adamw_step(r, Vector::Zero(2), s, 0.01, 0.5);
    CHECK(r(0) == doctest::Approx(2.0 * (1 - 0.01 * 0.5)));

    CHECK_THROWS_AS(adamw_step(r, Vector::Zero(3), s, 0.01, 0.0), DimensionError);
}

TEST_CASE("learning-rate schedule") {
    const double lr = 1e-3;
    CHECK(lr_at_step(0, lr, 500, 2500) == 0.0);
    CHECK(lr_at_step(250, lr, 500, 2500) == doctest::Approx(lr / 2));
    CHECK(lr_at_step(500, lr, 500, 2500) == lr);
    CHECK(std::abs(lr_at_step(1500, lr, 500, 2500) - lr / 2) < 1e-9);
    CHECK(std::abs(lr_at_step(2500, lr, 500, 2500)) < 1e-12);
    double prev = lr;
    for (std::size_t s = 500; s <= 2500; s += 100) {
        const double v = lr_at_step(s, lr, 500, 2500);
        CHECK(v <= prev + 1e-15);
        prev = v;
    }
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.condition_dropout = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = {};
    cfg.lr = -1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = {};
    const auto fx = fixtures::two_class(10, 1);
    CHECK_THROWS_AS(train(fx.targets, &fx.conditions, {}, cfg, fixtures::small_arch()), Error);
    CHECK_THROWS_AS(train(fx.targets, &fx.conditions, {{0, 10}}, cfg, fixtures::small_arch()), Error);
}

TEST_CASE("unconditional training collapses onto a repeated point") {
    Matrix x(256, 3);
    x.rowwise() = RowVector::LinSpaced(3, -1.0, 2.0);
    const EmbeddingMatrix targets(x);
    TrainConfig cfg = fixtures::quick_config(60, 3, 64);
    Architecture a = fixtures::small_arch(32);
    const auto res = train(targets, nullptr, identity_pairs(256), cfg, a);
    CHECK_FALSE(res.model.arch().conditional());
    SampleConfig sc;
    sc.n_samples = 200;
    sc.seed = 5;
    const EmbeddingMatrix s = euler_generate(res.model, nullptr, sc);
    const double err = (s.data().rowwise() - x.row(0)).rowwise().norm().mean();
    CHECK(err < 0.1);
}

TEST_CASE("conditional two-class moments and regression baseline") {
    const auto fx = fixtures::two_class(1024, 7);
    const auto res = train(fx.targets, &fx.conditions, identity_pairs(1024), fixtures::quick_config(40, 7),
                           fixtures::small_arch());
    CHECK(res.epoch_loss.size() == 40);
    double head = 0, tail = 0;
    for (int i = 0; i < 5; ++i) {
        head += res.epoch_loss[static_cast<std::size_t>(i)];
        tail += res.epoch_loss[res.epoch_loss.size() - 1 - static_cast<std::size_t>(i)];
    }
    CHECK(tail <= head);
    CHECK(res.model.trained_condition_dropout() == doctest::Approx(0.1));

    for (std::size_t k = 0; k < 2; ++k) {
        const RowVector c = fixtures::one_hot(k);
        SampleConfig sc;
        sc.n_samples = 2000;
        sc.seed = 11;
        const Matrix s = euler_generate(res.model, &c, sc).data();
        const RowVector mean = s.colwise().mean();
        CHECK((mean - fixtures::class_mean(k)).norm() < 0.3);
        const RowVector sd = (s.rowwise() - mean).array().square().colwise().mean().sqrt();
        for (Eigen::Index j = 0; j < 4; ++j) {
            CHECK(sd(j) > 0.25);
            CHECK(sd(j) < 0.75);
        }
    }

    TrainConfig rc = fixtures::quick_config(40, 7);
    rc.objective = Objective::kRegression;
    const auto reg = train(fx.targets, &fx.conditions, identity_pairs(1024), rc, fixtures::small_arch());
    CHECK(reg.model.objective() == Objective::kRegression);
    CHECK(reg.model.trained_condition_dropout() == 0.0);
    for (std::size_t k = 0; k < 2; ++k) {
        const RowVector c = fixtures::one_hot(k);
        CHECK((regression_predict(reg.model, &c) - fixtures::class_mean(k)).norm() < 0.3);
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    const auto fx = fixtures::two_class(200, 2);
    const auto a = train(fx.targets, &fx.conditions, identity_pairs(200), fixtures::quick_config(3, 4, 32),
                         fixtures::small_arch(16));
    const auto b = train(fx.targets, &fx.conditions, identity_pairs(200), fixtures::quick_config(3, 4, 32),
                         fixtures::small_arch(16));
    CHECK(a.model.params() == b.model.params());
    CHECK(a.model.buffers() == b.model.buffers());
    CHECK(a.epoch_loss == b.epoch_loss);
    const auto c = train(fx.targets, &fx.conditions, identity_pairs(200), fixtures::quick_config(3, 5, 32),
                         fixtures::small_arch(16));
    CHECK(a.model.params() != c.model.params());
}

TEST_CASE("non-finite training raises with the last good model") {
    const auto fx = fixtures::two_class(64, 2);
    TrainConfig cfg = fixtures::quick_config(50, 1, 16);
    cfg.lr = 1e200;
    cfg.warmup_steps = 0;
    try {
        train(fx.targets, &fx.conditions, identity_pairs(64), cfg, fixtures::small_arch(8));
        FAIL("expected a training error");
    } catch (const TrainingError& e) {
        CHECK(e.code() == ExitCode::kNumeric);
        CHECK(e.last_good().params().allFinite());
    }
}

TEST_CASE("checkpoint round trip is bit exact") {
    const auto dir = fixtures::scratch_dir("ckpt");
    const auto fx = fixtures::two_class(100, 3);
    const auto res = train(fx.targets, &fx.conditions, identity_pairs(100), fixtures::quick_config(2, 1, 25),
                           fixtures::small_arch(16));
    save_checkpoint(res.model, dir / "m");
    const FlowModel back = load_checkpoint(dir / "m");
    CHECK(back.arch() == res.model.arch());
    CHECK(back.params() == res.model.params());
    CHECK(back.buffers() == res.model.buffers());
    CHECK(back.stats().mean == res.model.stats().mean);
    CHECK(back.stats().std == res.model.stats().std);
    CHECK(back.trained_condition_dropout() == res.model.trained_condition_dropout());
    const Matrix x = test::random_matrix(5, 4, 1);
    const Vector t = Vector::LinSpaced(5, 0.1, 0.9);
    const Matrix c = fixtures::two_class(5, 9).conditions.data();
    CHECK(back.forward(x, t, &c) == res.model.forward(x, t, &c));

    // Unknown version and mismatched tensor tables are rejected.
    const auto manifest_path = dir / "m.manifest.json";
    nlohmann::json j = nlohmann::json::parse(std::ifstream(manifest_path));
    j["format_version"] = 99;
    std::ofstream(manifest_path) << j.dump();
    CHECK_THROWS_AS(load_checkpoint(dir / "m"), FormatError);
    j["format_version"] = kCheckpointVersion;
    j["tensors"][0]["shape"][0] = 12345;
    std::ofstream(manifest_path) << j.dump();
    CHECK_THROWS_AS(load_checkpoint(dir / "m"), FormatError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing"), IoError);
}
