#include <cmath>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "gvs/error.hpp"
#include "gvs/flow_model.hpp"
#include "gvs/sampler.hpp"
#include "gvs/train.hpp"
#include "test_util.hpp"

using namespace gvs;

namespace {

class ConstantField : public VelocityField {
public:
    explicit ConstantField(RowVector v) : v_(std::move(v)) {}
    std::size_t dim() const override { return static_cast<std::size_t>(v_.size()); }
    std::size_t cond_dim() const override { return 0; }
    Matrix velocity(const Matrix& x, const Vector&, const Matrix*) const override {
        return v_.replicate(x.rows(), 1);
    }

private:
    RowVector v_;
};

// v(x) = -x; the exact flow over unit time is exp(-1) x0.
class DecayField : public VelocityField {
public:
    explicit DecayField(std::size_t d) : d_(d) {}
    std::size_t dim() const override { return d_; }
    std::size_t cond_dim() const override { return 0; }
    Matrix velocity(const Matrix& x, const Vector&, const Matrix*) const override { return -x; }

private:
    std::size_t d_;
};

// v(x, t, c) = c padded to the state width, counting calls.
class ConditionEcho : public VelocityField {
public:
    std::size_t dim() const override { return 2; }
    std::size_t cond_dim() const override { return 2; }
    Matrix velocity(const Matrix& x, const Vector&, const Matrix* cond) const override {
        ++calls;
        if (cond == nullptr) return Matrix::Zero(x.rows(), 2);
        return *cond;
    }
    mutable int calls = 0;
};

class NanAfter : public VelocityField {
public:
    std::size_t dim() const override { return 1; }
    std::size_t cond_dim() const override { return 0; }
    Matrix velocity(const Matrix& x, const Vector& t, const Matrix*) const override {
        Matrix v = Matrix::Zero(x.rows(), 1);
        if (t(0) < 0.55) v(0, 0) = std::numeric_limits<double>::quiet_NaN();
        return v;
    }
};

}  // namespace

TEST_CASE("sample config validation") {
    SampleConfig c;
    c.euler_steps = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.n_samples = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.local_start_time = 1.5;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.local_start_time = -0.1;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("constant velocity telescopes to x0 + v for any step count") {
    RowVector v(3);
    v << 0.5, -1.0, 2.0;
    const ConstantField f(v);
    for (std::size_t s : {1, 2, 3, 10}) {
        SampleConfig cfg;
        cfg.n_samples = 4;
        cfg.euler_steps = s;
        cfg.seed = 8;
        const Matrix out = euler_generate(f, StandardizeStats::identity(3), nullptr, cfg);
        const Matrix x0 = sample_gaussian(4, 3, 8);
        CHECK((out - (x0.rowwise() + v)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("euler is first order on the decaying linear field") {
    const DecayField f(2);
    Matrix x0(1, 2);
    x0 << 1.0, -2.0;
    std::vector<double> err;
    for (std::size_t s : {2, 4, 8, 16}) {
        const Matrix end = euler_integrate(f, x0, 1.0, s, nullptr, 1.0);
        err.push_back((end - std::exp(-1.0) * x0).norm());
    }
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
        const double ratio = err[i] / err[i + 1];
        CHECK(ratio >= 1.7);
        CHECK(ratio <= 2.3);
    }
}

TEST_CASE("guided velocity formula and pass count") {
    ConditionEcho f;
    Matrix x = Matrix::Zero(1, 2);
    Vector t = Vector::Constant(1, 0.5);
    Matrix c(1, 2);
    c << 1, 0;
    const Matrix g = guided_velocity(f, x, t, &c, 2.0);
    CHECK(g(0, 0) == 2.0);
    CHECK(g(0, 1) == 0.0);
    CHECK(f.calls == 2);
    f.calls = 0;
    guided_velocity(f, x, t, &c, 1.0);
    CHECK(f.calls == 1);
    f.calls = 0;
    CHECK(guided_velocity(f, x, t, &c, 0.0) == Matrix::Zero(1, 2));
    CHECK(f.calls == 1);
}

TEST_CASE("guidance collapses and is affine on a real model") {
    Architecture a = fixtures::small_arch(16);
    a.input_dim = 4;
    a.cond_dim = 3;
    FlowModel m = FlowModel::init(a, 2);
    test::randomize(m, 4, 0.3);
    m.buffers().setZero();
    m.buffers().tail(3).setOnes();  // running variance
    const Matrix x = test::random_matrix(6, 4, 1);
    const Vector t = Vector::LinSpaced(6, 0.05, 0.95);
    const Matrix c = test::random_matrix(6, 3, 2);
    const Matrix vc = m.forward(x, t, &c);
    const Matrix vu = m.forward(x, t, nullptr);
    CHECK(guided_velocity(m, x, t, &c, 1.0) == vc);
    CHECK(guided_velocity(m, x, t, &c, 0.0) == vu);
    const Matrix d_half = guided_velocity(m, x, t, &c, 0.5) - vu;
    const Matrix d_one = guided_velocity(m, x, t, &c, 1.0) - vu;
    const Matrix d_two = guided_velocity(m, x, t, &c, 2.0) - vu;
    CHECK((d_half - 0.5 * d_one).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((d_two - 2.0 * d_one).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("samples are independent per stream") {
    RowVector v(2);
    v << 1, 1;
    const ConstantField f(v);
    SampleConfig two;
    two.n_samples = 2;
    two.seed = 3;
    const Matrix both = euler_generate(f, StandardizeStats::identity(2), nullptr, two);
    SampleConfig one;
    one.seed = 3;
    one.stream_offset = 1;
    const Matrix second = euler_generate(f, StandardizeStats::identity(2), nullptr, one);
    CHECK(second.row(0) == both.row(1));
    CHECK(euler_generate(f, StandardizeStats::identity(2), nullptr, two) == both);
}

TEST_CASE("non-finite state names the Euler step") {
    const NanAfter f;
    SampleConfig cfg;
    cfg.euler_steps = 10;
    try {
        euler_generate(f, StandardizeStats::identity(1), nullptr, cfg);
        FAIL("expected sampling error");
    } catch (const SamplingError& e) {
        CHECK(std::string(e.what()).find("step 6 of 10") != std::string::npos);
    }
}

TEST_CASE("local sampling: exact at t0 = 0, stays close on a trained cluster") {
    Matrix x = 0.3 * sample_gaussian(512, 3, 21);
    x.col(0).array() += 2.0;
    const auto res = train(EmbeddingMatrix(x), nullptr, identity_pairs(512), fixtures::quick_config(30, 2, 64),
                           fixtures::small_arch(32));
    RowVector q(3);
    q << 2.5, 0.4, -0.3;

    SampleConfig cfg;
    cfg.n_samples = 5;
    cfg.local_start_time = 0.0;
    const Matrix same = local_sample(res.model, q, nullptr, cfg).data();
    for (Eigen::Index i = 0; i < same.rows(); ++i) CHECK(same.row(i) == q);

    cfg.n_samples = 400;
    cfg.seed = 6;
    cfg.local_start_time = 0.6;
    const Matrix near = local_sample(res.model, q, nullptr, cfg).data();
    cfg.local_start_time = 1.0;
    const Matrix far = local_sample(res.model, q, nullptr, cfg).data();
    const double d_near = (near.rowwise() - q).rowwise().norm().mean();
    const double d_far = (far.rowwise() - q).rowwise().norm().mean();
    CHECK(d_near < d_far);

    // t0 = 1 starts from pure noise, like unconditional generation.
    SampleConfig gen;
    gen.n_samples = 400;
    gen.seed = 9;
    const Matrix full = euler_generate(res.model, nullptr, gen).data();
    CHECK((far.colwise().mean() - full.colwise().mean()).norm() < 0.1);

    cfg.local_start_time = 1.2;
    CHECK_THROWS_AS(local_sample(res.model, q, nullptr, cfg), ParameterError);
}

TEST_CASE("regression prediction is deterministic") {
    const auto fx = fixtures::two_class(64, 1);
    TrainConfig cfg = fixtures::quick_config(2, 1, 32);
    cfg.objective = Objective::kRegression;
    const auto res = train(fx.targets, &fx.conditions, identity_pairs(64), cfg, fixtures::small_arch(16));
    const RowVector c = fixtures::one_hot(0);
    CHECK(regression_predict(res.model, &c) == regression_predict(res.model, &c));
}
