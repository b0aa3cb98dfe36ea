#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gvs/distance.hpp"
#include "gvs/embedding.hpp"
#include "gvs/error.hpp"
#include "gvs/linalg.hpp"
#include "gvs/pca.hpp"
#include "gvs/random.hpp"
#include "gvs/standardize.hpp"
#include "test_util.hpp"

using namespace gvs;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = normal_cdf(v[i]);
        d = std::max({d, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace

TEST_CASE("embedding matrix validates ids and values") {
    Matrix m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const EmbeddingMatrix e(m);
    CHECK(e.id(0) == "0");
    CHECK(e.id(1) == "1");
    CHECK_THROWS_AS(EmbeddingMatrix(m, {"a", "a"}), FormatError);
    CHECK_THROWS_AS(EmbeddingMatrix(m, {"a"}), DimensionError);
    CHECK_THROWS_AS(EmbeddingMatrix(Matrix(2, 0)), DimensionError);
    m(1, 2) = std::nan("");
    try {
        EmbeddingMatrix bad(m);
        FAIL("expected rejection");
    } catch (const Error& err) {
        const std::string what = err.what();
        CHECK(what.find("row 1") != std::string::npos);
        CHECK(what.find("column 2") != std::string::npos);
    }
    const EmbeddingMatrix empty(Matrix(0, 4));
    CHECK(empty.rows() == 0);
    CHECK(empty.dim() == 4);
}

TEST_CASE("standardize: two-point case, constant column, round trip") {
    Matrix x(2, 1);
    x << 0, 2;
    auto s = standardize_fit(x);
    CHECK(s.mean(0) == doctest::Approx(1.0));
    CHECK(s.std(0) == doctest::Approx(1.0));

    Matrix c(3, 2);
    c << 1, 5, 2, 5, 3, 5;
    s = standardize_fit(c);
    CHECK(s.std(1) == 1.0);
    const Matrix z = standardize_apply(c, s);
    CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);

    StandardizeStats fixed{Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)};
    Matrix one(1, 1);
    one << 1;
    CHECK(standardize_apply(one, fixed)(0, 0) == 0.0);
    one << 0;
    CHECK(standardize_invert(one, fixed)(0, 0) == 1.0);

    const Matrix r = test::random_matrix(16, 8, 3, 5.0);
    s = standardize_fit(r);
    CHECK((standardize_invert(standardize_apply(r, s), s) - r).cwiseAbs().maxCoeff() < 1e-6);

    CHECK_THROWS_AS(standardize_fit(Matrix(1, 3)), DimensionError);
    CHECK_THROWS_AS(standardize_apply(Matrix(2, 3), fixed), DimensionError);
}

TEST_CASE("standardize recovers N(3, 4) moments") {
    Matrix x = sample_gaussian(500, 3, 11);
    x = (x.array() * 2.0 + 3.0).matrix();
    const auto s = standardize_fit(x);
    for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(s.mean(j) - 3.0) < 0.2);
        CHECK(std::abs(s.std(j) - 2.0) < 0.2);
    }
}

TEST_CASE("gaussian sampler: determinism, moments, KS") {
    const Matrix a = sample_gaussian(10000, 4, 42);
    const Matrix b = sample_gaussian(10000, 4, 42);
    CHECK(a == b);
    CHECK(sample_gaussian(10, 4, 43) != sample_gaussian(10, 4, 42));
    for (int j = 0; j < 4; ++j) {
        const double mean = a.col(j).mean();
        const double sd = std::sqrt((a.col(j).array() - mean).square().sum() / 10000.0);
        CHECK(std::abs(mean) < 0.05);
        CHECK(std::abs(sd - 1.0) < 0.05);
    }
    std::vector<double> col;
    for (Eigen::Index i = 0; i < a.rows(); ++i) col.push_back(a(i, 0));
    CHECK(ks_statistic(col) < 0.02);
    // Row i is independent of how many rows are requested.
    CHECK(sample_gaussian(3, 4, 42).row(2) == a.row(2));
    CHECK(sample_gaussian(1, 4, 42, 2).row(0) == a.row(2));
}

TEST_CASE("logit-normal times") {
    CHECK(sigmoid(0.0) == 0.5);
    auto t = sample_logit_normal(10000, 5);
    std::nth_element(t.begin(), t.begin() + 5000, t.end());
    CHECK(std::abs(t[5000] - 0.5) < 0.02);
    const auto big = sample_logit_normal(1000000, 6);
    CHECK(std::all_of(big.begin(), big.end(), [](double v) { return v > 0.0 && v < 1.0; }));
}

TEST_CASE("rng streams are independent and reproducible") {
    Rng a(1, 0), b(1, 0), c(1, 1);
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
    CHECK(Rng(1, 0).split(3).uniform() == Rng(1, 0).split(3).uniform());
    CHECK(Rng(1, 0).split(3).uniform() != Rng(1, 0).split(4).uniform());
}

TEST_CASE("distances and normalization") {
    RowVector e1(2), m1(2);
    e1 << 1, 0;
    m1 << -1, 0;
    CHECK(distance(e1, e1, Metric::kCosine) == doctest::Approx(0.0));
    CHECK(distance(e1, m1, Metric::kCosine) == doctest::Approx(2.0));
    RowVector o(2), p(2);
    o << 0, 0;
    p << 3, 4;
    CHECK(distance(o, p, Metric::kEuclidean) == doctest::Approx(5.0));
    const RowVector n = l2_normalize(p);
    CHECK(n(0) == doctest::Approx(0.6));
    CHECK(n(1) == doctest::Approx(0.8));
    CHECK_THROWS_AS(l2_normalize(o), DegenerateInputError);
    CHECK_THROWS_AS(distance(o, p, Metric::kCosine), DegenerateInputError);
    CHECK(parse_metric("cosine") == Metric::kCosine);
    CHECK(parse_metric("euclidean") == Metric::kEuclidean);
    CHECK_THROWS_AS(parse_metric("manhattan"), ParameterError);
}

TEST_CASE("symmetric matrix powers") {
    const Matrix id = Matrix::Identity(3, 3);
    CHECK((sym_matrix_power(id, 0.5) - id).norm() < 1e-12);
    CHECK((sym_matrix_power(id, -0.5) - id).norm() < 1e-12);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    const Matrix r = sym_matrix_power(d, 0.5);
    CHECK(r(0, 0) == doctest::Approx(2.0));
    CHECK(r(1, 1) == doctest::Approx(3.0));
    CHECK(std::abs(r(0, 1)) < 1e-12);

    const Matrix a = test::random_matrix(6, 6, 9);
    const Matrix c = a * a.transpose() + 0.5 * Matrix::Identity(6, 6);
    const Matrix h = sym_matrix_power(c, 0.5);
    CHECK((h * h - c).norm() < 1e-6);
    const Matrix ih = sym_matrix_power(c, -0.5);
    CHECK((ih * c * ih - Matrix::Identity(6, 6)).norm() < 1e-6);

    Matrix asym = c;
    asym(0, 1) += 1e-3;
    CHECK_THROWS_AS(sym_matrix_power(asym, 0.5), ParameterError);
}

TEST_CASE("covariance uses divisor N-1") {
    Matrix x(3, 1);
    x << 1, 2, 3;
    CHECK(covariance(x)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("pca: rank-1 line, full round trip, axis variances") {
    Matrix line(50, 2);
    Rng rng(1, 0);
    for (int i = 0; i < 50; ++i) {
        const double s = rng.normal();
        line(i, 0) = 2 * s + 1e-3 * rng.normal();
        line(i, 1) = -s + 1e-3 * rng.normal();
    }
    auto m = pca_fit(line, 1);
    CHECK(m.explained_variance(0) / m.total_variance >= 0.999);

    const Matrix iso = sample_gaussian(200, 3, 4);
    m = pca_fit(iso, 3);
    CHECK((pca_reconstruct(pca_project(iso, m), m) - iso).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((m.components * m.components.transpose() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-5);

    Matrix ax = sample_gaussian(2000, 3, 5);
    ax.col(0) *= 3.0;
    ax.col(1) *= 2.0;
    m = pca_fit(ax, 2);
    CHECK(std::abs(m.explained_variance(0) - 9.0) / 9.0 < 0.15);
    CHECK(std::abs(m.explained_variance(1) - 4.0) / 4.0 < 0.15);
    CHECK(m.explained_variance(0) >= m.explained_variance(1));
    CHECK(std::abs(m.components(0, 0)) > 0.99);

    CHECK_THROWS_AS(pca_fit(iso, 4), ParameterError);
    CHECK_THROWS_AS(pca_fit(Matrix(3, 5), 3), ParameterError);
    CHECK_THROWS_AS(pca_fit(iso, 0), ParameterError);
}

TEST_CASE("pca projection keeps ids") {
    const Matrix x = sample_gaussian(10, 4, 1);
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("doc" + std::to_string(i));
    const EmbeddingMatrix e(x, ids);
    const auto m = pca_fit(e, 2);
    const EmbeddingMatrix p = pca_project(e, m);
    CHECK(p.dim() == 2);
    CHECK(p.id(3) == "doc3");
}
