#include <cstdlib>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "gvs/augment.hpp"
#include "gvs/capacity.hpp"
#include "gvs/error.hpp"
#include "gvs/io.hpp"
#include "gvs/parallel.hpp"
#include "test_util.hpp"

using namespace gvs;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("embedding files round trip bit-exactly") {
    const auto dir = fixtures::scratch_dir("io_roundtrip");
    const Matrix x = round_to_f32(test::random_matrix(7, 5, 1));
    save_embeddings(EmbeddingMatrix(x), dir / "x");
    const EmbeddingMatrix back = load_embeddings(dir / "x");
    CHECK(back.data() == x);
    CHECK_FALSE(fs::exists(dir / "x.ids"));
    CHECK(load_embeddings(dir / "x.f32").data() == x);
    CHECK(load_embeddings(dir / "x.meta.json").data() == x);

    save_embeddings(EmbeddingMatrix(x, {"a", "b", "c", "d", "e", "f", "g"}), dir / "named");
    const EmbeddingMatrix named = load_embeddings(dir / "named");
    CHECK(named.id(6) == "g");

    // Re-saving with default ids removes the stale ids file.
    save_embeddings(EmbeddingMatrix(x), dir / "named");
    CHECK_FALSE(fs::exists(dir / "named.ids"));

    save_embeddings(EmbeddingMatrix(Matrix(0, 3)), dir / "empty");
    CHECK(load_embeddings(dir / "empty").rows() == 0);
}

TEST_CASE("embedding loader rejects inconsistent files") {
    const auto dir = fixtures::scratch_dir("io_errors");
    save_embeddings(EmbeddingMatrix(test::random_matrix(4, 3, 2)), dir / "x");
    fs::resize_file(dir / "x.f32", 40);
    try {
        load_embeddings(dir / "x");
        FAIL("expected size error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("expected 48 bytes, found 40") != std::string::npos);
    }

    write(dir / "d0.meta.json", R"({"count": 1, "dim": 0, "dtype": "f32le"})");
    write(dir / "d0.f32", "");
    CHECK_THROWS_AS(load_embeddings(dir / "d0"), FormatError);

    write(dir / "bad.meta.json", "{not json");
    CHECK_THROWS_AS(load_embeddings(dir / "bad"), FormatError);

    write(dir / "dt.meta.json", R"({"count": 1, "dim": 1, "dtype": "f64"})");
    CHECK_THROWS_AS(load_embeddings(dir / "dt"), FormatError);

    CHECK_THROWS_AS(load_embeddings(dir / "missing"), IoError);

    Matrix nan = Matrix::Zero(2, 2);
    save_embeddings(EmbeddingMatrix(nan), dir / "nan");
    const float bad = std::numeric_limits<float>::quiet_NaN();
    std::fstream f(dir / "nan.f32", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3 * 4);
    f.write(reinterpret_cast<const char*>(&bad), 4);
    f.close();
    try {
        load_embeddings(dir / "nan");
        FAIL("expected non-finite error");
    } catch (const Error& e) {
        const std::string what = e.what();
        CHECK(what.find("row 1") != std::string::npos);
        CHECK(what.find("column 1") != std::string::npos);
    }

    save_embeddings(EmbeddingMatrix(Matrix::Zero(2, 2), {"p", "q"}), dir / "ids");
    write(dir / "ids.ids", "p\n");
    CHECK_THROWS_AS(load_embeddings(dir / "ids"), FormatError);
}

TEST_CASE("pair, qrels and run files") {
    const auto dir = fixtures::scratch_dir("io_tsv");
    save_pairs({{0, 3}, {2, 1}}, dir / "p.tsv");
    CHECK(load_pairs(dir / "p.tsv") == std::vector<IndexPair>{{0, 3}, {2, 1}});
    write(dir / "c.tsv", "# comment\n\n1\t2\n");
    CHECK(load_pairs(dir / "c.tsv") == std::vector<IndexPair>{{1, 2}});
    write(dir / "bad.tsv", "1 2\n");
    CHECK_THROWS_AS(load_pairs(dir / "bad.tsv"), FormatError);

    write(dir / "q.tsv", "q1\td1\t2\nq1\td2\t0\nq2\td3\t1\n");
    const QrelSet q = load_qrels(dir / "q.tsv");
    CHECK(q.at("q1").at("d1") == 2);
    CHECK(q.at("q2").size() == 1);
    write(dir / "neg.tsv", "q1\td1\t-1\n");
    CHECK_THROWS_AS(load_qrels(dir / "neg.tsv"), FormatError);

    const std::vector<RunEntry> run{{"q1", 1, "d1", 0.25}, {"q1", 2, "d2", 0.5}};
    write(dir / "r.tsv", format_run(run));
    const auto back = load_run(dir / "r.tsv");
    REQUIRE(back.size() == 2);
    CHECK(back[1].doc_id == "d2");
    CHECK(back[1].rank == 2);
    CHECK(back[1].score == 0.5);
}

TEST_CASE("query interpolation") {
    RowVector u(3);
    u << 1, 2, 3;
    const auto same = interpolate_queries(EmbeddingMatrix(u.replicate(2, 1)), 20, 1);
    for (std::size_t i = 0; i < same.rows(); ++i) CHECK((same.row(i) - u).norm() < 1e-12);

    const Matrix q = test::random_matrix(5, 4, 3);
    const auto out = interpolate_queries(EmbeddingMatrix(q), 100, 9);
    CHECK(out.rows() == 100);
    CHECK(out.id(7) == "interp#7");
    for (std::size_t r = 0; r < out.rows(); ++r) {
        // Some pair (i, j) must have the output on its segment.
        bool on_segment = false;
        for (Eigen::Index i = 0; i < 5 && !on_segment; ++i) {
            for (Eigen::Index j = 0; j < 5 && !on_segment; ++j) {
                if (i == j) continue;
                const double lhs = (out.row(r) - q.row(i)).norm() + (out.row(r) - q.row(j)).norm();
                on_segment = std::abs(lhs - (q.row(i) - q.row(j)).norm()) < 1e-5;
            }
        }
        CHECK(on_segment);
    }
    CHECK(interpolate_queries(EmbeddingMatrix(q), 10, 9).data() == out.data().topRows(10));
    CHECK_THROWS_AS(interpolate_queries(EmbeddingMatrix(q.topRows(1)), 3, 1), DegenerateInputError);
}

TEST_CASE("parallel_for covers every index once for any thread cap") {
    for (const char* cap : {"1", "3", "8"}) {
        setenv("STHLM_THREADS", cap, 1);
        CHECK(thread_count() == static_cast<std::size_t>(std::atoi(cap)));
        std::vector<int> hits(101, 0);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i] += static_cast<int>(i); });
        for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == static_cast<int>(i));
    }
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                        if (i == 7) throw ParameterError("boom");
                    }),
                    ParameterError);
    unsetenv("STHLM_THREADS");
    CHECK(thread_count() >= 1);
}

TEST_CASE("capacity bench configuration and separable regime") {
    CapacityBenchConfig bad;
    bad.reduced_dims = {64};
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = {};
    bad.points_per_class = 0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = {};
    bad.n_classes = 1;
    CHECK_THROWS_AS(bad.validate(), ParameterError);

    CapacityBenchConfig cfg;
    cfg.n_classes = 3;
    cfg.points_per_class = 100;
    cfg.ambient_dim = 6;
    cfg.reduced_dims = {6};
    cfg.modes_per_class = 1;
    cfg.separation = 6.0;
    cfg.noise = 0.5;
    cfg.samples_per_class = 100;
    cfg.hidden_dim = 32;
    cfg.flow_epochs = 60;
    cfg.prototype_epochs = 100;
    cfg.seed = 4;
    const CapacityReport r = capacity_bench(cfg);
    CHECK(r.accuracy(6, "prototype") >= 0.99);
    CHECK(r.accuracy(6, "generative") >= 0.99);
    CHECK_THROWS_AS(r.accuracy(5, "prototype"), ParameterError);

    const std::string tsv = format_capacity_tsv(r, false);
    CHECK(tsv.find("# seed\t4\n") != std::string::npos);
    CHECK(tsv.find("# reduced_dims\t6\n") != std::string::npos);
    CHECK(tsv.find("seconds") == std::string::npos);
    CHECK(format_capacity_tsv(r, true).find("seconds") != std::string::npos);
    CHECK(format_capacity_tsv(capacity_bench(cfg), false) == tsv);
}

TEST_CASE("prototype fitting beats chance on overlapping multimodal classes") {
    CapacityBenchConfig cfg;
    cfg.n_classes = 3;
    cfg.points_per_class = 120;
    cfg.ambient_dim = 16;
    const LabelledData d = capacity_synthesize(cfg);
    CHECK(d.x.rows() == 360);
    CHECK(d.labels[0] == 0);
    CHECK(d.labels[359] == 2);
    const Matrix protos = fit_prototypes(d, d, 3, 0.05, 100, 0.1);
    const auto pred = classify_by_prototype(protos, d.x);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == d.labels[i];
    CHECK(static_cast<double>(hit) / 360.0 > 0.6);
}
