#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gvs/error.hpp"
#include "gvs/metrics.hpp"
#include "gvs/random.hpp"

using namespace gvs;

namespace {

double raw_dcg(const std::vector<std::string>& order, const std::map<std::string, int>& rels) {
    double s = 0;
    for (std::size_t i = 0; i < order.size() && i < 10; ++i) {
        const auto it = rels.find(order[i]);
        const int rel = it == rels.end() ? 0 : it->second;
        s += (std::pow(2.0, rel) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return s;
}

LabelMask mask(std::size_t rows, std::size_t cols, std::vector<std::size_t> labels) {
    return LabelMask{rows, cols, std::move(labels)};
}

LabelMask transpose(const LabelMask& m) {
    LabelMask t{m.cols, m.rows, std::vector<std::size_t>(m.labels.size())};
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) t.labels[c * m.rows + r] = m.at(r, c);
    return t;
}

}  // namespace

TEST_CASE("ndcg@10 hand cases") {
    CHECK(*ndcg_at_10({"x", "a"}, {{"a", 1}}) == doctest::Approx(0.63093).epsilon(1e-5));
    CHECK(*ndcg_at_10({"a", "b"}, {{"a", 2}, {"b", 1}}) == doctest::Approx(1.0));
    std::vector<std::string> none;
    for (int i = 0; i < 10; ++i) none.push_back("n" + std::to_string(i));
    none.push_back("a");
    CHECK(*ndcg_at_10(none, {{"a", 1}}) == 0.0);
    CHECK_FALSE(ndcg_at_10({"a"}, {{"a", 0}}).has_value());
    CHECK_FALSE(ndcg_at_10({"a"}, {}).has_value());
    CHECK_THROWS_AS(ndcg_at_10({"a", "a"}, {{"a", 1}}), ParameterError);
}

TEST_CASE("ndcg@10 against enumerated permutations") {
    Rng rng(3, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.index(5);
        std::vector<std::string> docs;
        std::map<std::string, int> rels;
        for (std::size_t i = 0; i < n; ++i) {
            docs.push_back("d" + std::to_string(i));
            rels[docs.back()] = static_cast<int>(rng.index(4));
        }
        rels[docs[0]] = std::max(rels[docs[0]], 1);
        std::sort(docs.begin(), docs.end());
        double best = 0;
        do best = std::max(best, raw_dcg(docs, rels));
        while (std::next_permutation(docs.begin(), docs.end()));
        double seen_max = 0;
        do {
            const double v = *ndcg_at_10(docs, rels);
            CHECK(v == doctest::Approx(raw_dcg(docs, rels) / best).epsilon(1e-12));
            seen_max = std::max(seen_max, v);
        } while (std::next_permutation(docs.begin(), docs.end()));
        CHECK(seen_max == doctest::Approx(1.0));
    }
}

TEST_CASE("ndcg@10 ignores order beyond rank 10") {
    std::vector<std::string> ranked;
    for (int i = 0; i < 15; ++i) ranked.push_back("d" + std::to_string(i));
    const std::map<std::string, int> rels{{"d1", 2}, {"d7", 1}, {"d12", 3}};
    const double base = *ndcg_at_10(ranked, rels);
    std::reverse(ranked.begin() + 10, ranked.end());
    CHECK(*ndcg_at_10(ranked, rels) == base);
}

TEST_CASE("classification metrics") {
    const std::vector<std::size_t> y{0, 1, 2, 1, 0};
    auto r = classification_metrics(y, y, 3);
    CHECK(r.accuracy == 1.0);
    CHECK(r.macro_f1 == 1.0);

    // TP=2, FP=1, FN=1, TN=6 for class 1.
    const std::vector<std::size_t> t{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    const std::vector<std::size_t> p{1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
    r = classification_metrics(t, p, 2);
    CHECK(r.precision[1] == doctest::Approx(2.0 / 3.0));
    CHECK(r.recall[1] == doctest::Approx(2.0 / 3.0));
    CHECK(r.per_class_f1[1] == doctest::Approx(2.0 / 3.0));

    const std::vector<std::size_t> bal{0, 0, 1, 1};
    r = classification_metrics(bal, {0, 0, 0, 0}, 2);
    CHECK(r.accuracy == 0.5);
    CHECK(r.balanced_accuracy == 0.5);

    r = classification_metrics({0, 1}, {0, 1}, 3);
    CHECK(r.empty_classes == std::vector<std::size_t>{2});
    CHECK(r.per_class_f1[2] == 0.0);

    CHECK_THROWS_AS(classification_metrics({0}, {0, 1}, 2), DimensionError);
    CHECK_THROWS_AS(classification_metrics({0}, {5}, 2), ParameterError);
}

TEST_CASE("macro F1 is invariant under class relabeling") {
    Rng rng(5, 0);
    std::vector<std::size_t> t(60), p(60);
    for (std::size_t i = 0; i < 60; ++i) {
        t[i] = rng.index(4);
        p[i] = rng.bernoulli(0.6) ? t[i] : rng.index(4);
    }
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    std::vector<std::size_t> tp(60), pp(60);
    for (std::size_t i = 0; i < 60; ++i) {
        tp[i] = perm[t[i]];
        pp[i] = perm[p[i]];
    }
    CHECK(classification_metrics(t, p, 4).macro_f1 == doctest::Approx(classification_metrics(tp, pp, 4).macro_f1));
}

TEST_CASE("IoU and mIoU") {
    const auto truth = mask(2, 2, {1, 1, 0, 0});
    CHECK(miou(truth, truth, 2) == 1.0);

    const auto a = mask(1, 4, {1, 1, 0, 0});
    const auto b = mask(1, 4, {0, 0, 1, 1});
    CHECK(*class_iou(a, b, 2)[1] == 0.0);

    // Prediction covers half of the truth region and nothing else.
    const auto t = mask(1, 4, {1, 1, 1, 1});
    const auto p = mask(1, 4, {1, 1, 0, 0});
    CHECK(*class_iou(p, t, 2)[1] == doctest::Approx(0.5));

    const auto absent = class_iou(t, t, 3);
    CHECK_FALSE(absent[0].has_value());
    CHECK_FALSE(absent[2].has_value());
    CHECK(miou(t, t, 3) == 1.0);

    const auto x = mask(2, 3, {0, 1, 2, 2, 1, 0});
    const auto y = mask(2, 3, {0, 1, 1, 2, 2, 0});
    CHECK(miou(x, y, 3) == doctest::Approx(miou(transpose(x), transpose(y), 3)));
    CHECK(miou(x, y, 3) == doctest::Approx(miou(y, x, 3)));
    // Class IoUs: class 0 = 2/2, class 1 = 1/3, class 2 = 1/3.
    CHECK(miou(x, y, 3) == doctest::Approx((1.0 + 1.0 / 3 + 1.0 / 3) / 3));

    CHECK_THROWS_AS(miou(a, mask(2, 2, {0, 0, 0, 0}), 2), DimensionError);
}
