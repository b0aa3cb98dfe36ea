#include "gvs/capacity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "gvs/error.hpp"
#include "gvs/flow_model.hpp"
#include "gvs/optim.hpp"
#include "gvs/parallel.hpp"
#include "gvs/pca.hpp"
#include "gvs/random.hpp"
#include "gvs/retrieval.hpp"
#include "gvs/sampler.hpp"
#include "gvs/train.hpp"
#include "json.hpp"

namespace gvs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

struct Split {
    LabelledData train, val, test;
};

LabelledData take(const LabelledData& src, const std::vector<std::size_t>& rows) {
    LabelledData out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), src.x.cols());
    out.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = src.x.row(static_cast<Eigen::Index>(rows[i]));
        out.labels[i] = src.labels[rows[i]];
    }
    return out;
}

Split split_per_class(const LabelledData& data, const CapacityBenchConfig& cfg) {
    const std::size_t per = cfg.points_per_class;
    const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(per)));
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(per)));
    std::vector<std::size_t> tr, va, te;
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        std::vector<std::size_t> rows(per);
        for (std::size_t i = 0; i < per; ++i) rows[i] = c * per + i;
        Rng(cfg.seed, 0x73706c74).split(c).shuffle(rows);
        for (std::size_t i = 0; i < per; ++i) {
            (i < n_train ? tr : i < n_train + n_val ? va : te).push_back(rows[i]);
        }
    }
    return {take(data, tr), take(data, va), take(data, te)};
}

double accuracy_of(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
    return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

Matrix one_hot(const std::vector<std::size_t>& labels, std::size_t n_classes) {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(n_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
    return out;
}

// Majority class among the k nearest generated samples; ties go to the class
// of the closest sample among the tied classes.
std::vector<std::size_t> classify_by_samples(const Matrix& samples, const std::vector<std::size_t>& sample_labels,
                                             const Matrix& x, std::size_t n_classes, std::size_t k) {
    const VectorStore store(EmbeddingMatrix(samples), Metric::kEuclidean);
    std::vector<std::size_t> pred(static_cast<std::size_t>(x.rows()));
    parallel_for(pred.size(), [&](std::size_t i) {
        const auto hits = knn(store, x.row(static_cast<Eigen::Index>(i)), k);
        std::vector<std::size_t> votes(n_classes, 0);
        for (const auto& h : hits) ++votes[sample_labels[h.index]];
        std::size_t best_votes = 0;
        for (auto v : votes) best_votes = std::max(best_votes, v);
        for (const auto& h : hits) {
            if (votes[sample_labels[h.index]] == best_votes) {
                pred[i] = sample_labels[h.index];
                break;
            }
        }
    });
    return pred;
}

std::vector<std::size_t> generative_predict(const Split& s, const CapacityBenchConfig& cfg, std::size_t dim_index) {
    const EmbeddingMatrix targets(s.train.x);
    const EmbeddingMatrix conditions(one_hot(s.train.labels, cfg.n_classes));
    TrainConfig tc;
    tc.lr = cfg.flow_lr;
    tc.batch_size = cfg.flow_batch;
    tc.epochs = cfg.flow_epochs;
    tc.warmup_steps = cfg.flow_warmup;
    tc.seed = cfg.seed * 1000 + dim_index;
    Architecture arch;
    arch.hidden_dim = cfg.hidden_dim;
    arch.rank = std::min(arch.rank, cfg.hidden_dim / 2);
    const TrainResult trained = train(targets, &conditions, identity_pairs(targets.rows()), tc, arch);

    Matrix samples(static_cast<Eigen::Index>(cfg.n_classes * cfg.samples_per_class), s.train.x.cols());
    std::vector<std::size_t> sample_labels(static_cast<std::size_t>(samples.rows()));
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        RowVector cond = RowVector::Zero(static_cast<Eigen::Index>(cfg.n_classes));
        cond(static_cast<Eigen::Index>(c)) = 1.0;
        SampleConfig sc;
        sc.n_samples = cfg.samples_per_class;
        sc.euler_steps = cfg.euler_steps;
        sc.seed = tc.seed;
        sc.stream_offset = c * cfg.samples_per_class;
        const EmbeddingMatrix gen = euler_generate(trained.model, &cond, sc);
        samples.middleRows(static_cast<Eigen::Index>(c * cfg.samples_per_class),
                           static_cast<Eigen::Index>(cfg.samples_per_class)) = gen.data();
        for (std::size_t i = 0; i < cfg.samples_per_class; ++i) sample_labels[c * cfg.samples_per_class + i] = c;
    }
    return classify_by_samples(samples, sample_labels, s.test.x, cfg.n_classes, cfg.k);
}

}  // namespace

void CapacityBenchConfig::validate() const {
    if (n_classes < 2) throw ParameterError("capacity bench needs at least 2 classes");
    if (points_per_class < 1 || ambient_dim < 1 || samples_per_class < 1 || modes_per_class < 1 || k < 1 ||
        flow_epochs < 1 || flow_batch < 1 || euler_steps < 1 || prototype_epochs < 1) {
        throw ParameterError("capacity bench counts must be >= 1");
    }
    if (hidden_dim < 2) throw ParameterError("capacity bench hidden_dim must be >= 2");
    if (reduced_dims.empty()) throw ParameterError("capacity bench needs at least one reduced dimension");
    for (auto d : reduced_dims) {
        if (d < 1 || d > ambient_dim) {
            throw ParameterError("reduced dimension " + std::to_string(d) + " outside [1, ambient_dim]");
        }
    }
    if (!(separation >= 0) || !(noise > 0)) throw ParameterError("separation must be >= 0 and noise > 0");
    if (!(train_fraction > 0) || !(val_fraction > 0) || train_fraction + val_fraction >= 1) {
        throw ParameterError("train and validation fractions must be positive and sum below 1");
    }
    const auto per = static_cast<double>(points_per_class);
    if (std::floor(train_fraction * per) < 1 || std::floor(val_fraction * per) < 1 ||
        per - std::floor(train_fraction * per) - std::floor(val_fraction * per) < 1) {
        throw ParameterError("points_per_class too small for the train/validation/test split");
    }
    const std::size_t n_train = n_classes * static_cast<std::size_t>(std::floor(train_fraction * per));
    for (auto d : reduced_dims) {
        if (d > n_train - 1) throw ParameterError("reduced dimension exceeds training rows - 1");
    }
    if (!(flow_lr > 0) || !(prototype_lr > 0) || !(prototype_temperature > 0)) {
        throw ParameterError("learning rates and temperature must be positive");
    }
}

double CapacityReport::accuracy(std::size_t dim, const std::string& method) const {
    for (const auto& r : rows) {
        if (r.dim == dim && r.method == method) return r.accuracy;
    }
    throw ParameterError("no capacity result for dim " + std::to_string(dim) + " method " + method);
}

LabelledData capacity_synthesize(const CapacityBenchConfig& cfg) {
    const auto d = static_cast<Eigen::Index>(cfg.ambient_dim);
    const std::size_t n_modes = cfg.n_classes * cfg.modes_per_class;
    Matrix centres = sample_gaussian(n_modes, cfg.ambient_dim, cfg.seed, 0x63656e74ULL << 16);
    for (Eigen::Index m = 0; m < centres.rows(); ++m) centres.row(m) *= cfg.separation / centres.row(m).norm();

    LabelledData out;
    out.x.resize(static_cast<Eigen::Index>(cfg.n_classes * cfg.points_per_class), d);
    out.labels.resize(static_cast<std::size_t>(out.x.rows()));
    Rng rng(cfg.seed, 0x706f696e);
    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        for (std::size_t i = 0; i < cfg.points_per_class; ++i) {
            const std::size_t r = c * cfg.points_per_class + i;
            const std::size_t mode = c * cfg.modes_per_class + i % cfg.modes_per_class;
            for (Eigen::Index j = 0; j < d; ++j) {
                out.x(static_cast<Eigen::Index>(r), j) = centres(static_cast<Eigen::Index>(mode), j) + cfg.noise * rng.normal();
            }
            out.labels[r] = c;
        }
    }
    return out;
}

std::vector<std::size_t> classify_by_prototype(const Matrix& prototypes, const Matrix& x) {
    Matrix p = prototypes;
    for (Eigen::Index c = 0; c < p.rows(); ++c) {
        const double n = p.row(c).norm();
        if (n > 0) p.row(c) /= n;
    }
    const Matrix sim = x * p.transpose();
    std::vector<std::size_t> pred(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::Index best = 0;
        sim.row(i).maxCoeff(&best);
        pred[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return pred;
}

Matrix fit_prototypes(const LabelledData& train, const LabelledData& val, std::size_t n_classes, double lr,
                      std::size_t epochs, double temperature) {
    const Eigen::Index n = train.x.rows();
    const Eigen::Index d = train.x.cols();
    const auto nc = static_cast<Eigen::Index>(n_classes);

    Matrix xhat = train.x;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = xhat.row(i).norm();
        if (norm > 0) xhat.row(i) /= norm;
    }
    std::vector<double> count(n_classes, 0.0);
    for (auto y : train.labels) count[y] += 1.0;
    Vector weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double cnt = count[train.labels[static_cast<std::size_t>(i)]];
        weight(i) = static_cast<double>(n) / (static_cast<double>(n_classes) * cnt);
    }
    const double weight_sum = weight.sum();

    Vector flat(nc * d);
    Eigen::Map<Matrix> proto(flat.data(), nc, d);
    Rng rng(0x70726f74, 0);
    for (Eigen::Index c = 0; c < nc; ++c) {
        RowVector mean = RowVector::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (train.labels[static_cast<std::size_t>(i)] == static_cast<std::size_t>(c)) mean += xhat.row(i);
        }
        for (Eigen::Index j = 0; j < d; ++j) mean(j) += 1e-3 * rng.normal();
        proto.row(c) = mean / mean.norm();
    }

    Matrix best = proto;
    double best_acc = accuracy_of(classify_by_prototype(proto, val.x), val.labels);
    AdamWState state = AdamWState::zeros(static_cast<std::size_t>(flat.size()));
    Vector grad_flat(flat.size());
    Eigen::Map<Matrix> grad(grad_flat.data(), nc, d);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Vector norms(nc);
        Matrix phat(nc, d);
        for (Eigen::Index c = 0; c < nc; ++c) {
            norms(c) = std::max(proto.row(c).norm(), 1e-12);
            phat.row(c) = proto.row(c) / norms(c);
        }
        const Matrix cosine = xhat * phat.transpose();
        Matrix dz(n, nc);
        for (Eigen::Index i = 0; i < n; ++i) {
            RowVector z = cosine.row(i) / temperature;
            z.array() -= z.maxCoeff();
            RowVector p = z.array().exp().matrix();
            p /= p.sum();
            p(static_cast<Eigen::Index>(train.labels[static_cast<std::size_t>(i)])) -= 1.0;
            dz.row(i) = p * (weight(i) / weight_sum / temperature);
        }
        // d cos(x, p) / dp = (xhat - cos phat) / |p|
        for (Eigen::Index c = 0; c < nc; ++c) {
            const RowVector g = dz.col(c).transpose() * xhat - (dz.col(c).array() * cosine.col(c).array()).sum() * phat.row(c);
            grad.row(c) = g / norms(c);
        }
        adamw_step(flat, grad_flat, state, lr, 0.0);
        const double acc = accuracy_of(classify_by_prototype(proto, val.x), val.labels);
        if (acc > best_acc) {
            best_acc = acc;
            best = proto;
        }
    }
    return best;
}

CapacityReport capacity_bench(const CapacityBenchConfig& cfg) {
    cfg.validate();
    const auto start = Clock::now();
    CapacityReport report;
    report.config = cfg;
    const Split raw = split_per_class(capacity_synthesize(cfg), cfg);
    for (std::size_t di = 0; di < cfg.reduced_dims.size(); ++di) {
        const std::size_t dim = cfg.reduced_dims[di];
        const PcaModel pca = pca_fit(raw.train.x, dim);
        Split s = raw;
        s.train.x = pca_project(raw.train.x, pca);
        s.val.x = pca_project(raw.val.x, pca);
        s.test.x = pca_project(raw.test.x, pca);

        auto t0 = Clock::now();
        const Matrix protos =
            fit_prototypes(s.train, s.val, cfg.n_classes, cfg.prototype_lr, cfg.prototype_epochs, cfg.prototype_temperature);
        report.rows.push_back(
            {dim, "prototype", accuracy_of(classify_by_prototype(protos, s.test.x), s.test.labels), seconds_since(t0)});

        t0 = Clock::now();
        const auto pred = generative_predict(s, cfg, di);
        report.rows.push_back({dim, "generative", accuracy_of(pred, s.test.labels), seconds_since(t0)});
    }
    report.total_seconds = seconds_since(start);
    return report;
}

namespace {

std::vector<std::pair<std::string, std::string>> config_fields(const CapacityBenchConfig& c) {
    std::string dims;
    for (std::size_t i = 0; i < c.reduced_dims.size(); ++i) dims += (i ? "," : "") + std::to_string(c.reduced_dims[i]);
    return {
        {"n_classes", std::to_string(c.n_classes)},
        {"points_per_class", std::to_string(c.points_per_class)},
        {"ambient_dim", std::to_string(c.ambient_dim)},
        {"reduced_dims", dims},
        {"separation", fmt(c.separation)},
        {"noise", fmt(c.noise)},
        {"seed", std::to_string(c.seed)},
        {"samples_per_class", std::to_string(c.samples_per_class)},
        {"modes_per_class", std::to_string(c.modes_per_class)},
        {"train_fraction", fmt(c.train_fraction)},
        {"val_fraction", fmt(c.val_fraction)},
        {"hidden_dim", std::to_string(c.hidden_dim)},
        {"flow_epochs", std::to_string(c.flow_epochs)},
        {"flow_batch", std::to_string(c.flow_batch)},
        {"flow_lr", fmt(c.flow_lr)},
        {"flow_warmup", std::to_string(c.flow_warmup)},
        {"euler_steps", std::to_string(c.euler_steps)},
        {"k", std::to_string(c.k)},
        {"prototype_epochs", std::to_string(c.prototype_epochs)},
        {"prototype_lr", fmt(c.prototype_lr)},
        {"prototype_temperature", fmt(c.prototype_temperature)},
    };
}

}  // namespace

std::string format_capacity_tsv(const CapacityReport& report, bool with_timing) {
    std::ostringstream out;
    for (const auto& [k, v] : config_fields(report.config)) out << "# " << k << '\t' << v << '\n';
    if (with_timing) out << "# total_seconds\t" << fmt(report.total_seconds) << '\n';
    out << "dim\tmethod\taccuracy" << (with_timing ? "\tseconds" : "") << '\n';
    for (const auto& r : report.rows) {
        out << r.dim << '\t' << r.method << '\t' << fmt(r.accuracy);
        if (with_timing) out << '\t' << fmt(r.seconds);
        out << '\n';
    }
    return out.str();
}

std::string format_capacity_json(const CapacityReport& report, bool with_timing) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : config_fields(report.config)) cfg[k] = v;
    cfg["reduced_dims"] = report.config.reduced_dims;
    j["config"] = cfg;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row{{"dim", r.dim}, {"method", r.method}, {"accuracy", r.accuracy}};
        if (with_timing) row["seconds"] = r.seconds;
        j["rows"].push_back(row);
    }
    if (with_timing) j["total_seconds"] = report.total_seconds;
    return j.dump(2) + "\n";
}

}  // namespace gvs
