#include "gvs/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "binary_io.hpp"
#include "gvs/augment.hpp"
#include "gvs/capacity.hpp"
#include "gvs/checkpoint.hpp"
#include "gvs/coral.hpp"
#include "gvs/distance.hpp"
#include "gvs/error.hpp"
#include "gvs/io.hpp"
#include "gvs/metrics.hpp"
#include "gvs/parallel.hpp"
#include "gvs/pca.hpp"
#include "gvs/retrieval.hpp"
#include "gvs/sampler.hpp"
#include "gvs/train.hpp"
#include "gvs/vmf.hpp"
#include "json.hpp"

namespace gvs {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, bad value, invalid parameter)\n"
    "  3  I/O error (missing or unreadable file)\n"
    "  4  schema error (malformed file, dimension mismatch)\n"
    "  5  numeric error (degenerate input, non-finite values during training or sampling)\n"
    "\n"
    "Environment:\n"
    "  STHLM_THREADS  caps internal parallelism (default: hardware concurrency)\n";

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

struct Common {
    bool json = false;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_flag("--json", c.json, "Print results as JSON");
    cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    Common common;
    std::string targets, conditions, pairs, out, objective = "cfm";
    TrainConfig cfg;
    Architecture arch;
};

void run_train(const TrainArgs& a, std::ostream& out) {
    const EmbeddingMatrix targets = load_embeddings(a.targets);
    std::optional<EmbeddingMatrix> conditions;
    if (!a.conditions.empty()) conditions = load_embeddings(a.conditions);
    std::vector<IndexPair> pairs;
    if (!a.pairs.empty()) {
        pairs = load_pairs(a.pairs);
    } else {
        if (conditions && conditions->rows() != targets.rows()) {
            throw DimensionError("without --pairs the condition and target files need the same row count (" +
                                 std::to_string(conditions->rows()) + " vs " + std::to_string(targets.rows()) + ")");
        }
        pairs = identity_pairs(targets.rows());
    }
    TrainConfig cfg = a.cfg;
    cfg.seed = a.common.seed;
    cfg.objective = parse_objective(a.objective);
    if (!a.common.json) {
        cfg.on_epoch = [&out](std::size_t epoch, double loss) { out << "epoch " << epoch + 1 << "\tloss " << num(loss) << '\n'; };
    }
    const TrainResult result = train(targets, conditions ? &*conditions : nullptr, pairs, cfg, a.arch);
    save_checkpoint(result.model, a.out);
    if (a.common.json) {
        json j{{"command", "train"}, {"checkpoint", a.out}, {"steps", result.steps},
               {"parameters", result.model.parameter_count()}, {"epoch_loss", result.epoch_loss}};
        out << j.dump(2) << '\n';
    } else {
        out << "steps " << result.steps << "\tparameters " << result.model.parameter_count() << "\tcheckpoint " << a.out
            << '\n';
    }
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
    Common common;
    std::string model, out, condition_file, query_file;
    std::vector<std::size_t> condition_rows, query_rows;
    std::size_t n = 1;
    std::size_t steps = 10;
    double guidance = 1.0;
    std::optional<double> local_t;
};

std::vector<std::size_t> pick_rows(const std::vector<std::size_t>& requested, std::size_t available, const char* what) {
    if (requested.empty()) {
        std::vector<std::size_t> all(available);
        for (std::size_t i = 0; i < available; ++i) all[i] = i;
        return all;
    }
    for (auto r : requested) {
        if (r >= available) {
            throw DimensionError(std::string(what) + " row " + std::to_string(r) + " out of range (file has " +
                                 std::to_string(available) + " rows)");
        }
    }
    return requested;
}

void run_sample(const SampleArgs& a, std::ostream& out, std::ostream& err) {
    const FlowModel model = load_checkpoint(a.model);
    const bool conditional = model.arch().conditional();
    std::optional<EmbeddingMatrix> conds;
    if (!a.condition_file.empty()) {
        if (!conditional) throw ParameterError("--condition-file given but the model is unconditional");
        conds = load_embeddings(a.condition_file);
        if (conds->dim() != model.arch().cond_dim) {
            throw DimensionError("condition dim " + std::to_string(conds->dim()) + " does not match model cond_dim " +
                                 std::to_string(model.arch().cond_dim));
        }
    } else if (!a.condition_rows.empty()) {
        throw ParameterError("--condition-row requires --condition-file");
    }
    std::optional<EmbeddingMatrix> queries;
    if (!a.query_file.empty()) {
        if (!a.local_t) throw ParameterError("--query-file requires --local-t");
        queries = load_embeddings(a.query_file);
        if (queries->dim() != model.arch().input_dim) {
            throw DimensionError("query dim " + std::to_string(queries->dim()) + " does not match model input_dim " +
                                 std::to_string(model.arch().input_dim));
        }
    } else if (a.local_t) {
        throw ParameterError("--local-t requires --query-file");
    }

    // Each job is one (condition row, query row) combination.
    struct Job {
        std::optional<std::size_t> cond, query;
        std::string prefix;
    };
    std::vector<Job> jobs;
    const std::vector<std::optional<std::size_t>> none{std::nullopt};
    std::vector<std::optional<std::size_t>> cond_rows = none, query_rows = none;
    if (conds) {
        cond_rows.clear();
        for (auto r : pick_rows(a.condition_rows, conds->rows(), "condition")) cond_rows.push_back(r);
    }
    if (queries) {
        query_rows.clear();
        for (auto r : pick_rows(a.query_rows, queries->rows(), "query")) query_rows.push_back(r);
    }
    for (const auto& q : query_rows) {
        for (const auto& c : cond_rows) {
            std::string prefix;
            if (q) prefix = queries->id(*q);
            if (c) prefix += (prefix.empty() ? "" : "|") + conds->id(*c);
            if (prefix.empty()) prefix = "sample";
            jobs.push_back({c, q, prefix});
        }
    }

    const bool regression = model.objective() == Objective::kRegression;
    if (regression && queries) throw ParameterError("local sampling is not defined for a regression model");
    const std::size_t per_job = regression ? 1 : a.n;
    if (!regression && conds && a.guidance != 1.0 && model.trained_condition_dropout() == 0.0) {
        err << "warning: guidance scale " << num(a.guidance)
            << " on a model trained without condition dropout; the unconditional branch is untrained\n";
    }

    Matrix all(static_cast<Eigen::Index>(jobs.size() * per_job), static_cast<Eigen::Index>(model.arch().input_dim));
    std::vector<std::string> ids(jobs.size() * per_job);
    std::vector<Matrix> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const Job& job = jobs[j];
        RowVector cond_row;
        if (job.cond) cond_row = conds->row(*job.cond);
        const RowVector* cond = job.cond ? &cond_row : nullptr;
        if (regression) {
            results[j] = regression_predict(model, cond);
            return;
        }
        SampleConfig sc;
        sc.n_samples = a.n;
        sc.euler_steps = a.steps;
        sc.guidance_scale = a.guidance;
        sc.local_start_time = a.local_t;
        sc.seed = a.common.seed;
        sc.stream_offset = j * a.n;
        const StandardizeStats& stats = model.stats();
        if (job.query) {
            results[j] = local_sample(model, stats, RowVector(queries->row(*job.query)), cond, sc);
        } else {
            results[j] = euler_generate(model, stats, cond, sc);
        }
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        all.middleRows(static_cast<Eigen::Index>(j * per_job), static_cast<Eigen::Index>(per_job)) = results[j];
        for (std::size_t i = 0; i < per_job; ++i) {
            ids[j * per_job + i] = regression ? jobs[j].prefix : jobs[j].prefix + "#" + std::to_string(i);
        }
    }
    const EmbeddingMatrix samples(std::move(all), std::move(ids));
    save_embeddings(samples, a.out);
    if (a.common.json) {
        json j{{"command", "sample"}, {"output", a.out}, {"count", samples.rows()}, {"dim", samples.dim()},
               {"groups", jobs.size()}, {"per_group", per_job}};
        out << j.dump(2) << '\n';
    } else {
        out << "wrote " << samples.rows() << " samples (" << jobs.size() << " groups x " << per_job << ") to " << a.out
            << '\n';
    }
}

// ---------------------------------------------------------------- search

struct SearchArgs {
    Common common;
    std::string store, query_file, out, mode = "min-distance", metric = "cosine";
    std::size_t k = 3;
    bool group = false;
};

std::string group_of(const std::string& id) {
    const auto hash = id.rfind('#');
    return hash == std::string::npos ? id : id.substr(0, hash);
}

void run_search(const SearchArgs& a, std::ostream& out) {
    const EmbeddingMatrix docs = load_embeddings(a.store);
    const EmbeddingMatrix queries = load_embeddings(a.query_file);
    if (docs.dim() != queries.dim()) {
        throw DimensionError("store dim " + std::to_string(docs.dim()) + " does not match query dim " +
                             std::to_string(queries.dim()));
    }
    if (a.k < 1) throw ParameterError("--k must be >= 1");
    const VectorStore store(docs, parse_metric(a.metric));
    const AggregationMode mode = parse_aggregation(a.mode);

    // Query groups in first-appearance order; without --group every row is its own query.
    std::vector<std::string> names;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const std::string name = a.group ? group_of(queries.id(i)) : queries.id(i);
        auto& rows = members[name];
        if (rows.empty()) names.push_back(name);
        rows.push_back(i);
    }
    std::vector<RetrievalResult> results(names.size());
    parallel_for(names.size(), [&](std::size_t g) {
        const auto& rows = members.at(names[g]);
        if (rows.size() == 1 && !a.group) {
            results[g] = knn(store, queries.row(rows[0]), a.k);
        } else {
            results[g] = multi_sample_retrieve(store, queries.select(rows).data(), a.k, mode);
        }
    });
    std::vector<RunEntry> run;
    for (std::size_t g = 0; g < names.size(); ++g) {
        for (std::size_t r = 0; r < results[g].size(); ++r) {
            run.push_back({names[g], r + 1, results[g][r].id, results[g][r].score});
        }
    }
    if (!a.out.empty()) detail::write_text(a.out, format_run(run));
    if (a.common.json) {
        json j{{"command", "search"}, {"queries", names.size()}, {"results", json::array()}};
        for (const auto& e : run) {
            j["results"].push_back({{"query_id", e.query_id}, {"rank", e.rank}, {"doc_id", e.doc_id}, {"score", e.score}});
        }
        out << j.dump(2) << '\n';
    } else if (a.out.empty()) {
        out << format_run(run);
    } else {
        out << "wrote " << run.size() << " results for " << names.size() << " queries to " << a.out << '\n';
    }
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    Common common;
    std::string qrels, run, metric = "ndcg@10";
};

void run_evaluate(const EvaluateArgs& a, std::ostream& out) {
    if (a.metric != "ndcg@10") throw ParameterError("unsupported metric '" + a.metric + "' (supported: ndcg@10)");
    const QrelSet qrels = load_qrels(a.qrels);
    const std::vector<RunEntry> run = load_run(a.run);
    std::map<std::string, std::vector<const RunEntry*>> by_query;
    for (const auto& e : run) by_query[e.query_id].push_back(&e);

    std::vector<std::pair<std::string, double>> scores;
    std::vector<std::string> skipped;
    for (const auto& [qid, rels] : qrels) {
        std::vector<std::string> ranked;
        if (auto it = by_query.find(qid); it != by_query.end()) {
            auto entries = it->second;
            std::stable_sort(entries.begin(), entries.end(),
                             [](const RunEntry* x, const RunEntry* y) { return x->rank < y->rank; });
            for (const auto* e : entries) ranked.push_back(e->doc_id);
        }
        const auto v = ndcg_at_10(ranked, rels);
        if (v) {
            scores.emplace_back(qid, *v);
        } else {
            skipped.push_back(qid);
        }
    }
    double mean = 0;
    for (const auto& s : scores) mean += s.second;
    if (!scores.empty()) mean /= static_cast<double>(scores.size());
    if (a.common.json) {
        json per = json::object();
        for (const auto& [q, v] : scores) per[q] = v;
        json j{{"command", "evaluate"}, {"metric", a.metric}, {"per_query", per}, {"mean", mean},
               {"queries", scores.size()}, {"skipped_no_relevant", skipped}};
        out << j.dump(2) << '\n';
    } else {
        out << "query_id\t" << a.metric << '\n';
        for (const auto& [q, v] : scores) out << q << '\t' << num(v) << '\n';
        out << "mean\t" << num(mean) << '\n';
    }
}

// ---------------------------------------------------------------- coral

struct CoralArgs {
    Common common;
    std::string source, target, out, source_labels, target_labels;
    bool no_normalize = false;
};

void run_coral(const CoralArgs& a, std::ostream& out) {
    const EmbeddingMatrix source = load_embeddings(a.source);
    const EmbeddingMatrix target = load_embeddings(a.target);
    if (source.dim() != target.dim()) {
        throw DimensionError("source dim " + std::to_string(source.dim()) + " does not match target dim " +
                             std::to_string(target.dim()));
    }
    if (a.source_labels.empty() != a.target_labels.empty()) {
        throw ParameterError("--source-labels and --target-labels must be given together");
    }
    Matrix aligned;
    if (!a.source_labels.empty()) {
        if (a.no_normalize) throw ParameterError("per-class alignment always normalizes; drop --no-normalize");
        aligned = coral_apply_per_class(source.data(), load_labels(a.source_labels), target.data(),
                                        load_labels(a.target_labels));
    } else {
        const CoralModel model = coral_fit(source.data(), target.data(), !a.no_normalize);
        aligned = a.no_normalize ? coral_transform(model, source.data()) : coral_apply(model, source.data());
    }
    save_embeddings(EmbeddingMatrix(aligned, source.ids()), a.out);
    if (a.common.json) {
        out << json{{"command", "coral"}, {"output", a.out}, {"count", source.rows()}, {"dim", source.dim()}}.dump(2)
            << '\n';
    } else {
        out << "aligned " << source.rows() << " rows to " << a.out << '\n';
    }
}

// ---------------------------------------------------------------- vmf-classify

struct VmfArgs {
    Common common;
    std::string train, labels, query_file, query_labels, out;
    bool coral = false;
};

void run_vmf(const VmfArgs& a, std::ostream& out) {
    const EmbeddingMatrix train_rows = load_embeddings(a.train);
    const std::vector<std::string> labels = load_labels(a.labels);
    if (labels.size() != train_rows.rows()) {
        throw DimensionError("label count " + std::to_string(labels.size()) + " does not match training rows " +
                             std::to_string(train_rows.rows()));
    }
    const EmbeddingMatrix queries = load_embeddings(a.query_file);
    if (queries.dim() != train_rows.dim()) {
        throw DimensionError("query dim " + std::to_string(queries.dim()) + " does not match training dim " +
                             std::to_string(train_rows.dim()));
    }
    const Matrix train_unit = l2_normalize_rows(train_rows.data());
    Matrix q = l2_normalize_rows(queries.data());
    if (a.coral) q = coral_apply(coral_fit(queries.data(), train_rows.data(), true), queries.data());

    const VmfModel model = vmf_fit(train_unit, labels);
    std::vector<std::size_t> pred(queries.rows());
    std::vector<double> best(queries.rows());
    parallel_for(queries.rows(), [&](std::size_t i) {
        const Vector post = vmf_log_posterior(model, q.row(static_cast<Eigen::Index>(i)));
        Eigen::Index arg = 0;
        best[i] = post.maxCoeff(&arg);
        pred[i] = static_cast<std::size_t>(arg);
    });

    std::ostringstream table;
    table << "id\tlabel\tlog_posterior\n";
    for (std::size_t i = 0; i < pred.size(); ++i) {
        table << queries.id(i) << '\t' << model.classes[pred[i]].label << '\t' << num(best[i]) << '\n';
    }
    if (!a.out.empty()) detail::write_text(a.out, table.str());

    std::optional<ClassificationReport> report;
    if (!a.query_labels.empty()) {
        const std::vector<std::string> truth = load_labels(a.query_labels);
        if (truth.size() != pred.size()) {
            throw DimensionError("query label count " + std::to_string(truth.size()) + " does not match query rows " +
                                 std::to_string(pred.size()));
        }
        std::map<std::string, std::size_t> index;
        for (std::size_t c = 0; c < model.classes.size(); ++c) index[model.classes[c].label] = c;
        std::vector<std::size_t> y_true(truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) {
            auto it = index.find(truth[i]);
            if (it == index.end()) throw FormatError("query label '" + truth[i] + "' not present in training labels");
            y_true[i] = it->second;
        }
        report = classification_metrics(y_true, pred, model.classes.size());
    }

    if (a.common.json) {
        json j{{"command", "vmf-classify"}, {"predictions", json::array()}};
        for (std::size_t i = 0; i < pred.size(); ++i) {
            j["predictions"].push_back(
                {{"id", queries.id(i)}, {"label", model.classes[pred[i]].label}, {"log_posterior", best[i]}});
        }
        if (report) {
            j["accuracy"] = report->accuracy;
            j["macro_f1"] = report->macro_f1;
            j["balanced_accuracy"] = report->balanced_accuracy;
        }
        out << j.dump(2) << '\n';
    } else {
        if (a.out.empty()) out << table.str();
        if (report) {
            out << "accuracy\t" << num(report->accuracy) << "\nmacro_f1\t" << num(report->macro_f1)
                << "\nbalanced_accuracy\t" << num(report->balanced_accuracy) << '\n';
        }
    }
}

// ---------------------------------------------------------------- pca

struct PcaArgs {
    Common common;
    std::string input, out;
    std::size_t k = 0;
};

void run_pca(const PcaArgs& a, std::ostream& out) {
    const EmbeddingMatrix x = load_embeddings(a.input);
    const PcaModel model = pca_fit(x, a.k);
    const EmbeddingMatrix projected = pca_project(x, model);
    save_embeddings(projected, a.out);
    const double kept = model.explained_variance.sum() / model.total_variance;
    if (a.common.json) {
        out << json{{"command", "pca"},
                    {"output", a.out},
                    {"count", projected.rows()},
                    {"dim", projected.dim()},
                    {"explained_variance_ratio", kept}}
                   .dump(2)
            << '\n';
    } else {
        out << "projected " << projected.rows() << " rows from " << x.dim() << " to " << projected.dim()
            << " dims (explained variance " << num(kept) << ") to " << a.out << '\n';
    }
}

// ---------------------------------------------------------------- interpolate

struct InterpolateArgs {
    Common common;
    std::string input, out;
    std::size_t n = 0;
};

void run_interpolate(const InterpolateArgs& a, std::ostream& out) {
    const EmbeddingMatrix q = load_embeddings(a.input);
    const EmbeddingMatrix added = interpolate_queries(q, a.n, a.common.seed);
    save_embeddings(added, a.out);
    if (a.common.json) {
        out << json{{"command", "interpolate"}, {"output", a.out}, {"count", added.rows()}}.dump(2) << '\n';
    } else {
        out << "wrote " << added.rows() << " interpolated queries to " << a.out << '\n';
    }
}

// ---------------------------------------------------------------- capacity-bench

struct CapacityArgs {
    Common common;
    CapacityBenchConfig cfg;
    std::string out;
};

void run_capacity(const CapacityArgs& a, std::ostream& out) {
    CapacityBenchConfig cfg = a.cfg;
    cfg.seed = a.common.seed;
    const CapacityReport report = capacity_bench(cfg);
    if (!a.out.empty()) {
        detail::write_text(a.out, a.common.json ? format_capacity_json(report, false) : format_capacity_tsv(report, false));
    }
    out << (a.common.json ? format_capacity_json(report, true) : format_capacity_tsv(report, true));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generative vector search: flow-matching query generation, exact retrieval and evaluation", "gvs"};
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);
    app.set_version_flag("--version", "gvs 0.1.0");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Fit a conditional flow-matching (or regression) model");
    add_common(train_cmd, ta.common);
    train_cmd->add_option("--targets", ta.targets, "Target embedding file")->required();
    train_cmd->add_option("--conditions", ta.conditions, "Condition embedding file (omit for unconditional)");
    train_cmd->add_option("--pairs", ta.pairs, "Pair file (condition row, target row); default pairs row i with row i");
    train_cmd->add_option("--out", ta.out, "Checkpoint base path")->required();
    train_cmd->add_option("--objective", ta.objective, "cfm or regression")->capture_default_str();
    train_cmd->add_option("--lr", ta.cfg.lr, "Peak learning rate")->capture_default_str();
    train_cmd->add_option("--weight-decay", ta.cfg.weight_decay, "AdamW weight decay")->capture_default_str();
    train_cmd->add_option("--warmup", ta.cfg.warmup_steps, "Linear warmup steps")->capture_default_str();
    train_cmd->add_option("--batch", ta.cfg.batch_size, "Mini-batch size")->capture_default_str();
    train_cmd->add_option("--epochs", ta.cfg.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--dropout", ta.cfg.condition_dropout, "Condition dropout probability")->capture_default_str();
    train_cmd->add_option("--hidden", ta.arch.hidden_dim, "Hidden width")->capture_default_str();
    train_cmd->add_option("--time-dim", ta.arch.time_dim, "Sinusoidal time encoding width")->capture_default_str();
    train_cmd->add_option("--layers", ta.arch.layers, "Residual blocks")->capture_default_str();
    train_cmd->add_option("--rank", ta.arch.rank, "Low-rank correction rank")->capture_default_str();

    SampleArgs sa;
    auto* sample_cmd = app.add_subcommand("sample", "Generate embeddings from a trained model");
    add_common(sample_cmd, sa.common);
    sample_cmd->add_option("--model", sa.model, "Checkpoint base path")->required();
    sample_cmd->add_option("--out", sa.out, "Output embedding base path")->required();
    sample_cmd->add_option("--n", sa.n, "Samples per condition / query")->capture_default_str()->check(CLI::PositiveNumber);
    sample_cmd->add_option("--steps", sa.steps, "Euler steps")->capture_default_str()->check(CLI::PositiveNumber);
    sample_cmd->add_option("--guidance", sa.guidance, "Classifier-free guidance scale")->capture_default_str();
    sample_cmd->add_option("--local-t", sa.local_t, "Start time in [0, 1] for local sampling around --query-file rows");
    sample_cmd->add_option("--condition-file", sa.condition_file, "Condition embedding file");
    sample_cmd->add_option("--condition-row", sa.condition_rows, "Condition rows to use (default: all)");
    sample_cmd->add_option("--query-file", sa.query_file, "Embeddings to sample around (local sampling)");
    sample_cmd->add_option("--query-row", sa.query_rows, "Query rows to use (default: all)");

    SearchArgs sea;
    auto* search_cmd = app.add_subcommand("search", "Exact k-nearest-neighbour search");
    add_common(search_cmd, sea.common);
    search_cmd->add_option("--store", sea.store, "Document embedding file")->required();
    search_cmd->add_option("--query-file", sea.query_file, "Query embedding file")->required();
    search_cmd->add_option("--k", sea.k, "Neighbours per query")->capture_default_str();
    search_cmd->add_option("--mode", sea.mode, "Fusion of grouped samples: min-distance or vote")->capture_default_str();
    search_cmd->add_option("--metric", sea.metric, "cosine or euclidean")->capture_default_str();
    search_cmd->add_flag("--group", sea.group, "Treat rows whose ids share the prefix before '#' as samples of one query");
    search_cmd->add_option("--out", sea.out, "Run file to write (default: print to stdout)");

    EvaluateArgs ea;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a run file against qrels");
    add_common(eval_cmd, ea.common);
    eval_cmd->add_option("--qrels", ea.qrels, "Qrels TSV")->required();
    eval_cmd->add_option("--run", ea.run, "Run TSV")->required();
    eval_cmd->add_option("--metric", ea.metric, "Metric name")->capture_default_str();

    CoralArgs ca;
    auto* coral_cmd = app.add_subcommand("coral", "Align source embeddings to the target distribution");
    add_common(coral_cmd, ca.common);
    coral_cmd->add_option("--source", ca.source, "Source embedding file")->required();
    coral_cmd->add_option("--target", ca.target, "Target embedding file")->required();
    coral_cmd->add_option("--out", ca.out, "Aligned output base path")->required();
    coral_cmd->add_option("--source-labels", ca.source_labels, "Per-row source labels for per-class alignment");
    coral_cmd->add_option("--target-labels", ca.target_labels, "Per-row target labels for per-class alignment");
    coral_cmd->add_flag("--no-normalize", ca.no_normalize, "Skip unit-norm scaling before and after alignment");

    VmfArgs va;
    auto* vmf_cmd = app.add_subcommand("vmf-classify", "Classify embeddings with per-class von Mises-Fisher densities");
    add_common(vmf_cmd, va.common);
    vmf_cmd->add_option("--train", va.train, "Labelled training embeddings")->required();
    vmf_cmd->add_option("--labels", va.labels, "One label per training row")->required();
    vmf_cmd->add_option("--query-file", va.query_file, "Embeddings to classify")->required();
    vmf_cmd->add_option("--query-labels", va.query_labels, "True labels of the queries, for accuracy and F1");
    vmf_cmd->add_flag("--coral", va.coral, "Align queries to the training distribution first");
    vmf_cmd->add_option("--out", va.out, "Prediction TSV to write");

    PcaArgs pa;
    auto* pca_cmd = app.add_subcommand("pca", "Project embeddings onto their top principal components");
    add_common(pca_cmd, pa.common);
    pca_cmd->add_option("--input", pa.input, "Embedding file")->required();
    pca_cmd->add_option("--k", pa.k, "Components to keep")->required();
    pca_cmd->add_option("--out", pa.out, "Output base path")->required();

    InterpolateArgs ia;
    auto* interp_cmd = app.add_subcommand("interpolate", "Augment queries by interpolating random pairs");
    add_common(interp_cmd, ia.common);
    interp_cmd->add_option("--input", ia.input, "Query embedding file")->required();
    interp_cmd->add_option("--n", ia.n, "Number of new queries")->required();
    interp_cmd->add_option("--out", ia.out, "Output base path")->required();

    CapacityArgs cba;
    auto* cap_cmd = app.add_subcommand("capacity-bench", "Prototype vs generative classification after PCA reduction");
    add_common(cap_cmd, cba.common);
    auto& cc = cba.cfg;
    cap_cmd->add_option("--classes", cc.n_classes, "Number of classes")->capture_default_str();
    cap_cmd->add_option("--points", cc.points_per_class, "Points per class")->capture_default_str();
    cap_cmd->add_option("--ambient", cc.ambient_dim, "Ambient dimension")->capture_default_str();
    cap_cmd->add_option("--dims", cc.reduced_dims, "Reduced dimensions")->delimiter(',')->capture_default_str();
    cap_cmd->add_option("--separation", cc.separation, "Radius of cluster centres")->capture_default_str();
    cap_cmd->add_option("--noise", cc.noise, "Per-coordinate noise std")->capture_default_str();
    cap_cmd->add_option("--samples", cc.samples_per_class, "Generated samples per class")->capture_default_str();
    cap_cmd->add_option("--modes", cc.modes_per_class, "Clusters per class")->capture_default_str();
    cap_cmd->add_option("--hidden", cc.hidden_dim, "Flow model hidden width")->capture_default_str();
    cap_cmd->add_option("--epochs", cc.flow_epochs, "Flow model training epochs")->capture_default_str();
    cap_cmd->add_option("--prototype-epochs", cc.prototype_epochs, "Prototype training epochs")->capture_default_str();
    cap_cmd->add_option("--out", cba.out, "Report file (without timings)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
    }

    try {
        if (train_cmd->parsed()) run_train(ta, out);
        else if (sample_cmd->parsed()) run_sample(sa, out, err);
        else if (search_cmd->parsed()) run_search(sea, out);
        else if (eval_cmd->parsed()) run_evaluate(ea, out);
        else if (coral_cmd->parsed()) run_coral(ca, out);
        else if (vmf_cmd->parsed()) run_vmf(va, out);
        else if (pca_cmd->parsed()) run_pca(pa, out);
        else if (interp_cmd->parsed()) run_interpolate(ia, out);
        else if (cap_cmd->parsed()) run_capacity(cba, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::kInternal);
    }
    return 0;
}

}  // namespace gvs
