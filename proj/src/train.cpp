#include "gvs/train.hpp"

#include <cmath>
#include <numeric>

#include "gvs/optim.hpp"
#include "gvs/random.hpp"
#include "gvs/standardize.hpp"

namespace gvs {

void TrainConfig::validate() const {
    if (!(condition_dropout >= 0.0 && condition_dropout <= 1.0)) {
        throw ParameterError("condition dropout must lie in [0, 1]");
    }
    if (!(lr >= 0.0) || !(weight_decay >= 0.0)) throw ParameterError("lr and weight decay must be >= 0");
    if (batch_size < 1 || epochs < 1) throw ParameterError("batch size and epochs must be >= 1");
}

std::vector<IndexPair> identity_pairs(std::size_t n) {
    std::vector<IndexPair> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {i, i};
    return out;
}

TrainResult train(const EmbeddingMatrix& targets, const EmbeddingMatrix* conditions,
                  const std::vector<IndexPair>& pairs, const TrainConfig& cfg, Architecture arch) {
    cfg.validate();
    if (pairs.empty()) throw ParameterError("training needs at least one pair");
    if (targets.rows() < 2) throw DimensionError("training needs at least 2 target rows");
    for (const auto& [c, t] : pairs) {
        if (t >= targets.rows()) throw DimensionError("pair target index " + std::to_string(t) + " out of range");
        if (conditions != nullptr && c >= conditions->rows()) {
            throw DimensionError("pair condition index " + std::to_string(c) + " out of range");
        }
    }
    arch.input_dim = targets.dim();
    arch.cond_dim = conditions != nullptr ? conditions->dim() : 0;

    FlowModel model = FlowModel::init(arch, cfg.seed);
    model.stats() = standardize_fit(targets.data());
    model.set_objective(cfg.objective);
    model.set_trained_condition_dropout(
        cfg.objective == Objective::kCfm && conditions != nullptr ? cfg.condition_dropout : 0.0);
    const Matrix z = standardize_apply(targets.data(), model.stats());

    const Rng root(cfg.seed, 0x7472616e);  // training stream family
    Rng shuffle_rng = root.split(0);
    Rng step_rng = root.split(1);

    const std::size_t batches_per_epoch = (pairs.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = batches_per_epoch * cfg.epochs;
    AdamWState opt = AdamWState::zeros(model.parameter_count());

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result{model, {}, 0};
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const std::size_t start = b * cfg.batch_size;
            const std::size_t n = std::min(cfg.batch_size, pairs.size() - start);
            Matrix x1(static_cast<Eigen::Index>(n), z.cols());
            Matrix c;
            if (conditions != nullptr) c.resize(static_cast<Eigen::Index>(n), conditions->data().cols());
            for (std::size_t i = 0; i < n; ++i) {
                const auto& [ci, ti] = pairs[order[start + i]];
                x1.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(ti));
                if (conditions != nullptr) {
                    c.row(static_cast<Eigen::Index>(i)) = conditions->data().row(static_cast<Eigen::Index>(ci));
                }
            }
            const Matrix* cptr = conditions != nullptr ? &c : nullptr;
            const LossGrad lg = cfg.objective == Objective::kCfm
                                    ? cfm_loss_grad(model, x1, cptr, cfg.condition_dropout, step_rng)
                                    : regression_loss_grad(model, x1, cptr);
            if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                        std::to_string(step) + " (loss=" + std::to_string(lg.loss) + ")",
                                    model, step);
            }
            model.update_running_stats(lg.cond_batch_mean, lg.cond_batch_var, n);
            ++step;
            adamw_step(model.params(), lg.grad, opt, lr_at_step(step, cfg.lr, cfg.warmup_steps, total_steps),
                       cfg.weight_decay);
            loss_sum += lg.loss;
        }
        const double mean_loss = loss_sum / static_cast<double>(batches_per_epoch);
        result.epoch_loss.push_back(mean_loss);
        if (cfg.on_epoch) cfg.on_epoch(epoch, mean_loss);
    }
    model.round_to_float();
    result.model = std::move(model);
    result.steps = step;
    return result;
}

}  // namespace gvs
