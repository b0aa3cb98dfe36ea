#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "gvs/embedding.hpp"
#include "gvs/error.hpp"
#include "gvs/flow_model.hpp"
#include "gvs/io.hpp"

namespace gvs {

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 1e-5;
    std::size_t warmup_steps = 500;
    std::size_t batch_size = 256;
    std::size_t epochs = 20;
    double condition_dropout = 0.10;
    Objective objective = Objective::kCfm;
    std::uint64_t seed = 0;
    /// Called after every epoch with (epoch, mean loss).
    std::function<void(std::size_t, double)> on_epoch;

    void validate() const;
};

struct TrainResult {
    FlowModel model;
    std::vector<double> epoch_loss;
    std::size_t steps = 0;
};

/// Raised when the loss or gradient becomes non-finite. Carries the model
/// as it was before the failing step.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, FlowModel last_good, std::size_t step)
        : Error("training error: " + what, ExitCode::kNumeric),
          last_good_(std::make_shared<FlowModel>(std::move(last_good))),
          step_(step) {}

    const FlowModel& last_good() const { return *last_good_; }
    std::size_t step() const { return step_; }

private:
    std::shared_ptr<FlowModel> last_good_;
    std::size_t step_;
};

/// (i, i) for i < n.
std::vector<IndexPair> identity_pairs(std::size_t n);

/// Fits a velocity (or regression) model on (condition, target) pairs.
///
/// `arch.input_dim` and `arch.cond_dim` are taken from the data. Standardize
/// statistics are fitted on all target rows and stored in the model. Without
/// conditions the model is unconditional and only the target index of each
/// pair is used. Deterministic for a fixed seed.
TrainResult train(const EmbeddingMatrix& targets, const EmbeddingMatrix* conditions,
                  const std::vector<IndexPair>& pairs, const TrainConfig& cfg, Architecture arch);

}  // namespace gvs
