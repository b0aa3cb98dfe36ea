#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvs/standardize.hpp"
#include "gvs/types.hpp"
#include "gvs/velocity_field.hpp"

namespace gvs {

class Rng;

/// Shape of the conditional velocity network.
struct Architecture {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 64;
    std::size_t time_dim = 16;   // even; sinusoidal encoding width and time MLP width
    std::size_t cond_dim = 0;    // 0 means an unconditional model
    std::size_t layers = 1;      // residual HyperMLP blocks
    std::size_t rank = 8;        // low-rank correction rank, < hidden_dim

    /// Hidden width of every hypernet generator.
    std::size_t generator_dim() const { return cond_dim > 0 ? cond_dim : time_dim; }
    bool conditional() const { return cond_dim > 0; }

    void validate() const;
    bool operator==(const Architecture&) const = default;
};

/// One named slice of the flat parameter or buffer vector.
struct TensorEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
    bool buffer = false;  // running statistics, not trained
};

inline constexpr double kAlphaInit = 1e-2;
inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kNormEps = 1e-5;
inline constexpr double kTimeScale = 1000.0;

enum class BatchNormMode { kTrain, kEval };

enum class Objective { kCfm, kRegression };

Objective parse_objective(const std::string& name);
std::string objective_name(Objective o);

/// Loss value plus gradient with respect to the flat trainable parameters.
struct LossGrad {
    double loss = 0;
    Vector grad;
    // Batch statistics of the condition batch-norm (train mode only).
    Vector cond_batch_mean;
    Vector cond_batch_var;
};

/// The conditional velocity network v(x_t, t, c).
///
///   h = in_proj(x)
///   e = fuse([time_mlp(sinusoid(t)), cond_proj(batchnorm(c))])
///   h = h + HyperMLP(LayerNorm(h), e)           (repeated `layers` times)
///   v = out_proj(h)
///
/// HyperMLP is HyperLinear -> GELU -> HyperLinear, and each HyperLinear
/// computes y = s(e) * (W x) + alpha * V(e) U(e)^T x + b(e) with one small
/// generator per dynamic term. Trainable parameters live in one flat vector
/// addressed through the tensor table; batch-norm running statistics live in
/// a separate buffer vector.
class FlowModel : public VelocityField {
public:
    /// Fresh model. Every generator starts so that V(e) = 0, b(e) = 0 and
    /// s(e) = 1 for any e, which makes each HyperLinear equal to W x.
    static FlowModel init(const Architecture& arch, std::uint64_t seed);

    /// Empty model with the right layout; used by the checkpoint loader.
    static FlowModel zeros(const Architecture& arch);

    const Architecture& arch() const { return arch_; }
    const std::vector<TensorEntry>& tensors() const { return tensors_; }
    const TensorEntry& tensor(const std::string& name) const;

    Vector& params() { return params_; }
    const Vector& params() const { return params_; }
    Vector& buffers() { return buffers_; }
    const Vector& buffers() const { return buffers_; }

    /// Standardization of the target space; samples are produced in
    /// standardized coordinates and mapped back with these.
    StandardizeStats& stats() { return stats_; }
    const StandardizeStats& stats() const { return stats_; }

    /// Condition-dropout probability the model was trained with.
    double trained_condition_dropout() const { return trained_dropout_; }
    void set_trained_condition_dropout(double p) { trained_dropout_ = p; }

    Objective objective() const { return objective_; }
    void set_objective(Objective o) { objective_ = o; }

    std::size_t dim() const override { return arch_.input_dim; }
    std::size_t cond_dim() const override { return arch_.cond_dim; }
    Matrix velocity(const Matrix& x, const Vector& t, const Matrix* cond) const override;

    /// Batched forward in standardized coordinates. cond == nullptr is the
    /// zero condition. In eval mode rows are processed independently.
    Matrix forward(const Matrix& x, const Vector& t, const Matrix* cond,
                   BatchNormMode mode = BatchNormMode::kEval) const;

    /// Mean over rows of |forward(x, t, cond) - target|^2 and its exact gradient.
    LossGrad loss_grad(const Matrix& x, const Vector& t, const Matrix* cond, const Matrix& target,
                       BatchNormMode mode = BatchNormMode::kTrain) const;

    /// Fold a batch's condition statistics into the running statistics.
    void update_running_stats(const Vector& batch_mean, const Vector& batch_var, std::size_t batch_rows);

    /// Rounds every parameter and buffer to the nearest 32-bit float, the
    /// precision of the checkpoint format.
    void round_to_float();

    std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

private:
    explicit FlowModel(const Architecture& arch);

    Architecture arch_;
    std::vector<TensorEntry> tensors_;
    Vector params_;
    Vector buffers_;
    StandardizeStats stats_;
    double trained_dropout_ = 0.0;
    Objective objective_ = Objective::kCfm;
};

/// Mean squared velocity error with caller-supplied noise, times and
/// dropout mask (keep[i] == false replaces condition row i by zeros).
///   x_t = t x0 + (1 - t) x1,  target = x1 - x0
LossGrad cfm_loss_grad_fixed(const FlowModel& model, const Matrix& x1, const Matrix* cond, const Matrix& x0,
                             const Vector& t, const std::vector<bool>& keep);

/// Conditional flow matching loss with noise, logit-normal times and
/// condition dropout drawn from rng. x1 must already be standardized.
LossGrad cfm_loss_grad(const FlowModel& model, const Matrix& x1, const Matrix* cond, double dropout, Rng& rng);

/// Deterministic regression baseline: predict x from f(0, c) at t = 0.
LossGrad regression_loss_grad(const FlowModel& model, const Matrix& x, const Matrix* cond);

}  // namespace gvs
