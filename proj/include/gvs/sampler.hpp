#pragma once

#include <cstdint>
#include <optional>

#include "gvs/embedding.hpp"
#include "gvs/flow_model.hpp"
#include "gvs/standardize.hpp"
#include "gvs/velocity_field.hpp"

namespace gvs {

struct SampleConfig {
    std::size_t n_samples = 1;
    std::size_t euler_steps = 10;
    double guidance_scale = 1.0;
    std::optional<double> local_start_time;
    std::uint64_t seed = 0;
    /// Sample i draws its noise from stream (stream_offset + i).
    std::uint64_t stream_offset = 0;

    void validate() const;
};

/// v_u + lambda (v_c - v_u), where v_u uses the zero condition. Exactly one
/// forward pass when lambda is 0 or 1 (or the field is unconditional).
/// `cond` holds one row per state row, or is nullptr.
Matrix guided_velocity(const VelocityField& field, const Matrix& x, const Vector& t, const Matrix* cond,
                       double lambda);

/// Euler integration from noise (t = 1) to data (t = 0) in standardized
/// coordinates, followed by de-standardization with `stats`.
///
/// Each of the S steps is x <- x + (1/S) v(x, t_k, c) with t_k = 1 - k/S.
/// `cond` is one condition row shared by all samples, or nullptr.
Matrix euler_generate(const VelocityField& field, const StandardizeStats& stats, const RowVector* cond,
                      const SampleConfig& cfg);

/// Same integration from caller-provided starting states (already in
/// standardized coordinates) over [t_start, 0] with `steps` steps.
Matrix euler_integrate(const VelocityField& field, Matrix x, double t_start, std::size_t steps, const Matrix* cond,
                       double lambda);

/// Perturb-and-denoise around `query` (given in the original space).
///
/// The standardized query is mixed with fresh noise at time t0 exactly like a
/// training interpolation point, x = t0 n + (1 - t0) z, then integrated to
/// t = 0 with ceil(S t0) steps. t0 = 0 returns the query unchanged.
Matrix local_sample(const VelocityField& field, const StandardizeStats& stats, const RowVector& query,
                    const RowVector* cond, const SampleConfig& cfg);

/// Convenience overloads that use the model's stored standardization and
/// warn when guidance is requested from a model trained without condition dropout.
EmbeddingMatrix euler_generate(const FlowModel& model, const RowVector* cond, const SampleConfig& cfg);
EmbeddingMatrix local_sample(const FlowModel& model, const RowVector& query, const RowVector* cond,
                             const SampleConfig& cfg);

/// Regression baseline prediction f(0, c) mapped back to the original space.
RowVector regression_predict(const FlowModel& model, const RowVector* cond);

}  // namespace gvs
