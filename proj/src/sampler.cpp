#include "gvs/sampler.hpp"

#include <cmath>
#include <iostream>

#include "gvs/error.hpp"
#include "gvs/random.hpp"

namespace gvs {

void SampleConfig::validate() const {
    if (n_samples < 1) throw ParameterError("n_samples must be >= 1");
    if (euler_steps < 1) throw ParameterError("euler_steps must be >= 1");
    if (!std::isfinite(guidance_scale)) throw ParameterError("guidance scale must be finite");
    if (local_start_time && !(*local_start_time >= 0.0 && *local_start_time <= 1.0)) {
        throw ParameterError("local start time must lie in [0, 1]");
    }
}

Matrix guided_velocity(const VelocityField& field, const Matrix& x, const Vector& t, const Matrix* cond,
                       double lambda) {
    if (cond == nullptr || field.cond_dim() == 0 || lambda == 0.0) return field.velocity(x, t, nullptr);
    if (lambda == 1.0) return field.velocity(x, t, cond);
    const Matrix vu = field.velocity(x, t, nullptr);
    const Matrix vc = field.velocity(x, t, cond);
    return vu + lambda * (vc - vu);
}

Matrix euler_integrate(const VelocityField& field, Matrix x, double t_start, std::size_t steps, const Matrix* cond,
                       double lambda) {
    if (steps == 0) return x;
    const double dt = t_start / static_cast<double>(steps);
    Vector t(x.rows());
    for (std::size_t k = 0; k < steps; ++k) {
        t.setConstant(t_start - static_cast<double>(k) * dt);
        x += dt * guided_velocity(field, x, t, cond, lambda);
        if (!x.allFinite()) {
            throw SamplingError("non-finite state after Euler step " + std::to_string(k + 1) + " of " +
                                std::to_string(steps));
        }
    }
    return x;
}

namespace {

Matrix broadcast_condition(const RowVector* cond, std::size_t rows, std::size_t cond_dim) {
    if (cond == nullptr) return {};
    if (static_cast<std::size_t>(cond->size()) != cond_dim) {
        throw DimensionError("condition has dimension " + std::to_string(cond->size()) + ", model expects " +
                             std::to_string(cond_dim));
    }
    return cond->replicate(static_cast<Eigen::Index>(rows), 1);
}

void warn_if_unguided(const FlowModel& model, const RowVector* cond, double lambda) {
    if (cond != nullptr && lambda != 1.0 && model.trained_condition_dropout() == 0.0) {
        std::cerr << "warning: guidance scale " << lambda
                  << " on a model trained without condition dropout; the unconditional branch is untrained\n";
    }
}

}  // namespace

Matrix euler_generate(const VelocityField& field, const StandardizeStats& stats, const RowVector* cond,
                      const SampleConfig& cfg) {
    cfg.validate();
    if (stats.dim() != field.dim()) throw DimensionError("standardize stats do not match the field dimension");
    const Matrix c = broadcast_condition(cond, cfg.n_samples, field.cond_dim());
    Matrix x = sample_gaussian(cfg.n_samples, field.dim(), cfg.seed, cfg.stream_offset);
    x = euler_integrate(field, std::move(x), 1.0, cfg.euler_steps, cond != nullptr ? &c : nullptr,
                        cfg.guidance_scale);
    return standardize_invert(x, stats);
}

Matrix local_sample(const VelocityField& field, const StandardizeStats& stats, const RowVector& query,
                    const RowVector* cond, const SampleConfig& cfg) {
    cfg.validate();
    if (!cfg.local_start_time) throw ParameterError("local sampling needs a start time");
    if (static_cast<std::size_t>(query.size()) != field.dim()) throw DimensionError("query dimension mismatch");
    const double t0 = *cfg.local_start_time;
    const auto n = static_cast<Eigen::Index>(cfg.n_samples);
    if (t0 == 0.0) return query.replicate(n, 1);

    const Matrix c = broadcast_condition(cond, cfg.n_samples, field.cond_dim());
    const RowVector z = standardize_apply(Matrix(query), stats).row(0);
    const Matrix noise = sample_gaussian(cfg.n_samples, field.dim(), cfg.seed, cfg.stream_offset);
    Matrix x = t0 * noise;
    x.rowwise() += (1.0 - t0) * z;
    const auto steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(cfg.euler_steps) * t0)));
    x = euler_integrate(field, std::move(x), t0, steps, cond != nullptr ? &c : nullptr, cfg.guidance_scale);
    return standardize_invert(x, stats);
}

namespace {

EmbeddingMatrix with_sample_ids(Matrix m, const SampleConfig& cfg) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ids.push_back(std::to_string(cfg.stream_offset + static_cast<std::uint64_t>(i)));
    }
    return EmbeddingMatrix(std::move(m), std::move(ids));
}

}  // namespace

EmbeddingMatrix euler_generate(const FlowModel& model, const RowVector* cond, const SampleConfig& cfg) {
    warn_if_unguided(model, cond, cfg.guidance_scale);
    return with_sample_ids(euler_generate(model, model.stats(), cond, cfg), cfg);
}

EmbeddingMatrix local_sample(const FlowModel& model, const RowVector& query, const RowVector* cond,
                             const SampleConfig& cfg) {
    warn_if_unguided(model, cond, cfg.guidance_scale);
    return with_sample_ids(local_sample(model, model.stats(), query, cond, cfg), cfg);
}

RowVector regression_predict(const FlowModel& model, const RowVector* cond) {
    const Matrix c = broadcast_condition(cond, 1, model.cond_dim());
    const Matrix y = model.forward(Matrix::Zero(1, static_cast<Eigen::Index>(model.dim())), Vector::Zero(1),
                                   cond != nullptr ? &c : nullptr);
    return standardize_invert(y, model.stats()).row(0);
}

}  // namespace gvs
