#include "gvs/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gvs/bessel.hpp"
#include "gvs/error.hpp"

namespace gvs {

double vmf_kappa_estimate(double mean_resultant, std::size_t dim) {
    if (!(mean_resultant >= 0.0)) throw ParameterError("mean resultant length must be >= 0");
    const double r = std::min(mean_resultant, kResultantClamp);
    const double d = static_cast<double>(dim);
    return r * (d - r * r) / (1.0 - r * r);
}

double vmf_log_normalizer(std::size_t dim, double kappa) {
    if (dim < 2) throw ParameterError("vMF needs dimension >= 2");
    if (!(kappa > 0.0)) throw ParameterError("vMF concentration must be > 0");
    const double half = 0.5 * static_cast<double>(dim);
    const double nu = half - 1.0;
    return nu * std::log(kappa) - half * std::log(2.0 * std::numbers::pi) - (log_bessel_i_scaled(nu, kappa) + kappa);
}

double vmf_log_normalizer_unscaled(std::size_t dim, double kappa) {
    if (dim < 2) throw ParameterError("vMF needs dimension >= 2");
    const double half = 0.5 * static_cast<double>(dim);
    const double nu = half - 1.0;
    return nu * std::log(kappa) - half * std::log(2.0 * std::numbers::pi) - std::log(std::cyl_bessel_i(nu, kappa));
}

void VmfModel::set_log_priors(const std::vector<double>& log_priors) {
    if (log_priors.size() != classes.size()) throw DimensionError("one log prior per class expected");
    for (std::size_t i = 0; i < classes.size(); ++i) classes[i].log_prior = log_priors[i];
}

namespace {

VmfClass fit_class(const std::string& label, const Matrix& rows) {
    if (rows.rows() < 1) throw DimensionError("class '" + label + "' has no rows");
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        if (std::abs(rows.row(i).norm() - 1.0) > 1e-4) {
            throw ParameterError("class '" + label + "' row " + std::to_string(i) + " is not unit norm");
        }
    }
    const Vector mean = rows.colwise().mean().transpose();
    const double r = mean.norm();
    if (r == 0.0 || !std::isfinite(r)) throw DegenerateInputError("class '" + label + "' has a zero mean direction");
    VmfClass c;
    c.label = label;
    c.mean_direction = mean / r;
    c.mean_resultant = r;
    c.kappa = vmf_kappa_estimate(r, static_cast<std::size_t>(rows.cols()));
    return c;
}

void set_uniform_prior(VmfModel& m) {
    const double lp = -std::log(static_cast<double>(m.classes.size()));
    for (auto& c : m.classes) c.log_prior = lp;
}

}  // namespace

VmfModel vmf_fit(const std::map<std::string, Matrix>& rows_by_class) {
    if (rows_by_class.empty()) throw DimensionError("vmf_fit needs at least one class");
    VmfModel m;
    for (const auto& [label, rows] : rows_by_class) m.classes.push_back(fit_class(label, rows));
    for (const auto& c : m.classes) {
        if (c.mean_direction.size() != m.classes[0].mean_direction.size()) {
            throw DimensionError("classes have different dimensions");
        }
    }
    set_uniform_prior(m);
    return m;
}

VmfModel vmf_fit(const Matrix& rows, const std::vector<std::string>& labels) {
    if (labels.size() != static_cast<std::size_t>(rows.rows())) throw DimensionError("one label per row expected");
    std::vector<std::string> order;
    std::map<std::string, std::vector<Eigen::Index>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& list = members[labels[i]];
        if (list.empty()) order.push_back(labels[i]);
        list.push_back(static_cast<Eigen::Index>(i));
    }
    if (order.empty()) throw DimensionError("vmf_fit needs at least one class");
    VmfModel m;
    for (const auto& label : order) {
        const auto& idx = members[label];
        Matrix sub(static_cast<Eigen::Index>(idx.size()), rows.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = rows.row(idx[i]);
        m.classes.push_back(fit_class(label, sub));
    }
    set_uniform_prior(m);
    return m;
}

Vector vmf_log_posterior(const VmfModel& model, const Eigen::Ref<const RowVector>& x) {
    if (model.classes.empty()) throw DimensionError("empty vMF model");
    if (static_cast<std::size_t>(x.size()) != model.dim()) throw DimensionError("vMF input dimension mismatch");
    if (std::abs(x.norm() - 1.0) > 1e-4) throw ParameterError("vMF input must have unit norm");
    const auto k = static_cast<Eigen::Index>(model.classes.size());
    Vector score(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto& cls = model.classes[static_cast<std::size_t>(c)];
        score(c) = cls.kappa * x.dot(cls.mean_direction.transpose()) + vmf_log_normalizer(model.dim(), cls.kappa) +
                   cls.log_prior;
    }
    const double top = score.maxCoeff();
    const double lse = top + std::log((score.array() - top).exp().sum());
    return (score.array() - lse).matrix();
}

std::vector<std::size_t> vmf_classify(const VmfModel& model, const Matrix& x) {
    std::vector<std::size_t> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Vector s = vmf_log_posterior(model, x.row(i));
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < s.size(); ++c) {
            if (s(c) > s(best)) best = c;
        }
        out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return out;
}

}  // namespace gvs
