#pragma once

#include <map>
#include <string>
#include <vector>

#include "gvs/types.hpp"

namespace gvs {

/// Mean resultant lengths are clamped here before the concentration formula.
inline constexpr double kResultantClamp = 1.0 - 1e-6;

/// kappa ~= R (D - R^2) / (1 - R^2), with R clamped to kResultantClamp.
double vmf_kappa_estimate(double mean_resultant, std::size_t dim);

/// log C_D(kappa) = (D/2 - 1) log kappa - (D/2) log(2 pi) - log I_{D/2-1}(kappa),
/// evaluated with the exponentially scaled Bessel function.
double vmf_log_normalizer(std::size_t dim, double kappa);

/// The same quantity through an unscaled Bessel evaluation; overflows for
/// large kappa and exists as a cross-check.
double vmf_log_normalizer_unscaled(std::size_t dim, double kappa);

struct VmfClass {
    std::string label;
    Vector mean_direction;  // unit norm
    double kappa = 0;
    double mean_resultant = 0;  // before clamping
    double log_prior = 0;
};

/// One von Mises-Fisher component per class; uniform prior unless overridden.
struct VmfModel {
    std::vector<VmfClass> classes;

    std::size_t dim() const { return classes.empty() ? 0 : static_cast<std::size_t>(classes[0].mean_direction.size()); }
    void set_log_priors(const std::vector<double>& log_priors);
};

/// Rows of every class must be (close to) unit norm. Classes keep the map's order.
VmfModel vmf_fit(const std::map<std::string, Matrix>& rows_by_class);

/// Groups rows by label and fits; classes are ordered by first appearance.
VmfModel vmf_fit(const Matrix& rows, const std::vector<std::string>& labels);

/// Normalized log posterior log p(c | x) for every class (log-sum-exp = 0).
/// x must have unit norm within 1e-4.
Vector vmf_log_posterior(const VmfModel& model, const Eigen::Ref<const RowVector>& x);

/// Index of the highest-scoring class per row; ties go to the lower index.
std::vector<std::size_t> vmf_classify(const VmfModel& model, const Matrix& x);

}  // namespace gvs
