#pragma once

#include <string>
#include <string_view>

#include "gvs/types.hpp"

namespace gvs {

enum class Metric { kCosine, kEuclidean };

Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);

/// Cosine distance 1 - a.b / (|a||b|) or Euclidean |a - b|.
/// Throws DegenerateInputError for a zero vector under cosine.
double distance(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b, Metric metric);

RowVector l2_normalize(const Eigen::Ref<const RowVector>& v);
Matrix l2_normalize_rows(const Matrix& m);

}  // namespace gvs
