#pragma once

#include <cstdint>

#include "gvs/embedding.hpp"

namespace gvs {

/// New queries on segments between random pairs of existing ones.
///
/// Row r is w q_i + (1 - w) q_j with i != j drawn uniformly and
/// w ~ Uniform(0, 1), using RNG stream r of `seed`. Output ids are "interp#r".
EmbeddingMatrix interpolate_queries(const EmbeddingMatrix& queries, std::size_t n_new, std::uint64_t seed);

}  // namespace gvs
