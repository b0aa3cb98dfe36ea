#include "gvs/augment.hpp"

#include <string>
#include <vector>

#include "gvs/error.hpp"
#include "gvs/random.hpp"

namespace gvs {

EmbeddingMatrix interpolate_queries(const EmbeddingMatrix& queries, std::size_t n_new, std::uint64_t seed) {
    const std::size_t n = queries.rows();
    if (n < 2) throw DegenerateInputError("interpolate_queries needs at least 2 queries, got " + std::to_string(n));
    Matrix out(static_cast<Eigen::Index>(n_new), static_cast<Eigen::Index>(queries.dim()));
    std::vector<std::string> ids(n_new);
    for (std::size_t r = 0; r < n_new; ++r) {
        Rng rng(seed, r);
        const std::size_t i = rng.index(n);
        std::size_t j = rng.index(n - 1);
        if (j >= i) ++j;
        const double w = rng.uniform();
        out.row(static_cast<Eigen::Index>(r)) = w * queries.row(i) + (1.0 - w) * queries.row(j);
        ids[r] = "interp#" + std::to_string(r);
    }
    return EmbeddingMatrix(std::move(out), std::move(ids));
}

}  // namespace gvs
