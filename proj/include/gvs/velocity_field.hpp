#pragma once

#include <cstddef>

#include "gvs/types.hpp"

namespace gvs {

/// Anything that predicts a velocity for a batch of states.
///
/// Rows of x are independent states, t holds one time per row and cond is
/// either a batch of condition rows or nullptr for the unconditional (zero)
/// condition. Implementations must be row-wise independent at inference.
class VelocityField {
public:
    virtual ~VelocityField() = default;

    virtual std::size_t dim() const = 0;
    virtual std::size_t cond_dim() const = 0;
    virtual Matrix velocity(const Matrix& x, const Vector& t, const Matrix* cond) const = 0;
};

}  // namespace gvs
