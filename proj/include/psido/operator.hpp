#pragma once

#include <functional>
#include <utility>

#include "psido/grid.hpp"

namespace psido {

/// Matrix-free linear map on fields of one grid. Only `apply` is required;
/// callers must not assume anything else about the operator.
class LinearOperator {
public:
    using ApplyFn = std::function<Field(const Field&)>;

    LinearOperator() = default;
    LinearOperator(Grid2D grid, ApplyFn apply) : grid_(grid), apply_(std::move(apply)) {}

    [[nodiscard]] const Grid2D& grid() const { return grid_; }
    [[nodiscard]] std::size_t dims() const { return grid_.size(); }
    [[nodiscard]] bool valid() const { return static_cast<bool>(apply_); }

    [[nodiscard]] Field apply(const Field& v) const {
        require_same_grid(grid_, v.grid, "LinearOperator::apply");
        return apply_(v);
    }
    Field operator()(const Field& v) const { return apply(v); }

    static LinearOperator identity(const Grid2D& g) {
        return LinearOperator(g, [](const Field& v) { return v; });
    }

private:
    Grid2D grid_;
    ApplyFn apply_;
};

inline LinearOperator compose(LinearOperator outer, LinearOperator inner) {
    require_same_grid(outer.grid(), inner.grid(), "compose");
    const Grid2D g = outer.grid();
    return LinearOperator(g, [outer = std::move(outer), inner = std::move(inner)](const Field& v) {
        return outer.apply(inner.apply(v));
    });
}

inline LinearOperator sum(LinearOperator a, LinearOperator b) {
    require_same_grid(a.grid(), b.grid(), "sum");
    const Grid2D g = a.grid();
    return LinearOperator(g, [a = std::move(a), b = std::move(b)](const Field& v) { return a.apply(v) + b.apply(v); });
}

/// Pointwise multiplication by a fixed field.
inline LinearOperator diagonal(const Field& d) {
    return LinearOperator(d.grid, [d](const Field& v) { return hadamard(d, v); });
}

}  // namespace psido
