#pragma once

#include "psido/operator.hpp"

namespace psido {

/// Objective/gradient contract used by the optimizer and the samplers.
/// The gradient is the Riesz representative in the area-weighted inner product,
/// so the directional derivative along d is dot(gradient(m), d).
class ObjectiveProblem {
public:
    virtual ~ObjectiveProblem() = default;

    [[nodiscard]] virtual const Grid2D& grid() const = 0;
    /// Negative log posterior (up to a constant).
    [[nodiscard]] virtual double objective(const Field& m) const = 0;
    [[nodiscard]] virtual Field gradient(const Field& m) const = 0;
    /// Data-misfit part of the objective (negative log likelihood).
    [[nodiscard]] virtual double misfit(const Field& m) const = 0;
    /// Misfit Hessian, available only through matrix-vector products.
    [[nodiscard]] virtual LinearOperator misfit_hessian() const = 0;
    /// Data Hessian H_d with misfit_hessian() = W H_d W for the diagonal window W.
    /// This is the operator the probing methods approximate.
    [[nodiscard]] virtual LinearOperator data_hessian() const { return misfit_hessian(); }
    [[nodiscard]] virtual Field window() const { return Field::constant(grid(), 1.0); }
};

}  // namespace psido
