#pragma once

#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/grid.hpp"
#include "agediff/linalg.hpp"

#include <cmath>
#include <sstream>

namespace agediff {

/// Dense realization of A(a) = d/dx(d(a,x) d/dx .) - mu(a,x) on the spatial grid.
struct SpatialOperator {
    double age = 0.0;
    Matrix matrix;
};

namespace detail {

inline double eval_checked(const Field& f, const char* name, double a, double x) {
    const double v = f(a, x);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << name << " is not finite at grid point (a=" << a << ", x=" << x << ")";
        throw InvalidCoefficientError(os.str());
    }
    return v;
}

}  // namespace detail

/// Second-order central-difference / finite-volume discretization with the
/// diffusion coefficient evaluated at cell midpoints. Symmetric for Dirichlet
/// and Neumann. Robin adds the boundary exchange -robin_coeff * u / h on the
/// first and last row, preserving the nonnegative off-diagonal structure.
inline SpatialOperator assemble_spatial_operator(const Coefficients& coeff, const SpaceGrid& sgrid,
                                                 double age) {
    const int n = sgrid.n_space;
    const double h = sgrid.spacing;
    SpatialOperator op;
    op.age = age;
    op.matrix = Matrix::Zero(n, n);

    if (coeff.diffusion_enabled) {
        const double inv_h2 = 1.0 / (h * h);
        auto dmid = [&](double x) {
            const double v = detail::eval_checked(coeff.diffusion, "diffusion", age, x);
            if (v < coeff.d_min) {
                std::ostringstream os;
                os << "diffusion below d_min=" << coeff.d_min << " at (a=" << age << ", x=" << x
                   << "): " << v;
                throw InvalidCoefficientError(os.str());
            }
            return v;
        };
        if (sgrid.bc.kind == BcKind::dirichlet) {
            // Vertex-centered interior nodes, homogeneous boundary values.
            for (int k = 0; k < n; ++k) {
                const double x = sgrid.nodes[k];
                const double dl = dmid(x - 0.5 * h);
                const double dr = dmid(x + 0.5 * h);
                op.matrix(k, k) -= (dl + dr) * inv_h2;
                if (k > 0) op.matrix(k, k - 1) += dl * inv_h2;
                if (k + 1 < n) op.matrix(k, k + 1) += dr * inv_h2;
            }
        } else {
            // Cell-centered; interior fluxes only, boundary flux 0 (Neumann)
            // or an exchange term (Robin).
            for (int k = 0; k + 1 < n; ++k) {
                const double d = dmid(0.5 * (sgrid.nodes[k] + sgrid.nodes[k + 1]));
                op.matrix(k, k) -= d * inv_h2;
                op.matrix(k, k + 1) += d * inv_h2;
                op.matrix(k + 1, k + 1) -= d * inv_h2;
                op.matrix(k + 1, k) += d * inv_h2;
            }
            if (sgrid.bc.kind == BcKind::robin) {
                const double r = sgrid.bc.robin_coeff;
                op.matrix(0, 0) -= r / h;
                op.matrix(n - 1, n - 1) -= r / h;
            }
        }
    }

    for (int k = 0; k < n; ++k)
        op.matrix(k, k) -= detail::eval_checked(coeff.mortality, "mortality", age, sgrid.nodes[k]);

    return op;
}

}  // namespace agediff
