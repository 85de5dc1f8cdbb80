#pragma once

#include "agediff/grid.hpp"
#include "agediff/linalg.hpp"

#include <cmath>
#include <string>

namespace agediff {

enum class SpaceNorm { l1_weighted, sup };

inline std::string to_string(SpaceNorm n) {
    return n == SpaceNorm::l1_weighted ? "l1_weighted" : "sup";
}

/// Norm of the discrete spatial space E_0 and, through age quadrature, of the
/// profile space L1(J, E_0). l1_weighted is the population-density default.
struct NormSpec {
    SpaceNorm space_norm = SpaceNorm::l1_weighted;
    double weight_scale = 1.0;  // uniform rescaling of the spatial weights

    double spatial_weight(const SpaceGrid& g) const { return weight_scale * g.spacing; }

    double norm(const Vector& v, const SpaceGrid& g) const {
        if (space_norm == SpaceNorm::sup) return v.lpNorm<Eigen::Infinity>();
        return spatial_weight(g) * v.lpNorm<1>();
    }

    /// Operator norm on E_0 induced by the vector norm. For uniform l1
    /// weights this is the max absolute column sum; for sup, max row sum.
    double operator_norm(const Matrix& m, const SpaceGrid& g) const {
        (void)g;
        if (space_norm == SpaceNorm::sup) return m.cwiseAbs().rowwise().sum().maxCoeff();
        return m.cwiseAbs().colwise().sum().maxCoeff();
    }
};

/// Componentwise order-cone membership with a tolerance band.
inline bool cone_check_vector(const Vector& v, double tol_pos = 1e-10) {
    return (v.array() >= -tol_pos).all();
}

}  // namespace agediff
