#pragma once

#include "agediff/errors.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace agediff {

/// Uniform age grid on J = [0, a_max] with composite-trapezoid quadrature
/// weights. The weights are the single quadrature rule shared by the renewal
/// solve, the birth operator and the spectral characteristic function.
struct AgeGrid {
    double a_max = 0.0;
    int n_age = 0;
    std::vector<double> nodes;    // n_age + 1 nodes, nodes[0] = 0
    std::vector<double> weights;  // trapezoid weights, sum to a_max

    AgeGrid() = default;

    AgeGrid(double a_max_, int n_age_) : a_max(a_max_), n_age(n_age_) {
        if (!(a_max > 0.0) || !std::isfinite(a_max))
            throw ValidationError("model.a_max: must be a positive finite real, got " +
                                  std::to_string(a_max));
        if (n_age < 1)
            throw ValidationError("model.n_age: must be a positive integer, got " +
                                  std::to_string(n_age));
        nodes.resize(n_age + 1);
        weights.resize(n_age + 1);
        const double da = a_max / n_age;
        for (int i = 0; i <= n_age; ++i) {
            nodes[i] = i * da;
            weights[i] = (i == 0 || i == n_age) ? 0.5 * da : da;
        }
        nodes[n_age] = a_max;
    }

    double spacing() const { return a_max / n_age; }
};

enum class BcKind { dirichlet, neumann, robin };

inline std::string to_string(BcKind k) {
    switch (k) {
        case BcKind::dirichlet: return "dirichlet";
        case BcKind::neumann: return "neumann";
        default: return "robin";
    }
}

struct BoundaryCondition {
    BcKind kind = BcKind::dirichlet;
    double robin_coeff = 0.0;  // only used for robin
};

/// Spatial grid on [0, length]. Dirichlet uses interior vertex nodes,
/// Neumann and Robin use staggered cell centers.
struct SpaceGrid {
    double length = 0.0;
    int n_space = 0;
    double spacing = 0.0;
    BoundaryCondition bc;
    std::vector<double> nodes;  // n_space coordinates

    SpaceGrid() = default;

    SpaceGrid(double length_, int n_space_, BoundaryCondition bc_ = {})
        : length(length_), n_space(n_space_), bc(bc_) {
        if (!(length > 0.0) || !std::isfinite(length))
            throw ValidationError("model.length: must be a positive finite real");
        if (n_space < 1)
            throw ValidationError("model.n_space: must be a positive integer, got " +
                                  std::to_string(n_space));
        if (bc.kind == BcKind::robin && !(std::isfinite(bc.robin_coeff)))
            throw ValidationError("model.robin_coeff: must be finite");
        nodes.resize(n_space);
        if (bc.kind == BcKind::dirichlet) {
            spacing = length / (n_space + 1);
            for (int k = 0; k < n_space; ++k) nodes[k] = (k + 1) * spacing;
        } else {
            spacing = length / n_space;
            for (int k = 0; k < n_space; ++k) nodes[k] = (k + 0.5) * spacing;
        }
    }
};

}  // namespace agediff
