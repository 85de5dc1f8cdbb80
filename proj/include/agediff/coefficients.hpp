#pragma once

#include "agediff/errors.hpp"
#include "agediff/grid.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>

namespace agediff {

/// Scalar coefficient field over (age, position).
using Field = std::function<double(double, double)>;

/// Model coefficients. Death is folded into the spatial operator; birth acts
/// as a multiplication operator per age. With diffusion_enabled = false the
/// spatial operator reduces to -diag(mortality), which is how the scalar
/// (transport-reaction) presets are realized.
struct Coefficients {
    Field diffusion;
    Field mortality;
    Field birth;
    bool diffusion_enabled = true;
    double d_min = 1e-8;
    std::string smoothness_note;  // coefficients are assumed smooth by contract
};

inline Field constant_field(double value) {
    return [value](double, double) { return value; };
}

/// base + amplitude * exp(-(a-a0)^2/(2 sa^2) - (x-x0)^2/(2 sx^2)).
/// A non-positive width disables that direction.
inline Field gaussian_bump_field(double base, double amplitude, double age_center,
                                 double age_width, double space_center, double space_width) {
    return [=](double a, double x) {
        double e = 0.0;
        if (age_width > 0.0) {
            const double t = (a - age_center) / age_width;
            e += 0.5 * t * t;
        }
        if (space_width > 0.0) {
            const double t = (x - space_center) / space_width;
            e += 0.5 * t * t;
        }
        return base + amplitude * std::exp(-e);
    };
}

/// (c0 + c1 a + c2 a^2) * (k0 + k1 x + k2 x^2).
inline Field separable_field(double c0, double c1, double c2, double k0, double k1, double k2) {
    return [=](double a, double x) { return (c0 + c1 * a + c2 * a * a) * (k0 + k1 * x + k2 * x * x); };
}

/// Scalar function of age (perturbation ingredients).
using AgeFunc = std::function<double(double)>;

inline AgeFunc constant_age_func(double value) {
    return [value](double) { return value; };
}

inline AgeFunc gaussian_age_func(double base, double amplitude, double center, double width) {
    return [=](double a) {
        if (width <= 0.0) return base + amplitude;
        const double t = (a - center) / width;
        return base + amplitude * std::exp(-0.5 * t * t);
    };
}

inline AgeFunc poly_age_func(double c0, double c1, double c2) {
    return [=](double a) { return c0 + c1 * a + c2 * a * a; };
}

/// Checks a coefficient on every (age node, space node) pair; throws naming
/// the offending grid point.
inline void check_field_finite(const Field& f, const std::string& name, const AgeGrid& agrid,
                               const SpaceGrid& sgrid) {
    for (int i = 0; i <= agrid.n_age; ++i) {
        for (int k = 0; k < sgrid.n_space; ++k) {
            const double v = f(agrid.nodes[i], sgrid.nodes[k]);
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << name << " is not finite at grid point (a=" << agrid.nodes[i]
                   << ", x=" << sgrid.nodes[k] << "): " << v;
                throw InvalidCoefficientError(os.str());
            }
        }
    }
}

}  // namespace agediff
