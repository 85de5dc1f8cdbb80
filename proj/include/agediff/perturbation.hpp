#pragma once

#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/grid.hpp"
#include "agediff/profile.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace agediff {

enum class PerturbationKind { none, age_kernel };

/// Bounded perturbation of the generator: a nonlocal age-kernel redistribution
///
///     (B phi)(a_i) = m(a_i) * sum_j w_j k(a_i, a_j) phi(a_j),
///
/// acting as a scalar on each spatial vector. Its operator norm on the
/// profile space is bounded by ||m||_inf ||k||_inf a_max.
struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::none;
    AgeFunc m;
    std::function<double(double, double)> k;
    bool positive = true;
    double strength = 1.0;  // gamma scaling applied on top of m

    bool is_none() const { return kind == PerturbationKind::none || strength == 0.0; }

    double m_at(double a) const { return strength * m(a); }

    void validate(const AgeGrid& agrid, bool positivity_mode) const {
        if (kind == PerturbationKind::none) return;
        if (!m || !k) throw ValidationError("perturbation: m and k must be set for age_kernel");
        for (int i = 0; i <= agrid.n_age; ++i) {
            const double mi = m_at(agrid.nodes[i]);
            if (!std::isfinite(mi))
                throw ValidationError("perturbation.m not finite at a=" +
                                      std::to_string(agrid.nodes[i]));
            for (int j = 0; j <= agrid.n_age; ++j) {
                const double kij = k(agrid.nodes[i], agrid.nodes[j]);
                if (!std::isfinite(kij))
                    throw ValidationError("perturbation.k not finite at (a=" +
                                          std::to_string(agrid.nodes[i]) +
                                          ", a'=" + std::to_string(agrid.nodes[j]) + ")");
                if (positive && positivity_mode && (mi < 0.0 || kij < 0.0))
                    throw ValidationError(
                        "perturbation flagged positive but m or k is negative at (a=" +
                        std::to_string(agrid.nodes[i]) + ", a'=" + std::to_string(agrid.nodes[j]) +
                        ")");
            }
        }
    }

    /// Upper bound ||m||_inf ||k||_inf a_max for the profile-space norm.
    double norm_bound(const AgeGrid& agrid) const {
        if (is_none()) return 0.0;
        double mmax = 0.0, kmax = 0.0;
        for (int i = 0; i <= agrid.n_age; ++i) {
            mmax = std::max(mmax, std::abs(m_at(agrid.nodes[i])));
            for (int j = 0; j <= agrid.n_age; ++j)
                kmax = std::max(kmax, std::abs(k(agrid.nodes[i], agrid.nodes[j])));
        }
        return mmax * kmax * agrid.a_max;
    }
};

/// B applied to a profile.
inline AgeProfile apply_perturbation(const PerturbationSpec& pert, const AgeGrid& agrid,
                                     const AgeProfile& phi) {
    check_grid_match(phi, agrid, "apply_perturbation");
    AgeProfile out(agrid.n_age, phi.n_space());
    if (pert.is_none()) return out;
    const int n = agrid.n_age;
    // Quadrature of the kernel against the profile, reused across rows when
    // the kernel is evaluated row by row.
    for (int i = 0; i <= n; ++i) {
        Vector acc = Vector::Zero(phi.n_space());
        for (int j = 0; j <= n; ++j)
            acc += agrid.weights[j] * pert.k(agrid.nodes[i], agrid.nodes[j]) * phi[j];
        out[i] = pert.m_at(agrid.nodes[i]) * acc;
    }
    return out;
}

}  // namespace agediff
