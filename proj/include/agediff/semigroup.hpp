#pragma once

#include "agediff/birth.hpp"
#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/evolution.hpp"
#include "agediff/perturbation.hpp"
#include "agediff/profile.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace agediff {

/// Orbit of the Cauchy problem sampled at the characteristic-aligned times
/// t_k = k * da. birth_history[k] is u(t_k, 0); the k = 0 entry is the birth
/// quadrature of u0, which need not satisfy the birth condition itself.
struct Trajectory {
    std::vector<double> times;
    std::vector<AgeProfile> profiles;
    std::vector<Vector> birth_history;

    const AgeProfile& final() const { return profiles.back(); }
};

namespace detail {

inline int aligned_steps(double t_final, double da) {
    if (t_final < 0.0) throw ValidationError("t_final must be nonnegative, got " +
                                             std::to_string(t_final));
    const double ratio = t_final / da;
    const int k = static_cast<int>(std::llround(ratio));
    if (std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        throw ValidationError("t_final = " + std::to_string(t_final) +
                              " is not a multiple of the age spacing " + std::to_string(da));
    return k;
}

/// One characteristic-aligned step of the unperturbed semigroup: transport
/// every age node forward through its propagator, then close the birth law.
inline AgeProfile semigroup_step(const EvolutionCache& cache, const BirthRule& birth,
                                 const AgeProfile& v) {
    const int n = cache.n_age();
    AgeProfile w(n, cache.n_space());
    for (int i = n; i >= 1; --i) w[i] = cache.step(i - 1) * v[i - 1];
    w[0] = birth.solve_from_tail(w.values);
    return w;
}

}  // namespace detail

/// Characteristics solution of the full model: u(t,a) = Pi(a, a-t) u0(a-t)
/// above the characteristic through the origin and Pi(a, 0) B(t-a) below it,
/// with the renewal equation for B closed by the shared trapezoid rule.
inline Trajectory evolve(const AgeProfile& u0, double t_final, const EvolutionCache& cache,
                         const Coefficients& coeff) {
    check_grid_match(u0, cache.agrid(), "evolve");
    if (u0.n_space() != cache.n_space()) throw ValidationError("evolve: spatial dimension mismatch");
    const int k_steps = detail::aligned_steps(t_final, cache.agrid().spacing());
    BirthRule birth(coeff, cache.agrid(), cache.sgrid());

    Trajectory traj;
    traj.times.reserve(k_steps + 1);
    traj.profiles.reserve(k_steps + 1);
    traj.birth_history.reserve(k_steps + 1);
    traj.times.push_back(0.0);
    traj.profiles.push_back(u0);
    traj.birth_history.push_back(birth.quadrature(u0));

    for (int k = 1; k <= k_steps; ++k) {
        traj.profiles.push_back(detail::semigroup_step(cache, birth, traj.profiles.back()));
        traj.times.push_back(k * cache.agrid().spacing());
        traj.birth_history.push_back(traj.profiles.back()[0]);
    }
    return traj;
}

/// Perturbed orbit via first-order splitting with a trapezoidal Duhamel
/// correction per step:
///
///   v* = S v_k,   v_{k+1} = v* + (da/2) (S (B v_k) + B v*)
///
/// on the age nodes >= 1, with the birth law re-closed afterwards. For
/// positive data and positive B every term is entrywise monotone, so the
/// perturbed orbit dominates the unperturbed one exactly.
inline Trajectory evolve_perturbed(const AgeProfile& u0, double t_final,
                                   const EvolutionCache& cache, const Coefficients& coeff,
                                   const PerturbationSpec& pert) {
    if (pert.is_none()) return evolve(u0, t_final, cache, coeff);
    check_grid_match(u0, cache.agrid(), "evolve_perturbed");
    pert.validate(cache.agrid(), /*positivity_mode=*/false);
    const int k_steps = detail::aligned_steps(t_final, cache.agrid().spacing());
    const double da = cache.agrid().spacing();
    BirthRule birth(coeff, cache.agrid(), cache.sgrid());

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.profiles.push_back(u0);
    traj.birth_history.push_back(birth.quadrature(u0));

    for (int k = 1; k <= k_steps; ++k) {
        const AgeProfile& v = traj.profiles.back();
        AgeProfile vstar = detail::semigroup_step(cache, birth, v);
        AgeProfile sg = detail::semigroup_step(cache, birth, apply_perturbation(pert, cache.agrid(), v));
        AgeProfile gstar = apply_perturbation(pert, cache.agrid(), vstar);
        AgeProfile w(cache.n_age(), cache.n_space());
        for (int i = 1; i <= cache.n_age(); ++i)
            w[i] = vstar[i] + 0.5 * da * (sg[i] + gstar[i]);
        w[0] = birth.solve_from_tail(w.values);
        traj.profiles.push_back(std::move(w));
        traj.times.push_back(k * da);
        traj.birth_history.push_back(traj.profiles.back()[0]);
    }
    return traj;
}

/// Defect of the discrete mild-solution relation certifying (psi, zeta) as a
/// member of the discrete dom(A) with A psi = zeta:
///
///   max_i || psi_i - Pi(a_i,0) psi_0 + sum_{j<=i} w_ij Pi(a_i,a_j) zeta_j ||
///   + || psi_0 - sum_j w_j beta_j psi_j ||
///
/// evaluated by the step-consistent recursion (first age interval rectangle,
/// the rest trapezoid) so that resolvent outputs certify to solver precision
/// rather than discretization order.
inline double generator_residual(const AgeProfile& psi, const AgeProfile& zeta,
                                 const EvolutionCache& cache, const Coefficients& coeff) {
    check_grid_match(psi, cache.agrid(), "generator_residual");
    check_same_shape(psi, zeta, "generator_residual");
    const int n = cache.n_age();
    const double da = cache.agrid().spacing();
    BirthRule birth(coeff, cache.agrid(), cache.sgrid());

    double max_defect = 0.0;
    Vector p = psi[0];
    for (int i = 1; i <= n; ++i) {
        if (i == 1)
            p = cache.step(0) * p - da * zeta[1];
        else
            p = cache.step(i - 1) * (p - 0.5 * da * zeta[i - 1]) - 0.5 * da * zeta[i];
        max_defect = std::max(max_defect, cache.norms().norm(psi[i] - p, cache.sgrid()));
    }
    const double birth_defect = cache.norms().norm(birth.defect(psi), cache.sgrid());
    return max_defect + birth_defect;
}

/// Discrete Laplace transform sum_k' da e^{-lambda t_k} u(t_k) of a stored
/// trajectory (trapezoid in time).
inline AgeProfile laplace_transform(const Trajectory& traj, double lambda) {
    if (traj.profiles.empty()) throw ValidationError("laplace_transform: empty trajectory");
    const size_t m = traj.profiles.size();
    AgeProfile acc(traj.profiles.front().n_nodes() - 1, traj.profiles.front().n_space());
    for (size_t k = 0; k < m; ++k) {
        const double dt = (k + 1 < m ? traj.times[k + 1] : traj.times[k]) -
                          (k > 0 ? traj.times[k - 1] : traj.times[0]);
        const double weight = 0.5 * dt * std::exp(-lambda * traj.times[k]);
        for (int i = 0; i < acc.n_nodes(); ++i) acc[i] += weight * traj.profiles[k][i];
    }
    return acc;
}

/// Residual of the discrete Duhamel identity at the final trajectory time:
///
///   u_pert(T) - u(T) - sum_k' da e^{(T - t_k) A} B u_pert(t_k)
///
/// measured in the profile norm. First-order in da by construction.
inline double duhamel_residual(const AgeProfile& u0, double t_final, const EvolutionCache& cache,
                               const Coefficients& coeff, const PerturbationSpec& pert) {
    BirthRule birth(coeff, cache.agrid(), cache.sgrid());
    Trajectory up = evolve_perturbed(u0, t_final, cache, coeff, pert);
    Trajectory u = evolve(u0, t_final, cache, coeff);
    const size_t m = up.profiles.size();
    const double da = cache.agrid().spacing();
    AgeProfile acc(cache.n_age(), cache.n_space());
    for (size_t k = 0; k < m; ++k) {
        if (k > 0) acc = detail::semigroup_step(cache, birth, acc);
        const double theta = (k == 0 || k + 1 == m) ? 0.5 : 1.0;
        AgeProfile g = apply_perturbation(pert, cache.agrid(), up.profiles[k]);
        for (int i = 0; i <= cache.n_age(); ++i) acc[i] += theta * da * g[i];
    }
    AgeProfile defect = up.profiles.back() - u.profiles.back() - acc;
    return profile_norm(defect, cache.agrid(), cache.sgrid(), cache.norms());
}

}  // namespace agediff
