#pragma once

#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/grid.hpp"
#include "agediff/linalg.hpp"
#include "agediff/norms.hpp"
#include "agediff/spatial_operator.hpp"

#include <cmath>
#include <string>
#include <tuple>
#include <vector>

namespace agediff {

/// Discrete parabolic evolution operator Pi(a_i, a_j) as products of one-step
/// propagators. Everything is precomputed at build time; afterwards the cache
/// is read-only and safe to share across threads.
///
/// Each substep propagator factors the spatial mean of the mortality out of
/// the Crank-Nicolson solve:
///
///     P = exp(-mbar dt) * (I - dt/2 (A + mbar))^-1 (I + dt/2 (A + mbar))
///
/// Constant mortality shifts mu -> mu + c therefore multiply every step by
/// exactly exp(-c dt), which is what makes the lambda-shift reproduction and
/// the spectral-bound translation identities hold beyond discretization order.
class EvolutionCache {
public:
    EvolutionCache(const Coefficients& coeff, const AgeGrid& agrid, const SpaceGrid& sgrid,
                   int substeps = 4, NormSpec norms = {})
        : agrid_(agrid), sgrid_(sgrid), norms_(norms), substeps_(substeps) {
        if (substeps < 1)
            throw ValidationError("numerics.substeps: must be >= 1, got " + std::to_string(substeps));
        const int n = agrid.n_age;
        const int ns = sgrid.n_space;
        const double dt = agrid.spacing() / substeps;
        steps_.reserve(n);
        for (int i = 0; i < n; ++i) {
            Matrix step = Matrix::Identity(ns, ns);
            for (int s = 0; s < substeps; ++s) {
                const double a_mid = agrid.nodes[i] + (s + 0.5) * dt;
                double mbar = 0.0;
                for (int k = 0; k < ns; ++k) {
                    const double mu = detail::eval_checked(coeff.mortality, "mortality", a_mid,
                                                           sgrid.nodes[k]);
                    mbar += mu;
                }
                mbar /= ns;
                Coefficients shifted = coeff;
                const Field mu0 = coeff.mortality;
                shifted.mortality = [mu0, mbar](double a, double x) { return mu0(a, x) - mbar; };
                const Matrix a0 = assemble_spatial_operator(shifted, sgrid, a_mid).matrix;
                const Matrix lhs = Matrix::Identity(ns, ns) - 0.5 * dt * a0;
                Eigen::PartialPivLU<Matrix> lu(lhs);
                if (lu.rcond() < 1e-14)
                    throw StepConstructionError(
                        "Crank-Nicolson system is singular over [" + std::to_string(agrid.nodes[i]) +
                        ", " + std::to_string(agrid.nodes[i + 1]) +
                        "]; increase numerics.substeps");
                Matrix p = lu.solve(Matrix::Identity(ns, ns) + 0.5 * dt * a0);
                p *= std::exp(-mbar * dt);
                if (!all_finite(p))
                    throw StepConstructionError("propagator has non-finite entries over [" +
                                                std::to_string(agrid.nodes[i]) + ", " +
                                                std::to_string(agrid.nodes[i + 1]) +
                                                "]; increase numerics.substeps");
                step = p * step;
            }
            steps_.push_back(std::move(step));
        }
        // Prefix products Pi(a_i, 0), used by the birth operator and the
        // spectral characteristic function.
        pi0_.reserve(n + 1);
        pi0_.push_back(Matrix::Identity(ns, ns));
        for (int i = 0; i < n; ++i) pi0_.push_back(steps_[i] * pi0_.back());
    }

    const AgeGrid& agrid() const { return agrid_; }
    const SpaceGrid& sgrid() const { return sgrid_; }
    const NormSpec& norms() const { return norms_; }
    int substeps() const { return substeps_; }
    int n_age() const { return agrid_.n_age; }
    int n_space() const { return sgrid_.n_space; }

    /// One-step propagator from a_i to a_{i+1}.
    const Matrix& step(int i) const { return steps_.at(i); }

    /// Pi(a_i, 0), precomputed.
    const Matrix& pi_from_zero(int i) const { return pi0_.at(i); }

    void check_causal(int i, int j) const {
        if (j > i)
            throw CausalityError("evolution operators only go forward in age: requested Pi(a_" +
                                 std::to_string(i) + ", a_" + std::to_string(j) + ")");
        if (j < 0 || i > agrid_.n_age) throw ValidationError("age index out of range");
    }

    /// Pi(a_i, a_j) v by sequential step application.
    Vector apply_pi(int i, int j, const Vector& v) const {
        check_causal(i, j);
        Vector w = v;
        for (int k = j; k < i; ++k) w = steps_[k] * w;
        return w;
    }

    /// exp(-lambda (a_i - a_j)) Pi(a_i, a_j) v.
    Vector apply_pi_shifted(double lambda, int i, int j, const Vector& v) const {
        check_causal(i, j);
        return std::exp(-lambda * (agrid_.nodes[i] - agrid_.nodes[j])) * apply_pi(i, j, v);
    }

    /// Pi(a_i, a_j) as an explicit matrix.
    Matrix pi_matrix(int i, int j) const {
        check_causal(i, j);
        Matrix m = Matrix::Identity(n_space(), n_space());
        for (int k = j; k < i; ++k) m = steps_[k] * m;
        return m;
    }

private:
    AgeGrid agrid_;
    SpaceGrid sgrid_;
    NormSpec norms_;
    int substeps_;
    std::vector<Matrix> steps_;
    std::vector<Matrix> pi0_;
};

inline EvolutionCache build_cache(const Coefficients& coeff, const AgeGrid& agrid,
                                  const SpaceGrid& sgrid, int substeps = 4, NormSpec norms = {}) {
    return EvolutionCache(coeff, agrid, sgrid, substeps, norms);
}

/// Sample of operator norms with a fitted exponential envelope
/// ||Pi(a_i, a_j)|| <= m0 exp(varpi (a_i - a_j)).
struct EstimateFit {
    double m0 = 1.0;
    double varpi = 0.0;
    std::vector<std::tuple<double, double, double>> samples;  // (a_i, a_j, norm)

    bool envelope_holds(double a, double sigma, double norm, double slack = 1e-9) const {
        return norm <= m0 * std::exp(varpi * (a - sigma)) * (1.0 + slack);
    }
};

/// Least-squares log-linear fit of the norm samples, with m0 rounded up so the
/// envelope holds on every sampled pair. Exhaustive over all (i, j) pairs on
/// small grids, strided start ages otherwise.
inline EstimateFit fit_estimate(const EvolutionCache& cache, int max_start_ages = 24) {
    const int n = cache.n_age();
    EstimateFit fit;
    std::vector<double> lags, lognorms;

    const bool exhaustive = n <= 96;
    const int stride = exhaustive ? 1 : std::max(1, n / max_start_ages);
    for (int j = 0; j < n; j += stride) {
        Matrix m = Matrix::Identity(cache.n_space(), cache.n_space());
        for (int i = j + 1; i <= n; ++i) {
            m = cache.step(i - 1) * m;
            const double norm = cache.norms().operator_norm(m, cache.sgrid());
            fit.samples.emplace_back(cache.agrid().nodes[i], cache.agrid().nodes[j], norm);
            if (norm > 0.0) {
                lags.push_back(cache.agrid().nodes[i] - cache.agrid().nodes[j]);
                lognorms.push_back(std::log(norm));
            }
        }
    }
    if (!lags.empty()) {
        auto [slope, intercept] = linear_fit(lags, lognorms);
        fit.varpi = slope;
        fit.m0 = std::exp(intercept);
    }
    // Upward rounding: a valid envelope over all samples, and m0 >= 1 because
    // Pi(a_i, a_i) = I.
    double m0 = std::max(fit.m0, 1.0);
    for (const auto& [a, sigma, norm] : fit.samples)
        m0 = std::max(m0, norm * std::exp(-fit.varpi * (a - sigma)));
    fit.m0 = m0;
    return fit;
}

}  // namespace agediff
