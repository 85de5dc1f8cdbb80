#pragma once

#include "agediff/birth.hpp"
#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/evolution.hpp"
#include "agediff/generator.hpp"
#include "agediff/perturbation.hpp"
#include "agediff/profile.hpp"
#include "agediff/resolvent.hpp"
#include "agediff/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace agediff {

/// Spectral radius r(Q_lambda) of the birth-feedback operator: power
/// iteration in positivity mode, dense eigensolve otherwise or on stagnation.
inline double characteristic_radius(double lambda, const EvolutionCache& cache,
                                    const Coefficients& coeff, bool positivity_mode = true,
                                    double tol = 1e-12, int max_iters = 10000) {
    const Matrix q = birth_matrix(cache, coeff, lambda);
    if (positivity_mode) {
        auto pi = power_iteration(q, tol, max_iters);
        if (pi.converged) {
            const double resid = (q * pi.vector - pi.vector.dot(q * pi.vector) * pi.vector).norm();
            if (resid <= 1e-9 * std::max(1.0, pi.radius)) return pi.radius;
        }
    }
    double r = 0.0;
    for (const auto& ev : eigenvalues_dense(q)) r = std::max(r, std::abs(ev));
    return r;
}

struct SpectralBoundOptions {
    double tol_char = 1e-10;  // |r(Q_s) - 1| at the returned root
    int max_bisect = 200;
    bool positivity_mode = true;
};

struct SpectralBoundResult {
    std::optional<double> s_bound;
    std::vector<std::pair<double, double>> char_values;  // (lambda, r(Q_lambda)) evaluations
    std::pair<double, double> bracket{0.0, 0.0};
};

/// Default bisection bracket [-||mu||_inf - 1, ||beta||_inf a_max + 1].
inline std::pair<double, double> default_bracket(const EvolutionCache& cache,
                                                 const Coefficients& coeff) {
    double mu_max = 0.0, beta_max = 0.0;
    for (int i = 0; i <= cache.n_age(); ++i) {
        for (int k = 0; k < cache.n_space(); ++k) {
            mu_max = std::max(mu_max,
                              std::abs(coeff.mortality(cache.agrid().nodes[i], cache.sgrid().nodes[k])));
            beta_max = std::max(beta_max,
                                std::abs(coeff.birth(cache.agrid().nodes[i], cache.sgrid().nodes[k])));
        }
    }
    return {-mu_max - 1.0, beta_max * cache.agrid().a_max + 1.0};
}

/// Root of r(Q_lambda) = 1: bisection plus secant polish. Returns none when
/// r - 1 does not change sign on the bracket (the spectral bound may be
/// -infinity in that case).
inline SpectralBoundResult spectral_bound(const EvolutionCache& cache, const Coefficients& coeff,
                                          std::optional<std::pair<double, double>> bracket = {},
                                          const SpectralBoundOptions& opts = {}) {
    SpectralBoundResult res;
    auto [lo, hi] = bracket ? *bracket : default_bracket(cache, coeff);
    if (!(lo < hi)) throw ValidationError("spectral_bound: bracket must satisfy lo < hi");
    res.bracket = {lo, hi};

    auto g = [&](double lam) {
        const double r = characteristic_radius(lam, cache, coeff, opts.positivity_mode);
        res.char_values.emplace_back(lam, r);
        return r - 1.0;
    };

    double glo = g(lo), ghi = g(hi);
    if (!std::isfinite(glo) || !std::isfinite(ghi))
        throw NumericalError("spectral_bound: characteristic function not finite on the bracket");
    if (glo * ghi > 0.0) return res;  // none-found

    for (int it = 0; it < opts.max_bisect && (hi - lo) > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (std::abs(gm) <= opts.tol_char) {
            res.s_bound = mid;
            return res;
        }
        if (glo * gm <= 0.0) {
            hi = mid;
            ghi = gm;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    // Secant polish inside the final bracket.
    double x0 = lo, f0 = glo, x1 = hi, f1 = ghi;
    for (int it = 0; it < 60 && std::abs(f1) > opts.tol_char; ++it) {
        if (f1 == f0) break;
        double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(x2 >= lo && x2 <= hi)) x2 = 0.5 * (lo + hi);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = g(x1);
    }
    res.s_bound = x1;
    if (std::abs(f1) > opts.tol_char)
        throw NumericalError("spectral_bound: root polish stalled, |r - 1| = " +
                             std::to_string(std::abs(f1)));
    return res;
}

/// Positive eigenvector at the spectral bound: psi(0) is the Perron fixed
/// vector of Q_s, the profile follows the shifted propagator, normalized to
/// unit profile norm. Reports the top two eigenvalues of Q_s when the
/// peripheral spectrum is degenerate.
inline AgeProfile principal_eigenvector(double s, const EvolutionCache& cache,
                                        const Coefficients& coeff, double tol_char = 1e-8) {
    const Matrix q = birth_matrix(cache, coeff, s);
    const auto eigs = eigenvalues_dense(q);
    const double top = eigs.empty() ? 0.0 : std::abs(eigs[0]);
    if (std::abs(top - 1.0) > tol_char)
        throw ValidationError("principal_eigenvector: r(Q_s) = " + std::to_string(top) +
                              " is not 1 at s = " + std::to_string(s));
    if (eigs.size() > 1) {
        double second = 0.0;
        for (size_t i = 1; i < eigs.size(); ++i) second = std::max(second, std::abs(eigs[i]));
        if (second >= top * (1.0 - 1e-10)) {
            // No spectral gap: power iteration cannot isolate the positive
            // fixed vector.
            throw DegenerateSpectrumError(top, second,
                                          "degenerate peripheral spectrum of Q_s: |l1| = " +
                                              std::to_string(top) + ", |l2| = " +
                                              std::to_string(second));
        }
    }
    auto pi = power_iteration(q, 1e-13, 20000);
    if (!pi.converged)
        throw NumericalError("principal_eigenvector: power iteration did not converge");
    Vector psi0 = pi.vector;
    if (psi0.sum() < 0.0) psi0 = -psi0;

    detail::ShiftFactors sf(s, cache.agrid().spacing());
    AgeProfile psi(cache.n_age(), cache.n_space());
    psi[0] = psi0;
    for (int i = 1; i <= cache.n_age(); ++i) {
        const double fac = (i == 1) ? sf.c1 : sf.rho;
        psi[i] = fac * (cache.step(i - 1) * psi[i - 1]);
    }
    const double norm = profile_norm(psi, cache.agrid(), cache.sgrid(), cache.norms());
    if (!(norm > 0.0)) throw NumericalError("principal_eigenvector: zero eigenvector");
    for (auto& v : psi.values) v /= norm;
    return psi;
}

struct CompactnessLevel {
    int n_age = 0;
    int n_space = 0;
    int halfplane_count = 0;
    double decay_exponent = 0.0;
};

struct CompactnessDiagnostics {
    double lambda_ref = 0.0;
    double threshold = 0.0;
    std::vector<double> singular_values;  // finest level, decreasing
    std::vector<CompactnessLevel> levels;
    double decay_exponent = 0.0;  // finest level

    std::vector<std::pair<int, int>> halfplane_counts() const {
        std::vector<std::pair<int, int>> out;
        for (const auto& l : levels) out.emplace_back(l.n_age, l.halfplane_count);
        return out;
    }
};

/// Everything needed to rebuild an instance on refined grids.
struct InstanceSpec {
    double a_max = 1.0;
    double length = 1.0;
    BoundaryCondition bc;
    Coefficients coeff;
    int substeps = 4;
    NormSpec norms;
    bool positivity_mode = true;
};

/// Power-law fit of log sigma_k against log k over the top half of the
/// singular spectrum.
inline double singular_decay_exponent(const std::vector<double>& sv) {
    std::vector<double> logk, logs;
    const size_t half = std::max<size_t>(2, sv.size() / 2);
    for (size_t k = 0; k < half && k < sv.size(); ++k) {
        if (sv[k] <= 0.0) break;
        logk.push_back(std::log(static_cast<double>(k + 1)));
        logs.push_back(std::log(sv[k]));
    }
    if (logk.size() < 2) return 0.0;
    return linear_fit(logk, logs).first;
}

/// Discrete proxies for compact resolvent / pure point spectrum: per
/// refinement, the count of eigenvalues right of a threshold and the decay of
/// the resolvent singular values at a reference lambda. The reference lambda
/// and threshold come from the spectral bound on the finest level.
inline CompactnessDiagnostics compactness_probe(const InstanceSpec& spec,
                                                const std::vector<std::pair<int, int>>& refinements,
                                                long dim_limit = 20000) {
    if (refinements.empty()) throw ValidationError("compactness_probe: no refinements");
    CompactnessDiagnostics diag;

    // Reference lambda from the finest refinement.
    {
        const auto [n_age, n_space] = refinements.back();
        AgeGrid ag(spec.a_max, n_age);
        SpaceGrid sg(spec.length, n_space, spec.bc);
        EvolutionCache cache(spec.coeff, ag, sg, spec.substeps, spec.norms);
        auto sb = spectral_bound(cache, spec.coeff, {},
                                 SpectralBoundOptions{1e-10, 200, spec.positivity_mode});
        const auto br = default_bracket(cache, spec.coeff);
        diag.lambda_ref = sb.s_bound ? *sb.s_bound + 1.0 : 0.5 * (br.first + br.second);
        diag.threshold = sb.s_bound ? *sb.s_bound - 5.0 : diag.lambda_ref - 6.0;
    }

    for (const auto& [n_age, n_space] : refinements) {
        AgeGrid ag(spec.a_max, n_age);
        SpaceGrid sg(spec.length, n_space, spec.bc);
        EvolutionCache cache(spec.coeff, ag, sg, spec.substeps, spec.norms);
        GeneratorMatrix gen = assemble_generator(cache, spec.coeff, {}, dim_limit);

        CompactnessLevel level;
        level.n_age = n_age;
        level.n_space = n_space;
        for (const auto& ev : gen.eigenvalues())
            if (ev.real() > diag.threshold) ++level.halfplane_count;

        // Singular values of the resolvent are the reciprocals of those of
        // (lambda - A), reversed.
        Matrix shifted = diag.lambda_ref * Matrix::Identity(gen.dim(), gen.dim()) - gen.matrix();
        std::vector<double> sv = singular_values_dense(shifted);
        std::vector<double> res_sv(sv.size());
        for (size_t k = 0; k < sv.size(); ++k) {
            if (sv[sv.size() - 1 - k] <= 0.0)
                throw NearSpectrumError(diag.lambda_ref, std::numeric_limits<double>::infinity(),
                                        "reference lambda hits the spectrum in compactness probe");
            res_sv[k] = 1.0 / sv[sv.size() - 1 - k];
        }
        level.decay_exponent = singular_decay_exponent(res_sv);
        diag.levels.push_back(level);
        diag.singular_values = std::move(res_sv);
    }
    diag.decay_exponent = diag.levels.back().decay_exponent;
    return diag;
}

struct ComparisonOutcome {
    std::string name;
    bool pass = false;
    bool skipped = false;
    double margin = 0.0;
    std::string detail;
};

namespace detail {

inline double min_entry(const AgeProfile& p) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& v : p.values) m = std::min(m, v.size() ? v.minCoeff() : m);
    return m;
}

}  // namespace detail

/// Corollary-style comparisons between A and A + B for positive B:
/// (a) spectral bound monotonicity, (b) entrywise resolvent domination at the
/// given lambdas, (c) entrywise semigroup domination at sampled times. Each
/// outcome carries the smallest observed margin; pass means margin >= -1e-10.
inline std::vector<ComparisonOutcome> comparison_suite(const EvolutionCache& cache,
                                                       const Coefficients& coeff,
                                                       const PerturbationSpec& pert,
                                                       const std::vector<double>& lambdas,
                                                       double margin_tol = 1e-10) {
    if (!pert.is_none()) pert.validate(cache.agrid(), /*positivity_mode=*/true);
    std::vector<ComparisonOutcome> out;

    // (a) s(A) <= s(A + B), both from the dense generator (the perturbed
    // operator has no scalar characteristic function).
    GeneratorMatrix gen_base = assemble_generator(cache, coeff);
    GeneratorMatrix gen_pert = assemble_generator(cache, coeff, pert);
    const double s_base = gen_base.eigenvalues().front().real();
    const double s_pert = gen_pert.eigenvalues().front().real();
    out.push_back({"spectral_bound_monotone", s_pert - s_base >= -margin_tol, false,
                   s_pert - s_base,
                   "s(A) = " + std::to_string(s_base) + ", s(A+B) = " + std::to_string(s_pert)});

    // (b) resolvent domination on the all-ones profile.
    const AgeProfile ones = AgeProfile::constant(cache.agrid(), Vector::Ones(cache.n_space()));
    for (double lam : lambdas) {
        ComparisonOutcome oc;
        oc.name = "resolvent_domination@lambda=" + std::to_string(lam);
        if (lam <= s_pert) {
            oc.skipped = true;
            oc.detail = "skipped: lambda <= s(A+B) = " + std::to_string(s_pert);
        } else {
            const AgeProfile base = apply_resolvent(ones, lam, cache, coeff).psi;
            const AgeProfile pertd =
                apply_perturbed_resolvent(ones, lam, cache, coeff, pert).result.psi;
            oc.margin = detail::min_entry(pertd - base);
            oc.pass = oc.margin >= -margin_tol;
        }
        out.push_back(oc);
    }

    // (c) semigroup domination at t in {da, a_max/2, a_max}.
    const double da = cache.agrid().spacing();
    const double a_max = cache.agrid().a_max;
    std::vector<double> times = {da, std::round(0.5 * a_max / da) * da, a_max};
    const double t_max = *std::max_element(times.begin(), times.end());
    Trajectory base = evolve(ones, t_max, cache, coeff);
    Trajectory pertd = evolve_perturbed(ones, t_max, cache, coeff, pert);
    for (double t : times) {
        const int k = static_cast<int>(std::llround(t / da));
        ComparisonOutcome oc;
        oc.name = "semigroup_domination@t=" + std::to_string(t);
        oc.margin = detail::min_entry(pertd.profiles[k] - base.profiles[k]);
        oc.pass = oc.margin >= -margin_tol;
        out.push_back(oc);
    }
    return out;
}

/// Full spectral report for the CLI and the verification suites.
struct SpectralReport {
    std::optional<double> s_bound;
    std::pair<double, double> bracket{0.0, 0.0};
    std::vector<std::complex<double>> eigenvalues;
    std::optional<AgeProfile> principal_vector;
    double principal_residual = 0.0;
    std::vector<std::pair<double, double>> char_values;
    std::optional<CompactnessDiagnostics> compactness;
    std::vector<ComparisonOutcome> comparisons;
};

}  // namespace agediff
