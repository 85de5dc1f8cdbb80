#pragma once

#include "agediff/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#ifdef AGEDIFF_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace agediff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Eigenvalues of a general real square matrix.
inline std::vector<std::complex<double>> eigenvalues_dense(const Matrix& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<std::complex<double>> out(n);
#ifdef AGEDIFF_HAVE_LAPACKE
    Matrix work = a;  // dgeev overwrites
    std::vector<double> wr(n), wi(n);
    int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, wr.data(), wi.data(),
                             nullptr, 1, nullptr, 1);
    if (info != 0) throw NumericalError("dense eigensolve failed (dgeev info=" + std::to_string(info) + ")");
    for (int i = 0; i < n; ++i) out[i] = {wr[i], wi[i]};
#else
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
    for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()(i);
#endif
    std::sort(out.begin(), out.end(), [](auto x, auto y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });
    return out;
}

/// Singular values in decreasing order.
inline std::vector<double> singular_values_dense(const Matrix& a) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    std::vector<double> sv(std::min(m, n));
#ifdef AGEDIFF_HAVE_LAPACKE
    Matrix work = a;
    int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m, sv.data(), nullptr, 1,
                              nullptr, 1);
    if (info != 0) throw NumericalError("dense SVD failed (dgesdd info=" + std::to_string(info) + ")");
#else
    Eigen::BDCSVD<Matrix> svd(a);
    for (int i = 0; i < svd.singularValues().size(); ++i) sv[i] = svd.singularValues()(i);
#endif
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

struct PowerIterationResult {
    double radius = 0.0;
    Vector vector;
    bool converged = false;
    int iterations = 0;
};

/// Power iteration with deterministic all-ones start; suitable for
/// entrywise-nonnegative matrices where the Perron root is sought.
inline PowerIterationResult power_iteration(const Matrix& m, double tol = 1e-12,
                                            int max_iters = 10000) {
    PowerIterationResult res;
    const int n = static_cast<int>(m.rows());
    Vector v = Vector::Ones(n);
    v /= v.norm();
    double rayleigh = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        Vector w = m * v;
        rayleigh = v.dot(w);
        const double norm = w.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            // The matrix annihilates the iterate (e.g. b == 0): radius 0.
            res.radius = 0.0;
            res.vector = v;
            res.converged = std::isfinite(norm);
            res.iterations = it;
            return res;
        }
        w /= norm;
        const double delta = (w - v).norm();
        const double delta_flip = (w + v).norm();  // sign flips for negative dominant eigenvalue
        v = w;
        if (std::min(delta, delta_flip) < tol) {
            res.radius = std::abs(rayleigh);
            res.vector = v;
            res.converged = true;
            res.iterations = it;
            return res;
        }
    }
    res.radius = std::abs(rayleigh);
    res.vector = v;
    res.converged = false;
    res.iterations = max_iters;
    return res;
}

/// Spectral radius: power iteration first, dense eigensolve as fallback.
inline double spectral_radius(const Matrix& m, double tol = 1e-12, int max_iters = 10000) {
    if (m.rows() == 1) return std::abs(m(0, 0));
    auto pi = power_iteration(m, tol, max_iters);
    if (pi.converged) {
        // Power iteration measures |<v, Mv>|; confirm it is an eigenpair.
        const double resid = (m * pi.vector - pi.vector.dot(m * pi.vector) * pi.vector).norm();
        if (resid <= 1e-8 * std::max(1.0, pi.radius)) return pi.radius;
    }
    double r = 0.0;
    for (const auto& ev : eigenvalues_dense(m)) r = std::max(r, std::abs(ev));
    return r;
}

/// Least-squares slope/intercept of y against x.
inline std::pair<double, double> linear_fit(const std::vector<double>& x,
                                            const std::vector<double>& y) {
    const size_t n = x.size();
    if (n == 0 || y.size() != n) throw ValidationError("linear_fit: size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) return {0.0, sy / n};
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    return {slope, intercept};
}

}  // namespace agediff
