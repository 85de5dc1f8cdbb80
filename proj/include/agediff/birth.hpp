#pragma once

#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/grid.hpp"
#include "agediff/profile.hpp"

#include <vector>

namespace agediff {

/// The discretized birth law psi(0) = sum_j w_j beta(a_j) psi(a_j) with the
/// a = 0 quadrature term moved to the left side. beta acts as a multiplication
/// operator, so every solve here is elementwise. All modules that touch the
/// birth condition share this one quadrature rule.
struct BirthRule {
    std::vector<Vector> beta;  // beta(a_i, x_k) per age node
    std::vector<double> w;     // age quadrature weights
    Vector denom0;             // 1 - w_0 beta(0, .)

    BirthRule(const Coefficients& coeff, const AgeGrid& agrid, const SpaceGrid& sgrid) {
        const int n = agrid.n_age;
        const int ns = sgrid.n_space;
        beta.resize(n + 1);
        w = agrid.weights;
        for (int i = 0; i <= n; ++i) {
            beta[i].resize(ns);
            for (int k = 0; k < ns; ++k)
                beta[i](k) = detail::eval_checked(coeff.birth, "birth", agrid.nodes[i],
                                                  sgrid.nodes[k]);
        }
        denom0 = Vector::Ones(ns) - w[0] * beta[0];
        for (int k = 0; k < ns; ++k) {
            if (std::abs(denom0(k)) < 1e-12)
                throw NumericalError(
                    "birth solve is singular: w_0 * beta(0, x) reaches 1 at x index " +
                    std::to_string(k) + "; refine the age grid");
        }
    }

    /// Quadrature sum_j w_j beta_j psi_j over all nodes (node 0 included).
    Vector quadrature(const AgeProfile& psi) const {
        Vector acc = Vector::Zero(psi.n_space());
        for (size_t j = 0; j < beta.size(); ++j) acc += w[j] * beta[j].cwiseProduct(psi[(int)j]);
        return acc;
    }

    /// Birth vector from the nodes j >= 1, the a = 0 term solved implicitly:
    /// (1 - w_0 beta_0) B = sum_{j>=1} w_j beta_j psi_j.
    Vector solve_from_tail(const std::vector<Vector>& values) const {
        Vector acc = Vector::Zero(values.front().size());
        for (size_t j = 1; j < beta.size(); ++j) acc += w[j] * beta[j].cwiseProduct(values[j]);
        return acc.cwiseQuotient(denom0);
    }

    /// Defect of the birth condition for a given profile.
    Vector defect(const AgeProfile& psi) const { return psi[0] - quadrature(psi); }
};

}  // namespace agediff
