#pragma once

#include "agediff/birth.hpp"
#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/evolution.hpp"
#include "agediff/linalg.hpp"
#include "agediff/perturbation.hpp"
#include "agediff/profile.hpp"

#include <complex>
#include <string>
#include <vector>

namespace agediff {

/// Dense embodiment of the discrete generator, assembled from the same step
/// propagators and birth quadrature as the resolvent module so the two agree
/// to solver precision. The birth row is eliminated: the matrix acts on the
/// age nodes 1..n_age (dim = n_age * n_space) and node 0 is reconstructed
/// from the birth law. Internally the operator is the pencil pair (M, N) with
///
///   row 1:     (M v)_1 = v_1,                (N v)_1 = (S_1 fold(v) - v_1)/da
///   row i>=2:  (M v)_i = (v_i + S_i v_{i-1})/2,  (N v)_i = (S_i v_{i-1} - v_i)/da
///
/// and the generator matrix is A = M^-1 N (plus M^-1 (M B) for perturbations).
/// The resolvent construction solves (lambda M - N) psi = M phi, hence
/// (lambda I - A) psi = phi exactly.
class GeneratorMatrix {
public:
    GeneratorMatrix(int n_age, int n_space, Matrix mass, Matrix op, std::vector<Vector> fold)
        : n_age_(n_age),
          n_space_(n_space),
          mass_(std::move(mass)),
          op_(std::move(op)),
          fold_(std::move(fold)) {
        // Block forward substitution for A = M^-1 N: M is block lower
        // bidiagonal with diagonal blocks I, I/2, ..., I/2.
        a_ = Matrix::Zero(dim(), dim());
        a_.topRows(n_space_) = op_.topRows(n_space_);
        for (int bi = 1; bi < n_age_; ++bi) {
            const Matrix coupling = 2.0 * mass_.block(bi * n_space_, (bi - 1) * n_space_,
                                                      n_space_, n_space_);
            a_.middleRows(bi * n_space_, n_space_) =
                2.0 * op_.middleRows(bi * n_space_, n_space_) -
                coupling * a_.middleRows((bi - 1) * n_space_, n_space_);
        }
    }

    int n_age() const { return n_age_; }
    int n_space() const { return n_space_; }
    long dim() const { return static_cast<long>(n_age_) * n_space_; }

    const Matrix& matrix() const { return a_; }
    const Matrix& mass() const { return mass_; }
    const Matrix& op() const { return op_; }

    /// Stacks age nodes 1..n_age of a profile.
    Vector reduce(const AgeProfile& psi) const {
        Vector v(dim());
        for (int i = 1; i <= n_age_; ++i) v.segment((i - 1) * n_space_, n_space_) = psi[i];
        return v;
    }

    /// Rebuilds a full profile; node 0 comes from the eliminated birth row.
    AgeProfile extend(const Vector& v) const {
        AgeProfile psi(n_age_, n_space_);
        Vector node0 = Vector::Zero(n_space_);
        for (int i = 1; i <= n_age_; ++i) {
            psi[i] = v.segment((i - 1) * n_space_, n_space_);
            node0 += fold_[i].cwiseProduct(psi[i]);
        }
        psi[0] = node0;
        return psi;
    }

    Vector apply(const Vector& v) const { return a_ * v; }
    Vector apply_shifted(double lambda, const Vector& v) const { return lambda * v - a_ * v; }

    std::vector<std::complex<double>> eigenvalues() const { return eigenvalues_dense(a_); }

private:
    int n_age_;
    int n_space_;
    Matrix mass_;
    Matrix op_;
    Matrix a_;
    std::vector<Vector> fold_;  // fold_[j] for j = 1..n_age (index 0 unused)
};

/// Assembles the discrete generator for A (+ B when a perturbation is given).
inline GeneratorMatrix assemble_generator(const EvolutionCache& cache, const Coefficients& coeff,
                                          const PerturbationSpec& pert = {},
                                          long dim_limit = 20000) {
    const int n = cache.n_age();
    const int ns = cache.n_space();
    const long full_dim = static_cast<long>(n + 1) * ns;
    if (full_dim > dim_limit)
        throw SizeLimitError("generator dimension " + std::to_string(full_dim) + " exceeds " +
                             std::to_string(dim_limit) +
                             "; use the characteristic-function path instead");
    const double da = cache.agrid().spacing();
    BirthRule birth(coeff, cache.agrid(), cache.sgrid());

    std::vector<Vector> fold(n + 1);
    fold[0] = Vector::Zero(ns);
    for (int j = 1; j <= n; ++j)
        fold[j] = (birth.w[j] * birth.beta[j]).cwiseQuotient(birth.denom0);

    const long dim = static_cast<long>(n) * ns;
    Matrix mass = Matrix::Zero(dim, dim);
    Matrix op = Matrix::Zero(dim, dim);
    auto block = [&](Matrix& m, int bi, int bj) {
        return m.block((bi - 1) * ns, (bj - 1) * ns, ns, ns);
    };

    mass.topLeftCorner(ns, ns) = Matrix::Identity(ns, ns);
    block(op, 1, 1) -= Matrix::Identity(ns, ns) / da;
    for (int j = 1; j <= n; ++j)
        block(op, 1, j) += (cache.step(0) * fold[j].asDiagonal()) / da;
    for (int i = 2; i <= n; ++i) {
        block(mass, i, i) = 0.5 * Matrix::Identity(ns, ns);
        block(mass, i, i - 1) = 0.5 * cache.step(i - 1);
        block(op, i, i) -= Matrix::Identity(ns, ns) / da;
        block(op, i, i - 1) += cache.step(i - 1) / da;
    }

    if (!pert.is_none()) {
        pert.validate(cache.agrid(), /*positivity_mode=*/false);
        // Diagonal blocks of B with the node-0 column folded through the
        // birth law: B~[i][j] = m_i k_ij w_j I + m_i k_i0 w_0 diag(fold_j).
        auto bblock = [&](int i, int j) -> Vector {
            const double mi = pert.m_at(cache.agrid().nodes[i]);
            const double kij = pert.k(cache.agrid().nodes[i], cache.agrid().nodes[j]);
            const double ki0 = pert.k(cache.agrid().nodes[i], 0.0);
            return Vector::Constant(ns, mi * kij * birth.w[j]) + (mi * ki0 * birth.w[0]) * fold[j];
        };
        for (int j = 1; j <= n; ++j) {
            for (int i = 1; i <= n; ++i) {
                // Rows of M*B: row 1 is B~[1][j]; rows >= 2 average with the
                // transported previous row.
                if (i == 1) {
                    block(op, 1, j) += Matrix(bblock(1, j).asDiagonal());
                } else {
                    block(op, i, j) += 0.5 * Matrix(bblock(i, j).asDiagonal()) +
                                       0.5 * (cache.step(i - 1) * bblock(i - 1, j).asDiagonal());
                }
            }
        }
    }

    return GeneratorMatrix(n, ns, std::move(mass), std::move(op), std::move(fold));
}

}  // namespace agediff
