#pragma once

#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/grid.hpp"
#include "agediff/norms.hpp"

#include <string>
#include <vector>

namespace agediff {

/// Discretized element of L1(J, E_0): one spatial vector per age node.
struct AgeProfile {
    std::vector<Vector> values;  // n_age + 1 vectors of size n_space

    AgeProfile() = default;
    AgeProfile(int n_age, int n_space) : values(n_age + 1, Vector::Zero(n_space)) {}

    int n_nodes() const { return static_cast<int>(values.size()); }
    int n_space() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }

    Vector& operator[](int i) { return values[i]; }
    const Vector& operator[](int i) const { return values[i]; }

    static AgeProfile constant(const AgeGrid& agrid, const Vector& v) {
        AgeProfile p;
        p.values.assign(agrid.n_age + 1, v);
        return p;
    }
};

/// Samples a coefficient-style field at all grid points.
inline AgeProfile profile_from_field(const AgeGrid& agrid, const SpaceGrid& sgrid, const Field& f) {
    AgeProfile p(agrid.n_age, sgrid.n_space);
    for (int i = 0; i <= agrid.n_age; ++i)
        for (int k = 0; k < sgrid.n_space; ++k) p[i](k) = f(agrid.nodes[i], sgrid.nodes[k]);
    return p;
}

inline void check_same_shape(const AgeProfile& a, const AgeProfile& b, const std::string& what) {
    if (a.n_nodes() != b.n_nodes() || a.n_space() != b.n_space())
        throw ValidationError(what + ": profile shape mismatch (" + std::to_string(a.n_nodes()) +
                              "x" + std::to_string(a.n_space()) + " vs " +
                              std::to_string(b.n_nodes()) + "x" + std::to_string(b.n_space()) + ")");
}

inline void check_grid_match(const AgeProfile& p, const AgeGrid& agrid, const std::string& what) {
    if (p.n_nodes() != agrid.n_age + 1)
        throw ValidationError(what + ": profile has " + std::to_string(p.n_nodes()) +
                              " age nodes, grid expects " + std::to_string(agrid.n_age + 1));
}

/// L1-in-age norm: age quadrature of per-age spatial norms.
inline double profile_norm(const AgeProfile& psi, const AgeGrid& agrid, const SpaceGrid& sgrid,
                           const NormSpec& norms) {
    check_grid_match(psi, agrid, "profile_norm");
    double s = 0.0;
    for (int i = 0; i <= agrid.n_age; ++i) s += agrid.weights[i] * norms.norm(psi[i], sgrid);
    return s;
}

/// Membership in the componentwise positive cone of the profile space.
inline bool cone_check(const AgeProfile& psi, double tol_pos = 1e-10) {
    for (const auto& v : psi.values)
        if (!cone_check_vector(v, tol_pos)) return false;
    return true;
}

inline AgeProfile operator+(const AgeProfile& a, const AgeProfile& b) {
    AgeProfile r = a;
    for (size_t i = 0; i < r.values.size(); ++i) r.values[i] += b.values[i];
    return r;
}

inline AgeProfile operator-(const AgeProfile& a, const AgeProfile& b) {
    AgeProfile r = a;
    for (size_t i = 0; i < r.values.size(); ++i) r.values[i] -= b.values[i];
    return r;
}

inline AgeProfile operator*(double s, const AgeProfile& a) {
    AgeProfile r = a;
    for (auto& v : r.values) v *= s;
    return r;
}

}  // namespace agediff
