#pragma once

#include "agediff/errors.hpp"
#include "agediff/profile.hpp"
#include "agediff/resolvent.hpp"
#include "agediff/semigroup.hpp"
#include "agediff/spectrum.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace agediff {

namespace detail {

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// CSV schema v1, versioned in the leading comment line. Profiles are
/// row-major in age: age_index,x_index,value.
inline void write_profile_csv(std::ostream& os, const AgeProfile& psi) {
    os << "# agediff-csv v1 profile\n";
    os << "age_index,x_index,value\n";
    for (int i = 0; i < psi.n_nodes(); ++i)
        for (int k = 0; k < psi.n_space(); ++k)
            os << i << "," << k << "," << detail::csv_double(psi[i](k)) << "\n";
}

inline void write_profile_csv_file(const std::string& path, const AgeProfile& psi) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot write file: " + path);
    write_profile_csv(os, psi);
}

inline AgeProfile read_profile_csv(std::istream& is) {
    std::string line;
    std::map<std::pair<int, int>, double> cells;
    int max_age = -1, max_x = -1;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "age_index,x_index,value")
                throw ValidationError("profile CSV: expected header age_index,x_index,value at line " +
                                      std::to_string(lineno));
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string a, x, v;
        if (!std::getline(ls, a, ',') || !std::getline(ls, x, ',') || !std::getline(ls, v))
            throw ValidationError("profile CSV: malformed row at line " + std::to_string(lineno));
        try {
            const int ai = std::stoi(a);
            const int xi = std::stoi(x);
            const double val = std::stod(v);
            cells[{ai, xi}] = val;
            max_age = std::max(max_age, ai);
            max_x = std::max(max_x, xi);
        } catch (const std::exception&) {
            throw ValidationError("profile CSV: bad numeric value at line " + std::to_string(lineno));
        }
    }
    if (max_age < 0 || max_x < 0) throw ValidationError("profile CSV: no data rows");
    AgeProfile psi(max_age, max_x + 1);
    if (cells.size() != static_cast<size_t>(max_age + 1) * (max_x + 1))
        throw ValidationError("profile CSV: grid is not rectangular (" +
                              std::to_string(cells.size()) + " cells for " +
                              std::to_string((max_age + 1) * (max_x + 1)) + " expected)");
    for (const auto& [idx, val] : cells) psi[idx.first](idx.second) = val;
    return psi;
}

inline AgeProfile read_profile_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot read file: " + path);
    return read_profile_csv(is);
}

/// Trajectory export: t,a,x_index,value, one row per sample.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const AgeGrid& agrid) {
    os << "# agediff-csv v1 trajectory\n";
    os << "t,a,x_index,value\n";
    for (size_t k = 0; k < traj.profiles.size(); ++k)
        for (int i = 0; i < traj.profiles[k].n_nodes(); ++i)
            for (int x = 0; x < traj.profiles[k].n_space(); ++x)
                os << detail::csv_double(traj.times[k]) << "," << detail::csv_double(agrid.nodes[i])
                   << "," << x << "," << detail::csv_double(traj.profiles[k][i](x)) << "\n";
}

inline void write_birth_history_csv(std::ostream& os, const Trajectory& traj) {
    os << "# agediff-csv v1 birth_history\n";
    os << "t,x_index,value\n";
    for (size_t k = 0; k < traj.birth_history.size(); ++k)
        for (int x = 0; x < traj.birth_history[k].size(); ++x)
            os << detail::csv_double(traj.times[k]) << "," << x << ","
               << detail::csv_double(traj.birth_history[k](x)) << "\n";
}

inline void write_char_values_csv(std::ostream& os,
                                  const std::vector<std::pair<double, double>>& char_values) {
    os << "# agediff-csv v1 char_values\n";
    os << "lambda,radius\n";
    for (const auto& [lam, r] : char_values)
        os << detail::csv_double(lam) << "," << detail::csv_double(r) << "\n";
}

using Json = nlohmann::ordered_json;

inline Json to_json(const ResolventResult& r) {
    Json j;
    j["q_norm"] = r.q_norm;
    j["condition"] = r.condition;
    j["certified_residual"] = r.certified_residual;
    j["certified"] = r.certified;
    return j;
}

inline Json to_json(const ComparisonOutcome& oc) {
    Json j;
    j["name"] = oc.name;
    j["pass"] = oc.pass;
    j["skipped"] = oc.skipped;
    j["margin"] = oc.margin;
    if (!oc.detail.empty()) j["detail"] = oc.detail;
    return j;
}

inline Json to_json(const CompactnessDiagnostics& d) {
    Json j;
    j["lambda_ref"] = d.lambda_ref;
    j["threshold"] = d.threshold;
    Json levels = Json::array();
    for (const auto& l : d.levels) {
        Json jl;
        jl["n_age"] = l.n_age;
        jl["n_space"] = l.n_space;
        jl["halfplane_count"] = l.halfplane_count;
        jl["decay_exponent"] = l.decay_exponent;
        levels.push_back(jl);
    }
    j["levels"] = levels;
    j["decay_exponent"] = d.decay_exponent;
    j["singular_values"] = d.singular_values;
    return j;
}

inline Json to_json(const SpectralReport& rep) {
    Json j;
    if (rep.s_bound)
        j["s_bound"] = *rep.s_bound;
    else
        j["s_bound"] = "none-found";
    j["bracket"] = {rep.bracket.first, rep.bracket.second};
    Json eigs = Json::array();
    for (const auto& ev : rep.eigenvalues) eigs.push_back({ev.real(), ev.imag()});
    j["eigenvalues"] = eigs;
    j["principal_vector_present"] = rep.principal_vector.has_value();
    if (rep.principal_vector) j["principal_residual"] = rep.principal_residual;
    Json cv = Json::array();
    for (const auto& [lam, r] : rep.char_values) cv.push_back({lam, r});
    j["char_values"] = cv;
    if (rep.compactness) j["compactness"] = to_json(*rep.compactness);
    if (!rep.comparisons.empty()) {
        Json cj = Json::array();
        for (const auto& oc : rep.comparisons) cj.push_back(to_json(oc));
        j["comparisons"] = cj;
    }
    return j;
}

}  // namespace agediff
