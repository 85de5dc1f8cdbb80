#pragma once

#include "agediff/coefficients.hpp"
#include "agediff/errors.hpp"
#include "agediff/grid.hpp"
#include "agediff/norms.hpp"
#include "agediff/perturbation.hpp"
#include "agediff/spectrum.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace agediff {

/// One coefficient field in the config: a named preset with numeric
/// parameters (no expression parser).
struct FieldConfig {
    std::string preset = "constant";
    double value = 0.0;  // constant
    // gaussian_bump
    double base = 0.0, amplitude = 1.0;
    double age_center = 0.0, age_width = -1.0;
    double space_center = 0.0, space_width = -1.0;
    // separable
    double age_c0 = 1.0, age_c1 = 0.0, age_c2 = 0.0;
    double space_c0 = 1.0, space_c1 = 0.0, space_c2 = 0.0;

    Field make(const std::string& path) const {
        if (preset == "constant") return constant_field(value);
        if (preset == "gaussian_bump")
            return gaussian_bump_field(base, amplitude, age_center, age_width, space_center,
                                       space_width);
        if (preset == "separable")
            return separable_field(age_c0, age_c1, age_c2, space_c0, space_c1, space_c2);
        throw ValidationError(path + ".preset: unknown preset '" + preset +
                              "' (available: constant, gaussian_bump, separable)");
    }
};

struct PerturbationConfig {
    std::string kind = "none";  // none | age_kernel
    bool positive = true;
    double strength = 1.0;
    std::string m_preset = "constant";
    double m_value = 0.0;
    double m_base = 0.0, m_amplitude = 1.0, m_center = 0.0, m_width = -1.0;
    double m_c0 = 1.0, m_c1 = 0.0, m_c2 = 0.0;
    std::string k_preset = "constant";
    double k_value = 0.0;
    double k_amplitude = 1.0, k_width = 1.0;  // gaussian_diff
    double k_c0 = 1.0, k_c1 = 0.0, k_c2 = 0.0;
    double k2_c0 = 1.0, k2_c1 = 0.0, k2_c2 = 0.0;

    PerturbationSpec make() const {
        PerturbationSpec p;
        if (kind == "none") {
            p.kind = PerturbationKind::none;
            return p;
        }
        if (kind != "age_kernel")
            throw ValidationError("perturbation.kind: unknown kind '" + kind +
                                  "' (available: none, age_kernel)");
        p.kind = PerturbationKind::age_kernel;
        p.positive = positive;
        p.strength = strength;
        if (m_preset == "constant")
            p.m = constant_age_func(m_value);
        else if (m_preset == "gaussian_bump")
            p.m = gaussian_age_func(m_base, m_amplitude, m_center, m_width);
        else if (m_preset == "poly")
            p.m = poly_age_func(m_c0, m_c1, m_c2);
        else
            throw ValidationError("perturbation.m_preset: unknown preset '" + m_preset +
                                  "' (available: constant, gaussian_bump, poly)");
        if (k_preset == "constant") {
            const double v = k_value;
            p.k = [v](double, double) { return v; };
        } else if (k_preset == "gaussian_diff") {
            const double amp = k_amplitude, w = k_width;
            p.k = [amp, w](double a, double ap) {
                const double t = (a - ap) / (w > 0 ? w : 1.0);
                return amp * std::exp(-0.5 * t * t);
            };
        } else if (k_preset == "separable") {
            const double c0 = k_c0, c1 = k_c1, c2 = k_c2;
            const double d0 = k2_c0, d1 = k2_c1, d2 = k2_c2;
            p.k = [=](double a, double ap) {
                return (c0 + c1 * a + c2 * a * a) * (d0 + d1 * ap + d2 * ap * ap);
            };
        } else {
            throw ValidationError("perturbation.k_preset: unknown preset '" + k_preset +
                                  "' (available: constant, gaussian_diff, separable)");
        }
        return p;
    }
};

struct RunConfig {
    // [model]
    double a_max = 1.0;
    int n_age = 32;
    double length = 1.0;
    int n_space = 8;
    std::string bc = "dirichlet";
    double robin_coeff = 0.0;
    bool positivity_mode = true;
    bool diffusion_enabled = true;
    std::string norm = "l1_weighted";
    double d_min = 1e-8;
    // [diffusion] [mortality] [birth] [initial]
    FieldConfig diffusion{.preset = "constant", .value = 1.0};
    FieldConfig mortality{.preset = "constant", .value = 0.0};
    FieldConfig birth{.preset = "constant", .value = 0.0};
    FieldConfig initial{.preset = "constant", .value = 1.0};
    std::string initial_csv;
    // [perturbation]
    PerturbationConfig perturbation;
    // [numerics]
    int substeps = 4;
    double tol_pos = 1e-10;
    double tol_res = 1e-8;
    double cond_threshold = 1e12;
    double bisect_tol = 1e-10;
    std::optional<double> bracket_lo, bracket_hi;
    std::vector<double> lambda_list;
    double power_tol = 1e-12;
    int power_max_iters = 10000;
    double neumann_tol = 1e-12;
    int neumann_max_iters = 500;
    std::vector<std::pair<int, int>> refinements = {{32, 8}, {64, 16}, {128, 32}};
    // [simulate]
    double t_final = 1.0;
    // [resolvent]
    double lambda = 10.0;
    // [output]
    std::string output_dir = "out";

    BcKind bc_kind() const {
        if (bc == "dirichlet") return BcKind::dirichlet;
        if (bc == "neumann") return BcKind::neumann;
        if (bc == "robin") return BcKind::robin;
        throw ValidationError("model.bc: unknown boundary condition '" + bc +
                              "' (available: dirichlet, neumann, robin)");
    }

    NormSpec norm_spec() const {
        NormSpec n;
        if (norm == "l1_weighted")
            n.space_norm = SpaceNorm::l1_weighted;
        else if (norm == "sup")
            n.space_norm = SpaceNorm::sup;
        else
            throw ValidationError("model.norm: unknown norm '" + norm +
                                  "' (available: l1_weighted, sup)");
        return n;
    }

    void validate() const {
        if (!(a_max > 0.0) || !std::isfinite(a_max))
            throw ValidationError("model.a_max: must be a positive finite real");
        if (n_age < 1) throw ValidationError("model.n_age: must be >= 1, got " + std::to_string(n_age));
        if (!(length > 0.0) || !std::isfinite(length))
            throw ValidationError("model.length: must be a positive finite real");
        if (n_space < 1)
            throw ValidationError("model.n_space: must be >= 1, got " + std::to_string(n_space));
        bc_kind();
        norm_spec();
        if (positivity_mode && bc == "robin" && robin_coeff < 0.0)
            throw ValidationError("model.robin_coeff: must be >= 0 in positivity mode");
        if (!(d_min > 0.0)) throw ValidationError("model.d_min: must be > 0");
        if (substeps < 1) throw ValidationError("numerics.substeps: must be >= 1");
        if (!(tol_pos >= 0.0)) throw ValidationError("numerics.tol_pos: must be >= 0");
        if (!(tol_res > 0.0)) throw ValidationError("numerics.tol_res: must be > 0");
        if (!(cond_threshold > 1.0)) throw ValidationError("numerics.cond_threshold: must be > 1");
        if (t_final < 0.0) throw ValidationError("simulate.t_final: must be >= 0");
        for (double l : lambda_list)
            if (!std::isfinite(l)) throw ValidationError("numerics.lambda_list: non-finite entry");
        for (auto [na, ns] : refinements)
            if (na < 1 || ns < 1)
                throw ValidationError("numerics.refinements: entries must be NxM with N, M >= 1");
        if (output_dir.empty()) throw ValidationError("output.dir: must not be empty");
    }

    Coefficients coefficients() const {
        Coefficients c;
        c.diffusion = diffusion.make("diffusion");
        c.mortality = mortality.make("mortality");
        c.birth = birth.make("birth");
        c.diffusion_enabled = diffusion_enabled;
        c.d_min = d_min;
        return c;
    }

    InstanceSpec instance() const {
        InstanceSpec spec;
        spec.a_max = a_max;
        spec.length = length;
        spec.bc = BoundaryCondition{bc_kind(), robin_coeff};
        spec.coeff = coefficients();
        spec.substeps = substeps;
        spec.norms = norm_spec();
        spec.positivity_mode = positivity_mode;
        return spec;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct IniEntry {
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct IniData {
    std::map<std::string, std::map<std::string, IniEntry>> sections;

    const IniEntry* find(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        if (s == sections.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }
};

inline IniData parse_ini_text(const std::string& text) {
    IniData data;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError("config parse error at line " + std::to_string(lineno) +
                                      ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            data.sections[section];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config parse error at line " + std::to_string(lineno) +
                                  ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ValidationError("config parse error at line " + std::to_string(lineno) +
                                  ": empty key");
        data.sections[section][key] = IniEntry{value, lineno, false};
    }
    return data;
}

inline double to_double(const IniEntry& e, const std::string& path) {
    try {
        size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(path + ": expected a real number, got '" + e.value + "' (line " +
                              std::to_string(e.line) + ")");
    }
}

inline int to_int(const IniEntry& e, const std::string& path) {
    try {
        size_t pos = 0;
        const long v = std::stol(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw ValidationError(path + ": expected an integer, got '" + e.value + "' (line " +
                              std::to_string(e.line) + ")");
    }
}

inline bool to_bool(const IniEntry& e, const std::string& path) {
    if (e.value == "true" || e.value == "1" || e.value == "on") return true;
    if (e.value == "false" || e.value == "0" || e.value == "off") return false;
    throw ValidationError(path + ": expected true/false, got '" + e.value + "' (line " +
                          std::to_string(e.line) + ")");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, sep)) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

struct Reader {
    const IniData& ini;

    void get(double& target, const std::string& sec, const std::string& key) const {
        if (auto* e = ini.find(sec, key)) target = to_double(*e, sec + "." + key);
    }
    void get(int& target, const std::string& sec, const std::string& key) const {
        if (auto* e = ini.find(sec, key)) target = to_int(*e, sec + "." + key);
    }
    void get(bool& target, const std::string& sec, const std::string& key) const {
        if (auto* e = ini.find(sec, key)) target = to_bool(*e, sec + "." + key);
    }
    void get(std::string& target, const std::string& sec, const std::string& key) const {
        if (auto* e = ini.find(sec, key)) target = e->value;
    }
    void get(std::optional<double>& target, const std::string& sec, const std::string& key) const {
        if (auto* e = ini.find(sec, key)) target = to_double(*e, sec + "." + key);
    }
    void get(std::vector<double>& target, const std::string& sec, const std::string& key) const {
        if (auto* e = ini.find(sec, key)) {
            target.clear();
            for (const auto& tok : split(e->value, ',')) {
                IniEntry tmp{tok, e->line, true};
                target.push_back(to_double(tmp, sec + "." + key));
            }
        }
    }
    void get(std::vector<std::pair<int, int>>& target, const std::string& sec,
             const std::string& key) const {
        if (auto* e = ini.find(sec, key)) {
            target.clear();
            for (const auto& tok : split(e->value, ',')) {
                const size_t x = tok.find('x');
                if (x == std::string::npos)
                    throw ValidationError(sec + "." + key + ": expected entries like 32x8, got '" +
                                          tok + "'");
                IniEntry a{trim(tok.substr(0, x)), e->line, true};
                IniEntry b{trim(tok.substr(x + 1)), e->line, true};
                target.emplace_back(to_int(a, sec + "." + key), to_int(b, sec + "." + key));
            }
        }
    }

    void get_field(FieldConfig& f, const std::string& sec) const {
        get(f.preset, sec, "preset");
        get(f.value, sec, "value");
        get(f.base, sec, "base");
        get(f.amplitude, sec, "amplitude");
        get(f.age_center, sec, "age_center");
        get(f.age_width, sec, "age_width");
        get(f.space_center, sec, "space_center");
        get(f.space_width, sec, "space_width");
        get(f.age_c0, sec, "age_c0");
        get(f.age_c1, sec, "age_c1");
        get(f.age_c2, sec, "age_c2");
        get(f.space_c0, sec, "space_c0");
        get(f.space_c1, sec, "space_c1");
        get(f.space_c2, sec, "space_c2");
    }
};

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
    const detail::IniData ini = detail::parse_ini_text(text);

    static const std::set<std::string> known_sections = {
        "model",  "diffusion", "mortality", "birth",    "initial",
        "perturbation", "numerics",  "simulate",  "resolvent", "output"};
    for (const auto& [sec, _] : ini.sections)
        if (!known_sections.count(sec))
            throw ValidationError("unknown config section [" + sec + "]");

    RunConfig cfg;
    detail::Reader r{ini};

    r.get(cfg.a_max, "model", "a_max");
    r.get(cfg.n_age, "model", "n_age");
    r.get(cfg.length, "model", "length");
    r.get(cfg.n_space, "model", "n_space");
    r.get(cfg.bc, "model", "bc");
    r.get(cfg.robin_coeff, "model", "robin_coeff");
    r.get(cfg.positivity_mode, "model", "positivity_mode");
    r.get(cfg.diffusion_enabled, "model", "diffusion_enabled");
    r.get(cfg.norm, "model", "norm");
    r.get(cfg.d_min, "model", "d_min");

    r.get_field(cfg.diffusion, "diffusion");
    r.get_field(cfg.mortality, "mortality");
    r.get_field(cfg.birth, "birth");
    r.get_field(cfg.initial, "initial");
    r.get(cfg.initial_csv, "initial", "csv");

    auto& p = cfg.perturbation;
    r.get(p.kind, "perturbation", "kind");
    r.get(p.positive, "perturbation", "positive");
    r.get(p.strength, "perturbation", "strength");
    r.get(p.m_preset, "perturbation", "m_preset");
    r.get(p.m_value, "perturbation", "m_value");
    r.get(p.m_base, "perturbation", "m_base");
    r.get(p.m_amplitude, "perturbation", "m_amplitude");
    r.get(p.m_center, "perturbation", "m_center");
    r.get(p.m_width, "perturbation", "m_width");
    r.get(p.m_c0, "perturbation", "m_c0");
    r.get(p.m_c1, "perturbation", "m_c1");
    r.get(p.m_c2, "perturbation", "m_c2");
    r.get(p.k_preset, "perturbation", "k_preset");
    r.get(p.k_value, "perturbation", "k_value");
    r.get(p.k_amplitude, "perturbation", "k_amplitude");
    r.get(p.k_width, "perturbation", "k_width");
    r.get(p.k_c0, "perturbation", "k_c0");
    r.get(p.k_c1, "perturbation", "k_c1");
    r.get(p.k_c2, "perturbation", "k_c2");
    r.get(p.k2_c0, "perturbation", "k2_c0");
    r.get(p.k2_c1, "perturbation", "k2_c1");
    r.get(p.k2_c2, "perturbation", "k2_c2");

    r.get(cfg.substeps, "numerics", "substeps");
    r.get(cfg.tol_pos, "numerics", "tol_pos");
    r.get(cfg.tol_res, "numerics", "tol_res");
    r.get(cfg.cond_threshold, "numerics", "cond_threshold");
    r.get(cfg.bisect_tol, "numerics", "bisect_tol");
    r.get(cfg.bracket_lo, "numerics", "bracket_lo");
    r.get(cfg.bracket_hi, "numerics", "bracket_hi");
    r.get(cfg.lambda_list, "numerics", "lambda_list");
    r.get(cfg.power_tol, "numerics", "power_tol");
    r.get(cfg.power_max_iters, "numerics", "power_max_iters");
    r.get(cfg.neumann_tol, "numerics", "neumann_tol");
    r.get(cfg.neumann_max_iters, "numerics", "neumann_max_iters");
    r.get(cfg.refinements, "numerics", "refinements");

    r.get(cfg.t_final, "simulate", "t_final");
    r.get(cfg.lambda, "resolvent", "lambda");
    r.get(cfg.output_dir, "output", "dir");

    // Strict: reject unknown keys with their location.
    for (const auto& [sec, keys] : ini.sections)
        for (const auto& [key, entry] : keys)
            if (!entry.used)
                throw ValidationError("unknown config key " + sec + "." + key + " (line " +
                                      std::to_string(entry.line) + ")");

    cfg.validate();
    // Force preset resolution now so bad preset names fail at parse time.
    cfg.coefficients();
    cfg.perturbation.make();
    return cfg;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Serializes the effective config (defaults applied). The echo re-parses to
/// an identical RunConfig.
inline std::string to_ini(const RunConfig& c) {
    using detail::fmt_double;
    std::ostringstream os;
    os << "# agediff effective configuration\n";
    os << "[model]\n";
    os << "a_max = " << fmt_double(c.a_max) << "\n";
    os << "n_age = " << c.n_age << "\n";
    os << "length = " << fmt_double(c.length) << "\n";
    os << "n_space = " << c.n_space << "\n";
    os << "bc = " << c.bc << "\n";
    os << "robin_coeff = " << fmt_double(c.robin_coeff) << "\n";
    os << "positivity_mode = " << (c.positivity_mode ? "true" : "false") << "\n";
    os << "diffusion_enabled = " << (c.diffusion_enabled ? "true" : "false") << "\n";
    os << "norm = " << c.norm << "\n";
    os << "d_min = " << fmt_double(c.d_min) << "\n";
    auto field = [&](const char* name, const FieldConfig& f) {
        os << "[" << name << "]\n";
        os << "preset = " << f.preset << "\n";
        os << "value = " << fmt_double(f.value) << "\n";
        os << "base = " << fmt_double(f.base) << "\n";
        os << "amplitude = " << fmt_double(f.amplitude) << "\n";
        os << "age_center = " << fmt_double(f.age_center) << "\n";
        os << "age_width = " << fmt_double(f.age_width) << "\n";
        os << "space_center = " << fmt_double(f.space_center) << "\n";
        os << "space_width = " << fmt_double(f.space_width) << "\n";
        os << "age_c0 = " << fmt_double(f.age_c0) << "\n";
        os << "age_c1 = " << fmt_double(f.age_c1) << "\n";
        os << "age_c2 = " << fmt_double(f.age_c2) << "\n";
        os << "space_c0 = " << fmt_double(f.space_c0) << "\n";
        os << "space_c1 = " << fmt_double(f.space_c1) << "\n";
        os << "space_c2 = " << fmt_double(f.space_c2) << "\n";
    };
    field("diffusion", c.diffusion);
    field("mortality", c.mortality);
    field("birth", c.birth);
    field("initial", c.initial);
    if (!c.initial_csv.empty()) os << "csv = " << c.initial_csv << "\n";
    const auto& p = c.perturbation;
    os << "[perturbation]\n";
    os << "kind = " << p.kind << "\n";
    os << "positive = " << (p.positive ? "true" : "false") << "\n";
    os << "strength = " << fmt_double(p.strength) << "\n";
    os << "m_preset = " << p.m_preset << "\n";
    os << "m_value = " << fmt_double(p.m_value) << "\n";
    os << "m_base = " << fmt_double(p.m_base) << "\n";
    os << "m_amplitude = " << fmt_double(p.m_amplitude) << "\n";
    os << "m_center = " << fmt_double(p.m_center) << "\n";
    os << "m_width = " << fmt_double(p.m_width) << "\n";
    os << "m_c0 = " << fmt_double(p.m_c0) << "\n";
    os << "m_c1 = " << fmt_double(p.m_c1) << "\n";
    os << "m_c2 = " << fmt_double(p.m_c2) << "\n";
    os << "k_preset = " << p.k_preset << "\n";
    os << "k_value = " << fmt_double(p.k_value) << "\n";
    os << "k_amplitude = " << fmt_double(p.k_amplitude) << "\n";
    os << "k_width = " << fmt_double(p.k_width) << "\n";
    os << "k_c0 = " << fmt_double(p.k_c0) << "\n";
    os << "k_c1 = " << fmt_double(p.k_c1) << "\n";
    os << "k_c2 = " << fmt_double(p.k_c2) << "\n";
    os << "k2_c0 = " << fmt_double(p.k2_c0) << "\n";
    os << "k2_c1 = " << fmt_double(p.k2_c1) << "\n";
    os << "k2_c2 = " << fmt_double(p.k2_c2) << "\n";
    os << "[numerics]\n";
    os << "substeps = " << c.substeps << "\n";
    os << "tol_pos = " << fmt_double(c.tol_pos) << "\n";
    os << "tol_res = " << fmt_double(c.tol_res) << "\n";
    os << "cond_threshold = " << fmt_double(c.cond_threshold) << "\n";
    os << "bisect_tol = " << fmt_double(c.bisect_tol) << "\n";
    if (c.bracket_lo) os << "bracket_lo = " << fmt_double(*c.bracket_lo) << "\n";
    if (c.bracket_hi) os << "bracket_hi = " << fmt_double(*c.bracket_hi) << "\n";
    if (!c.lambda_list.empty()) {
        os << "lambda_list = ";
        for (size_t i = 0; i < c.lambda_list.size(); ++i)
            os << (i ? ", " : "") << fmt_double(c.lambda_list[i]);
        os << "\n";
    }
    os << "power_tol = " << fmt_double(c.power_tol) << "\n";
    os << "power_max_iters = " << c.power_max_iters << "\n";
    os << "neumann_tol = " << fmt_double(c.neumann_tol) << "\n";
    os << "neumann_max_iters = " << c.neumann_max_iters << "\n";
    if (!c.refinements.empty()) {
        os << "refinements = ";
        for (size_t i = 0; i < c.refinements.size(); ++i)
            os << (i ? ", " : "") << c.refinements[i].first << "x" << c.refinements[i].second;
        os << "\n";
    }
    os << "[simulate]\n";
    os << "t_final = " << fmt_double(c.t_final) << "\n";
    os << "[resolvent]\n";
    os << "lambda = " << fmt_double(c.lambda) << "\n";
    os << "[output]\n";
    os << "dir = " << c.output_dir << "\n";
    return os.str();
}

}  // namespace agediff
