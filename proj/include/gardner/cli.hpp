// Configuration schema and command implementations behind the command-line
// tool. Reports are JSON with canonical key order and shortest round-trip
// numbers, so identical configs and seeds produce byte-identical output.
#pragma once

#include "gardner/conservation.hpp"
#include "gardner/equivalence.hpp"
#include "gardner/pde.hpp"

#include "json.hpp"

#include <sstream>

namespace gardner {
namespace cli {

using nlohmann::json;

struct ConfigError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Schema helpers

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                           const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + path);
    }
}

inline Rat parse_rat(const json& j, const std::string& path) {
    if (j.is_number_integer()) return Rat(j.get<long long>());
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        auto slash = s.find('/');
        try {
            if (slash == std::string::npos) return Rat(std::stoll(s));
            return Rat(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
        } catch (const std::exception&) {
            throw ConfigError(path + ": expected an integer or \"p/q\" string");
        }
    }
    throw ConfigError(path + ": expected an integer or \"p/q\" string");
}

inline Expr parse_expr_cfg(const json& j, const std::string& path) {
    if (j.is_string()) {
        try {
            return parse(j.get<std::string>());
        } catch (const Error& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    if (j.is_number_integer()) return rational(j.get<long long>());
    if (j.is_number()) return real_const(j.get<double>());
    throw ConfigError(path + ": expected an expression string");
}

inline Range parse_range(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(path + ": expected [lo, hi]");
    return Range{j[0].get<double>(), j[1].get<double>()};
}

// ---------------------------------------------------------------------------
// Config blocks

struct RunConfig {
    GardnerEquation equation;
    SamplingSpec sampling;
    double tolerance = 1e-9;
    json raw;
};

inline RunConfig load_config(const json& j) {
    reject_unknown(j, {"schema", "equation", "constants", "sampling", "case", "adjoint",
                       "laws", "transform", "solver"},
                   "config");
    if (!j.contains("schema") || j["schema"] != 1)
        throw ConfigError("config requires \"schema\": 1");
    if (!j.contains("equation")) throw ConfigError("config requires an \"equation\" block");

    RunConfig cfg;
    cfg.raw = j;

    // constants first: expressions may reference user-declared names
    std::map<Symbol, double> constants;
    if (j.contains("constants")) {
        if (!j["constants"].is_object()) throw ConfigError("constants must be an object");
        for (auto it = j["constants"].begin(); it != j["constants"].end(); ++it) {
            Symbol s = symtab().declare_constant(it.key());
            constants[s] = it.value().get<double>();
        }
    }

    const json& e = j["equation"];
    reject_unknown(e, {"A", "B", "C", "Q", "n", "t_domain", "antiderivatives"}, "equation");
    auto coeff = [&](const char* name, Expr fallback) {
        CoefficientFn f(fallback);
        if (e.contains(name)) f.expr = parse_expr_cfg(e[name], std::string("equation.") + name);
        if (e.contains("antiderivatives") && e["antiderivatives"].contains(name))
            f.antiderivative =
                parse_expr_cfg(e["antiderivatives"][name], std::string("antiderivatives.") + name);
        return f;
    };
    GardnerEquation eq;
    eq.A = coeff("A", zero());
    eq.B = coeff("B", one());
    eq.C = coeff("C", one());
    eq.Q = coeff("Q", zero());
    eq.n = e.contains("n") ? parse_rat(e["n"], "equation.n") : Rat(1);
    if (e.contains("t_domain")) {
        Range r = parse_range(e["t_domain"], "equation.t_domain");
        eq.t_domain = {r.lo, r.hi};
    }
    eq.constants = std::move(constants);
    try {
        validate(eq);
    } catch (const Error& err) {
        throw ConfigError(std::string("equation: ") + err.what());
    }
    cfg.equation = std::move(eq);

    if (j.contains("sampling")) {
        const json& s = j["sampling"];
        reject_unknown(s, {"count", "seed", "tolerance", "t", "x", "u", "derivatives", "symbols"},
                       "sampling");
        if (s.contains("count")) cfg.sampling.count = s["count"].get<int>();
        if (s.contains("seed")) cfg.sampling.seed = s["seed"].get<uint64_t>();
        if (s.contains("tolerance")) cfg.tolerance = s["tolerance"].get<double>();
        if (s.contains("t")) cfg.sampling.t = parse_range(s["t"], "sampling.t");
        if (s.contains("x")) cfg.sampling.x = parse_range(s["x"], "sampling.x");
        if (s.contains("u")) cfg.sampling.u = parse_range(s["u"], "sampling.u");
        if (s.contains("derivatives"))
            cfg.sampling.deriv = parse_range(s["derivatives"], "sampling.derivatives");
        if (s.contains("symbols"))
            for (auto it = s["symbols"].begin(); it != s["symbols"].end(); ++it) {
                auto sym_opt = symtab().lookup(it.key());
                if (!sym_opt) throw ConfigError("sampling.symbols: unknown symbol " + it.key());
                cfg.sampling.symbol_ranges[*sym_opt] =
                    parse_range(it.value(), "sampling.symbols." + it.key());
            }
    } else {
        cfg.sampling.t = Range{cfg.equation.t_domain.lo, cfg.equation.t_domain.hi};
    }
    cfg.sampling.tolerance = cfg.tolerance;
    return cfg;
}

// ---------------------------------------------------------------------------
// Report helpers

inline json verdict_json(const IdentityVerdict& v) {
    json out;
    out["holds"] = v.holds;
    out["max_abs_residual"] = v.max_abs_residual;
    out["max_rel_residual"] = v.max_rel_residual;
    out["samples"] = v.samples;
    out["worst_point"] = {{"t", v.worst_point.t}, {"x", v.worst_point.x},
                          {"u", v.worst_point.u[0][0]}};
    return out;
}

struct CommandResult {
    int exit_code = 0;
    json report;
    std::string csv;
};

// ---------------------------------------------------------------------------
// classify

inline CommandResult cmd_classify(const RunConfig& cfg) {
    CommandResult out;
    CaseMatch m = classify_equation(cfg.equation);
    out.report["command"] = "classify";
    out.report["schema"] = 1;
    out.report["case"] = to_string(m.id);
    json fitted = json::object();
    JetPoint origin;
    for (const auto& [name, expr] : m.fitted) {
        json f;
        f["expr"] = render(expr);
        try {
            f["value"] = eval(expr, origin, cfg.equation.bindings());
        } catch (const EvalError&) {
            // symbolic fit: no numeric value available
        }
        fitted[name] = f;
    }
    out.report["fitted"] = fitted;
    out.report["notes"] = m.notes;
    return out;
}

// ---------------------------------------------------------------------------
// transform

inline CommandResult cmd_transform(const RunConfig& cfg) {
    const json& raw = cfg.raw;
    json t = raw.contains("transform") ? raw["transform"] : json::object();
    reject_unknown(t, {"to_canonical", "eps1", "eps2", "eps_r", "alpha", "r", "samples"},
                   "transform");
    bool canonical = t.value("to_canonical", true);
    double eps1 = t.value("eps1", 0.0), eps2 = t.value("eps2", 0.0);
    int samples = t.value("samples", 9);

    TransformedEquation tr;
    if (canonical) {
        tr = to_canonical(cfg.equation, eps1, eps2);
    } else {
        EquivalenceParams p;
        p.eps1 = eps1;
        p.eps2 = eps2;
        p.eps_r = t.value("eps_r", 0.0);
        if (t.contains("alpha")) p.alpha = CoefficientFn(parse_expr_cfg(t["alpha"], "transform.alpha"));
        if (t.contains("r")) p.r = CoefficientFn(parse_expr_cfg(t["r"], "transform.r"));
        tr = apply_group_full(cfg.equation, p);
    }

    CommandResult out;
    out.report["command"] = "transform";
    out.report["schema"] = 1;
    out.report["mode"] = canonical ? "to_canonical" : "apply_group";
    out.report["coefficients"] = {{"A", render(tr.eq_tilde.A.expr)},
                                  {"B", render(tr.eq_tilde.B.expr)},
                                  {"C", render(tr.eq_tilde.C.expr)},
                                  {"Q", render(tr.eq_tilde.Q.expr)},
                                  {"n", render(rational(tr.eq_tilde.n))}};
    out.report["maps"] = {{"x_scale", tr.maps.x_scale}, {"x_shift", tr.maps.x_shift}};
    json samp = json::array();
    for (int i = 0; i < samples; ++i) {
        double tt = cfg.equation.t_domain.mid((i + 0.5) / samples);
        double ttil = tr.maps.t_map(tt);
        json row;
        row["t"] = tt;
        row["t_tilde"] = ttil;
        row["A_tilde"] = tr.eq_tilde.coeff_value(tr.eq_tilde.A, ttil);
        row["Q_tilde"] = tr.eq_tilde.coeff_value(tr.eq_tilde.Q, ttil);
        samp.push_back(row);
    }
    out.report["samples"] = samp;
    return out;
}

// ---------------------------------------------------------------------------
// check-symmetry

inline CommandResult cmd_check_symmetry(const RunConfig& cfg) {
    const GardnerEquation& eq = cfg.equation;
    CaseMatch m = classify_equation(eq);
    SymmetryCaseId id = m.id;
    if (cfg.raw.contains("case")) {
        std::string want = cfg.raw["case"].get<std::string>();
        if (want == "case1") id = SymmetryCaseId::Case1;
        else if (want == "case2") id = SymmetryCaseId::Case2;
        else if (want == "case3") id = SymmetryCaseId::Case3;
        else if (want == "arbitrary") id = SymmetryCaseId::Arbitrary;
        else if (want != "auto") throw ConfigError("unknown case '" + want + "'");
    }
    AuxFunctions aux = build_aux(eq.Q, eq.t_domain, eq.constants);

    CommandResult out;
    out.report["command"] = "check-symmetry";
    out.report["schema"] = 1;
    out.report["case"] = to_string(id);
    out.report["classified_as"] = to_string(m.id);
    bool all = true;
    json gens = json::array();
    for (const Generator& g : generators_for(id, eq)) {
        GeneratorVerification v = verify_generator(g, eq, aux, cfg.sampling, cfg.tolerance);
        json gj;
        gj["label"] = g.label;
        gj["tau"] = render(g.tau);
        gj["xi"] = render(g.xi);
        gj["eta"] = render(g.eta);
        json det = json::array();
        for (const auto& row : v.determining) det.push_back(verdict_json(row));
        gj["determining"] = det;
        gj["invariance"] = verdict_json(v.invariance);
        gj["pass"] = v.all_hold();
        all = all && v.all_hold();
        gens.push_back(gj);
    }
    out.report["generators"] = gens;
    out.report["pass"] = all;
    out.exit_code = all ? 0 : 1;
    return out;
}

// ---------------------------------------------------------------------------
// check-adjoint

inline CommandResult cmd_check_adjoint(const RunConfig& cfg) {
    const GardnerEquation& eq = cfg.equation;
    json a = cfg.raw.contains("adjoint") ? cfg.raw["adjoint"] : json::object();
    reject_unknown(a, {"branch"}, "adjoint");
    std::string branch = a.value("branch", "general");
    AdjointBranch b = AdjointBranch::General;
    if (branch == "n_half_A_zero") b = AdjointBranch::NHalfAZero;
    else if (branch != "general") throw ConfigError("adjoint.branch must be general or n_half_A_zero");

    AuxFunctions aux = build_aux(eq.Q, eq.t_domain, eq.constants);
    Substitution sub = theorem3_substitution(eq, b);
    Expr residual_expr = bind_aux(self_adjointness_residual(eq, sub), aux);
    Bindings bind = eq.bindings();
    bind.merge(aux.numeric);
    IdentityVerdict v = check_identity(residual_expr, std::nullopt, cfg.sampling,
                                       cfg.tolerance, bind);

    CommandResult out;
    out.report["command"] = "check-adjoint";
    out.report["schema"] = 1;
    out.report["adjoint"] = render(expand_distribute(adjoint_equation(eq)));
    out.report["branch"] = branch;
    out.report["phi"] = render(bind_aux(sub.phi, aux));
    out.report["classification"] = {
        {"self_adjoint", is_self_adjoint_substitution(sub)},
        {"quasi_self_adjoint", is_quasi_self_adjoint_substitution(sub)},
        {"weak_self_adjoint", is_weak_self_adjoint_substitution(sub)}};
    out.report["verdict"] = verdict_json(v);
    out.report["pass"] = v.holds;
    out.exit_code = v.holds ? 0 : 1;
    return out;
}

// ---------------------------------------------------------------------------
// check-claw and list-claws

inline std::optional<CatalogId> catalog_id(const std::string& name) {
    if (name == "case1") return CatalogId::Case1;
    if (name == "case2") return CatalogId::Case2;
    if (name == "case2_dhalf") return CatalogId::Case2DHalf;
    if (name == "case3") return CatalogId::Case3;
    if (name == "multiplier_general") return CatalogId::MultiplierGeneral;
    if (name == "multiplier_nhalf") return CatalogId::MultiplierNHalf;
    return std::nullopt;
}

inline CommandResult cmd_check_claw(const RunConfig& cfg) {
    const GardnerEquation& eq = cfg.equation;
    AuxFunctions aux = build_aux(eq.Q, eq.t_domain, eq.constants);
    if (!cfg.raw.contains("laws")) throw ConfigError("check-claw needs a \"laws\" array");

    CommandResult out;
    out.report["command"] = "check-claw";
    out.report["schema"] = 1;
    json laws = json::array();
    bool all = true;
    std::string first_failure;
    for (const json& item : cfg.raw["laws"]) {
        json lj;
        std::string name;
        try {
            if (item.is_string()) {
                name = item.get<std::string>();
                auto id = catalog_id(name);
                if (!id) throw ConfigError("unknown law '" + name + "'");
                ConservedVector cv = catalog_vector(*id, eq, aux, cfg.sampling, cfg.tolerance);
                lj["T"] = render(cv.T);
                lj["X"] = render(cv.X);
                lj["provenance"] = cv.provenance;
                lj["divergence"] = verdict_json(cv.certificate);
                if (cv.characteristic) lj["characteristic"] = verdict_json(*cv.characteristic);
                lj["trivial"] = cv.trivial;
                lj["pass"] = true;
            } else {
                reject_unknown(item, {"name", "T", "X"}, "laws[]");
                name = item.value("name", "custom");
                ConservedVector cv;
                cv.T = bind_aux(bind_equation(parse_expr_cfg(item.at("T"), "laws[].T"), eq), aux);
                cv.X = bind_aux(bind_equation(parse_expr_cfg(item.at("X"), "laws[].X"), eq), aux);
                cv.provenance = name;
                Bindings bind = eq.bindings();
                bind.merge(aux.numeric);
                Expr res = bind_aux(bind_equation(divergence_residual(cv, eq), eq), aux);
                IdentityVerdict v = check_identity(res, std::nullopt, cfg.sampling,
                                                   cfg.tolerance, bind);
                lj["T"] = render(cv.T);
                lj["X"] = render(cv.X);
                lj["divergence"] = verdict_json(v);
                lj["pass"] = v.holds;
                if (!v.holds) throw CertificationError("conservation law '" + name + "' failed");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& err) {
            lj["pass"] = false;
            lj["error"] = err.what();
            all = false;
            if (first_failure.empty()) first_failure = name;
        }
        lj["name"] = name;
        laws.push_back(lj);
    }
    out.report["laws"] = laws;
    out.report["pass"] = all;
    if (!all) out.report["failed_law"] = first_failure;
    out.exit_code = all ? 0 : 1;
    return out;
}

inline CommandResult cmd_list_claws(const RunConfig& cfg) {
    const GardnerEquation& eq = cfg.equation;
    AuxFunctions aux = build_aux(eq.Q, eq.t_domain, eq.constants);
    CommandResult out;
    out.report["command"] = "list-claws";
    out.report["schema"] = 1;
    json laws = json::array();
    for (CatalogId id : {CatalogId::Case1, CatalogId::Case2, CatalogId::Case2DHalf,
                         CatalogId::Case3, CatalogId::MultiplierGeneral,
                         CatalogId::MultiplierNHalf}) {
        json lj;
        lj["name"] = to_string(id);
        try {
            ConservedVector cv = catalog_vector(id, eq, aux, cfg.sampling, cfg.tolerance);
            lj["applicable"] = true;
            lj["T"] = render(cv.T);
            lj["X"] = render(cv.X);
            lj["provenance"] = cv.provenance;
            lj["divergence"] = verdict_json(cv.certificate);
        } catch (const Error& err) {
            lj["applicable"] = false;
            lj["reason"] = err.what();
        }
        laws.push_back(lj);
    }
    out.report["laws"] = laws;
    return out;
}

// ---------------------------------------------------------------------------
// simulate

inline CommandResult cmd_simulate(const RunConfig& cfg) {
    const GardnerEquation& eq = cfg.equation;
    json s = cfg.raw.contains("solver") ? cfg.raw["solver"] : json::object();
    reject_unknown(s, {"N", "period", "dt", "t_final", "output_every", "boundary_correction",
                       "linear_only", "initial", "monitor", "probe", "snapshots"},
                   "solver");
    Grid grid(s.value("N", 256), s.value("period", 2 * M_PI));
    SimulateOptions opt;
    opt.t_final = s.value("t_final", 1.0);
    opt.dt = s.value("dt", 1e-3);
    opt.output_every = s.value("output_every", 10);
    opt.boundary_correction = s.value("boundary_correction", true);
    opt.solver.linear_only = s.value("linear_only", false);
    opt.store_snapshots = s.value("snapshots", false);

    InitialData init;
    if (s.contains("initial")) {
        const json& i = s["initial"];
        reject_unknown(i, {"mean", "modes"}, "solver.initial");
        init.mean = i.value("mean", 1.5);
        if (i.contains("modes")) {
            init.modes.clear();
            for (const json& m : i["modes"]) {
                reject_unknown(m, {"k", "amp", "phase"}, "solver.initial.modes[]");
                init.modes.push_back({m.value("k", 1), m.value("amp", 0.1), m.value("phase", 0.0)});
            }
        }
    }

    AuxFunctions aux = build_aux(eq.Q, eq.t_domain, eq.constants);
    Bindings law_bind;
    for (const char* cname : {"c1", "c2", "c3", "ct1", "ct2", "ct3"}) {
        Symbol cs = symtab().must(cname);
        if (!eq.constants.count(cs)) law_bind.constants[cs] = 1.0;
    }

    std::vector<MonitoredLaw> laws;
    if (s.contains("monitor"))
        for (const json& m : s["monitor"]) {
            std::string name = m.get<std::string>();
            auto id = catalog_id(name);
            if (!id) throw ConfigError("unknown monitor law '" + name + "'");
            ConservedVector cv = catalog_vector(*id, eq, aux, cfg.sampling, cfg.tolerance);
            laws.push_back({name, cv.T, cv.X, 2});
        }
    if (s.contains("probe"))
        laws.push_back({"probe", parse_expr_cfg(s["probe"], "solver.probe"), zero(), 2});

    SimulationResult result = simulate(eq, grid, init.sample(grid), opt, laws, law_bind);

    CommandResult out;
    out.report["command"] = "simulate";
    out.report["schema"] = 1;
    out.report["seed"] = cfg.sampling.seed;
    out.report["config"] = cfg.raw;
    out.report["grid"] = {{"N", grid.N}, {"period", grid.period}};
    out.report["failed"] = result.failed;
    if (result.failed) out.report["failure"] = result.failure;
    out.report["min_u"] = result.min_u;
    json f = json::array();
    for (const auto& series : result.functionals)
        f.push_back({{"name", series.name},
                     {"initial", series.initial},
                     {"drift", series.drift()},
                     {"corrected_drift", series.corrected_drift()},
                     {"x_weighted", series.x_weighted}});
    out.report["functionals"] = f;
    out.exit_code = result.failed ? 1 : 0;

    std::ostringstream csv;
    csv << "t";
    for (const auto& series : result.functionals)
        csv << "," << series.name << "," << series.name << "_drift";
    csv << "\n";
    for (size_t i = 0; i < result.times.size(); ++i) {
        csv << detail::fmt_double(result.times[i]);
        for (const auto& series : result.functionals) {
            double F = series.values[i];
            double drift = std::abs(F - series.initial) / std::max(std::abs(series.initial), 1e-30);
            csv << "," << detail::fmt_double(F) << "," << detail::fmt_double(drift);
        }
        csv << "\n";
    }
    out.csv = csv.str();
    return out;
}

// ---------------------------------------------------------------------------
// dispatch

inline CommandResult run_command(const std::string& command, const json& config,
                                 std::optional<uint64_t> seed_override = {},
                                 std::optional<double> tol_override = {}) {
    RunConfig cfg = load_config(config);
    if (seed_override) cfg.sampling.seed = *seed_override;
    if (tol_override) {
        cfg.tolerance = *tol_override;
        cfg.sampling.tolerance = *tol_override;
    }
    if (command == "classify") return cmd_classify(cfg);
    if (command == "transform") return cmd_transform(cfg);
    if (command == "check-symmetry") return cmd_check_symmetry(cfg);
    if (command == "check-adjoint") return cmd_check_adjoint(cfg);
    if (command == "check-claw") return cmd_check_claw(cfg);
    if (command == "list-claws") return cmd_list_claws(cfg);
    if (command == "simulate") return cmd_simulate(cfg);
    throw ConfigError("unknown command: " + command);
}

} // namespace cli
} // namespace gardner
