// Classified Lie point symmetries of the canonical equation
//   u_t + A(t) u^n u_x + u^{2n} u_x + u_xxx + Q(t) u = 0
// and their two independent certificates: the five-equation determining
// system and the prolongation criterion pr3(v)(Delta) = 0 on shell.
#pragma once

#include "gardner/model.hpp"

namespace gardner {

enum class SymmetryCaseId { Arbitrary, Case1, Case2, Case3 };

inline const char* to_string(SymmetryCaseId id) {
    switch (id) {
        case SymmetryCaseId::Arbitrary: return "arbitrary";
        case SymmetryCaseId::Case1: return "case1";
        case SymmetryCaseId::Case2: return "case2";
        case SymmetryCaseId::Case3: return "case3";
    }
    return "?";
}

struct CaseMatch {
    SymmetryCaseId id = SymmetryCaseId::Arbitrary;
    std::map<std::string, Expr> fitted; // a, b, c, d where applicable
    std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Structural coefficient matching: e = k * (b*t + c)^p with k, b, c, p free
// of t.

namespace detail {

struct PowerForm {
    Expr k, b, c, p;
};

inline std::optional<PowerForm> match_power_form(const Expr& e,
                                                 const std::map<Symbol, double>& consts) {
    if (e.is_zero()) return std::nullopt;
    std::vector<Expr> pre;
    Expr core = e;
    if (e.op() == Op::Prod) {
        std::vector<Expr> dep;
        for (const auto& kid : e.kids())
            (t_free(kid) ? pre : dep).push_back(kid);
        if (dep.size() != 1) return std::nullopt;
        core = dep[0];
    } else if (t_free(e)) {
        return std::nullopt; // constant coefficient is not in this family
    }
    Expr k = make_prod(pre);
    Expr base = core, p = one();
    if (core.op() == Op::Pow) {
        base = core.kids()[0];
        p = core.kids()[1];
        if (!t_free(p)) return std::nullopt;
    }
    auto lin = match_linear_t(base, consts);
    if (!lin) return std::nullopt;
    return PowerForm{k, lin->b, lin->c, p};
}

inline bool expr_zero_at(const Expr& e, const std::map<Symbol, double>& consts) {
    if (e.is_zero()) return true;
    auto v = try_eval_const(e, consts);
    return v && std::abs(*v) < 1e-12;
}

inline bool expr_equal_at(const Expr& a, const Expr& b,
                          const std::map<Symbol, double>& consts) {
    if (a == b) return true;
    return expr_zero_at(a - b, consts);
}

} // namespace detail

// Structural case classification with fitted parameters. The (b*t + c)
// representation is scaled so that A and Q share the same base.
inline CaseMatch classify_equation(const GardnerEquation& eq) {
    CaseMatch m;
    if (!eq.is_canonical()) {
        m.notes.push_back("equation is not canonical (B = C = 1 required); apply the reduction first");
        return m;
    }
    if (eq.n == Rat(1, 2) && eq.A.expr.is_zero()) {
        m.id = SymmetryCaseId::Case3;
        return m;
    }
    auto qf = detail::match_power_form(eq.Q.expr, eq.constants);
    if (!qf || !detail::expr_equal_at(qf->p, rational(-1), eq.constants)) return m;

    auto af = detail::match_power_form(eq.A.expr, eq.constants);
    if (!af) return m;
    // same linear base up to scale: b_A * c_Q == b_Q * c_A
    if (!detail::expr_zero_at(af->b * qf->c - qf->b * af->c, eq.constants)) return m;
    if (detail::expr_zero_at(af->b, eq.constants)) {
        m.notes.push_back("b = 0 degenerates the scaling generator and is excluded");
        return m;
    }
    // rescale Q's k to A's (b, c) representation
    Expr d_q = qf->k * af->b / qf->b;

    if (eq.n == Rat(1)) {
        // Case 2: A = a (b t + c)^{-d}, Q = b d (b t + c)^{-1}
        Expr d_fit = -af->p;
        if (!detail::expr_equal_at(d_q, af->b * d_fit, eq.constants)) {
            m.notes.push_back("Q coefficient does not equal b*d from A's exponent");
            return m;
        }
        if (detail::expr_zero_at(d_fit, eq.constants)) {
            m.notes.push_back("d = 0 is excluded");
            return m;
        }
        m.id = SymmetryCaseId::Case2;
        m.fitted = {{"a", af->k}, {"b", af->b}, {"c", af->c}, {"d", d_fit}};
        return m;
    }
    // Case 1: A = a (b t + c)^{-1/3}, Q = d (b t + c)^{-1}, n != 1
    if (!detail::expr_equal_at(af->p, rational(-1, 3), eq.constants)) return m;
    m.id = SymmetryCaseId::Case1;
    m.fitted = {{"a", af->k}, {"b", af->b}, {"c", af->c}, {"d", d_q}};
    return m;
}

// ---------------------------------------------------------------------------
// Generator catalog

inline Generator translation_generator() { return {zero(), one(), zero(), "v1"}; }

inline std::vector<Generator> generators_for(SymmetryCaseId id, const GardnerEquation& eq) {
    auto& tab = symtab();
    Expr n_e = rational(eq.n);
    switch (id) {
        case SymmetryCaseId::Arbitrary:
            return {translation_generator()};
        case SymmetryCaseId::Case1: {
            if (eq.n == Rat(1)) throw Error("case1 requires n != 1");
            Expr tau = parse("b*t + c");
            Expr xi = parse("b/3*x");
            Expr eta = -parse("b")/(3 * n_e) * sym(tab.u(0, 0));
            return {translation_generator(), Generator{tau, xi, eta, "v2"}};
        }
        case SymmetryCaseId::Case2: {
            if (!(eq.n == Rat(1))) throw Error("case2 requires n = 1");
            auto dit = eq.constants.find(tab.must("d"));
            if (dit == eq.constants.end())
                throw Error("case2 needs a numeric value for d to pick the beta branch");
            double d = dit->second;
            Expr gamma = parse("(3*d-1)*a*b/6*(b*t+c)^(-d)");
            Expr beta = std::abs(d - 0.5) < 1e-12
                            ? parse("a^2*log(b*t+c)/12")
                            : parse("(3*d-1)*a^2/(6*(1-2*d))*(b*t+c)^(1-2*d)");
            Expr tau = parse("b*t + c");
            Expr xi = parse("b/3*x") + beta;
            Expr eta = gamma - parse("b/3") * sym(tab.u(0, 0));
            return {translation_generator(), Generator{tau, xi, eta, "v2'"}};
        }
        case SymmetryCaseId::Case3: {
            if (!(eq.n == Rat(1, 2)) || !eq.A.expr.is_zero())
                throw Error("case3 requires n = 1/2 and A = 0");
            // tau = a / sqrt(2 Q^2 + Q_t) needs a positive radicand on the domain
            Expr radicand = bind_equation(parse("2*Q^2 + Q_t"), eq);
            for (int i = 0; i < 33; ++i) {
                JetPoint p;
                p.t = eq.t_domain.mid((i + 0.5) / 33.0);
                double r;
                try {
                    r = eval(radicand, p, eq.bindings());
                } catch (const EvalError&) {
                    break;
                }
                if (!(r > 0))
                    throw Error("case3 needs 2*Q^2 + Q_t > 0 on the t-domain (t=" +
                                std::to_string(p.t) + ")");
            }
            Expr tau = parse("a*(2*Q^2+Q_t)^(-1/2)");
            Expr tau_t = partial(tau, tab.t());
            Expr tau_tt = partial(tau_t, tab.t());
            Expr x_e = sym(tab.x());
            Expr u_e = sym(tab.u(0, 0));
            Generator v_tau{tau, tau_t / 3 * x_e, tau_tt / 3 * x_e - 2 * tau_t / 3 * u_e, "v_tau"};
            Expr beta = parse("b*L + c");
            Generator v_beta{zero(), beta, partial(beta, tab.t()), "v_beta"};
            return {v_tau, v_beta};
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Certificates

// The five residuals of the determining system for tau(t), xi(t,x), eta(t,x,u),
// with the equation's coefficient functions substituted.
inline std::vector<Expr> determining_residuals(const Generator& gen, const GardnerEquation& eq) {
    if (!eq.is_canonical()) throw Error("determining system is stated for the canonical form");
    auto& tab = symtab();
    Symbol t = tab.t(), x = tab.x(), u = tab.u(0, 0);
    const Expr& tau = gen.tau;
    const Expr& xi = gen.xi;
    const Expr& eta = gen.eta;
    Expr u_e = sym(u);
    Expr n_e = sym(tab.must("n"));
    Expr A = sym(tab.must("A")), Q = sym(tab.must("Q"));
    Expr Qt = sym(tab.coeff_deriv(tab.must("Q"), 1, 0));
    Expr At = sym(tab.coeff_deriv(tab.must("A"), 1, 0));

    Expr eta_u = partial(eta, u), eta_x = partial(eta, x), eta_t = partial(eta, t);
    Expr xi_x = partial(xi, x), xi_t = partial(xi, t);

    Expr r1 = partial(eta_u, u);
    Expr r2 = partial(eta_u, x) - partial(xi_x, x);
    Expr r3 = partial(tau, t) - 3 * xi_x;
    Expr r4 = tau * u_e * Qt - eta_u * u_e * Q + 3 * xi_x * u_e * Q + eta * Q +
              eta_x * make_pow(u_e, n_e) * A + eta_x * make_pow(u_e, 2 * n_e) +
              partial(partial(eta_x, x), x) + eta_t;
    Expr r5 = tau * make_pow(u_e, n_e + 1) * At + 2 * xi_x * make_pow(u_e, n_e + 1) * A +
              n_e * eta * make_pow(u_e, n_e) * A + 2 * xi_x * make_pow(u_e, 2 * n_e + 1) +
              2 * n_e * eta * make_pow(u_e, 2 * n_e) +
              3 * partial(partial(eta_u, x), x) * u_e - partial(partial(xi_x, x), x) * u_e -
              xi_t * u_e;

    std::vector<Expr> rows = {r1, r2, r3, r4, r5};
    for (auto& r : rows) r = bind_equation(r, eq);
    return rows;
}

// pr3(v)(Delta) reduced on shell; a zero verdict certifies the symmetry
// independently of the determining system.
inline Expr invariance_residual(const Generator& gen, const GardnerEquation& eq) {
    if (!eq.is_canonical()) throw Error("invariance criterion is stated for the canonical form");
    Expr pr = prolong3(gen, residual(eq));
    return on_shell_reduce(bind_equation(pr, eq), eq);
}

// eta - tau*u_t - xi*u_x at a concrete point.
inline double invariant_surface(const Generator& gen, const JetPoint& pt,
                                const Bindings& bind = {}) {
    return eval(gen.characteristic(), pt, bind);
}

struct GeneratorVerification {
    std::vector<IdentityVerdict> determining;
    IdentityVerdict invariance;

    bool determining_hold() const {
        for (const auto& v : determining)
            if (!v.holds) return false;
        return true;
    }
    bool all_hold() const { return determining_hold() && invariance.holds; }
};

inline GeneratorVerification verify_generator(const Generator& gen, const GardnerEquation& eq,
                                              const AuxFunctions& aux, const SamplingSpec& spec,
                                              double tol) {
    GeneratorVerification out;
    Bindings bind = eq.bindings();
    bind.merge(aux.numeric);
    for (const Expr& row : determining_residuals(gen, eq))
        out.determining.push_back(
            check_identity(bind_aux(row, aux), std::nullopt, spec, tol, bind));
    Expr inv = bind_aux(invariance_residual(gen, eq), aux);
    out.invariance = check_identity(inv, std::nullopt, spec, tol, bind);
    return out;
}

} // namespace gardner
