// The generalized variable-coefficient Gardner family
//   u_t + A(t) u^n u_x + C(t) u^{2n} u_x + B(t) u_xxx + Q(t) u = 0,
// its canonical subclass B = C = 1, and the antiderivative services for
// H(t) = int Q dt and L(t) = int e^{-H} dt.
#pragma once

#include "gardner/jet.hpp"

namespace gardner {

struct Interval {
    double lo = 0.1, hi = 2.0;
    double mid(double s) const { return lo + (hi - lo) * s; }
};

struct QuadratureSettings {
    double abs_tol = 1e-10;
    int grid_points = 2049;
};

// ---------------------------------------------------------------------------
// Coefficient functions of t

struct CoefficientFn {
    Expr expr;                            // expression in t (may hold named constants)
    std::optional<Expr> antiderivative;   // user-supplied closed form
    QuadratureSettings quad;

    CoefficientFn() : expr(zero()) {}
    CoefficientFn(Expr e) : expr(std::move(e)) {}
    CoefficientFn(const char* src) : expr(parse(src)) {}

    bool is_t_constant() const { return !contains_symbol(expr, symtab().t()); }
};

// ---------------------------------------------------------------------------
// Cumulative integral with a C^1 cubic-Hermite interpolant. Node derivatives
// are the integrand itself, so d/dt of the interpolant matches the integrand
// exactly at the nodes.

class CumulativeIntegral {
  public:
    CumulativeIntegral() = default;
    CumulativeIntegral(std::function<double(double)> f, Interval dom, QuadratureSettings q)
        : f_(std::move(f)), t0_(dom.lo) {
        int n = std::max(q.grid_points, 9);
        h_ = (dom.hi - dom.lo) / (n - 1);
        F_.resize(n);
        d_.resize(n);
        F_[0] = 0;
        d_[0] = f_(t0_);
        for (int i = 1; i < n; ++i) {
            double a = t0_ + (i - 1) * h_, b = t0_ + i * h_;
            F_[i] = F_[i - 1] + adaptive_simpson(f_, a, b, q.abs_tol / n);
            d_[i] = f_(b);
        }
    }

    double operator()(double t) const {
        double t1 = t0_ + h_ * (double)(F_.size() - 1);
        if (t < t0_) return -adaptive_simpson(f_, t, t0_, 1e-11);
        if (t > t1) return F_.back() + adaptive_simpson(f_, t1, t, 1e-11);
        double s = (t - t0_) / h_;
        size_t i = std::min((size_t)s, F_.size() - 2);
        double u = s - (double)i;
        double p0 = F_[i], p1 = F_[i + 1], m0 = d_[i] * h_, m1 = d_[i + 1] * h_;
        double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 +
               (-2 * u3 + 3 * u2) * p1 + (u3 - u2) * m1;
    }

  private:
    std::function<double(double)> f_;
    double t0_ = 0, h_ = 1;
    std::vector<double> F_, d_;
};

// ---------------------------------------------------------------------------
// Closed-form antiderivative table: constants, k*(b t + c)^p (power and log
// branches), k*e^{linear}; sums integrate term-wise. Everything else reports
// no match and the numeric service takes over.

namespace detail {

inline bool t_free(const Expr& e) {
    if (contains_symbol(e, symtab().t())) return false;
    for (Symbol s : free_symbols(e)) {
        SymKind k = s.kind();
        if (k == SymKind::Coefficient || k == SymKind::Jet) return false;
    }
    return true;
}

struct LinearInT {
    Expr b, c; // base = b*t + c
};

inline std::optional<LinearInT> match_linear_t(const Expr& base,
                                               const std::map<Symbol, double>& consts) {
    auto& tab = symtab();
    Expr b = partial(base, tab.t());
    if (b.is_zero() || !t_free(b)) return std::nullopt;
    Expr c = base - b * sym(tab.t());
    if (!t_free(c)) return std::nullopt;
    // b must be nonzero; decide numerically when symbolic
    if (b.is_numeric()) {
        if (b.numeric_value() == 0) return std::nullopt;
    } else {
        try {
            JetPoint p;
            Bindings bind;
            bind.constants = consts;
            if (std::abs(eval(b, p, bind)) < 1e-14) return std::nullopt;
        } catch (const EvalError&) {
            // undecidable without constants; accept and let evaluation report it
        }
    }
    return LinearInT{b, c};
}

inline std::optional<double> try_eval_const(const Expr& e, const std::map<Symbol, double>& consts) {
    try {
        JetPoint p;
        Bindings bind;
        bind.constants = consts;
        return eval(e, p, bind);
    } catch (const EvalError&) {
        return std::nullopt;
    }
}

inline std::optional<Expr> integrate_term(const Expr& term,
                                          const std::map<Symbol, double>& consts) {
    auto& tab = symtab();
    Symbol t = tab.t();
    if (t_free(term)) return term * sym(t); // constant rule

    // split numeric/t-free prefactor
    std::vector<Expr> pre;
    Expr core = term;
    if (term.op() == Op::Prod) {
        std::vector<Expr> dep;
        for (const auto& kid : term.kids())
            (t_free(kid) ? pre : dep).push_back(kid);
        if (dep.size() != 1) return std::nullopt;
        core = dep[0];
    }
    Expr k = make_prod(pre);

    Expr base = core, expo = one();
    if (core.op() == Op::Pow) {
        base = core.kids()[0];
        expo = core.kids()[1];
        if (!t_free(expo)) return std::nullopt;
    }

    if (core.op() == Op::Exp) {
        const Expr& arg = core.kids()[0];
        Expr p = partial(arg, t);
        if (!t_free(p) || p.is_zero()) return std::nullopt;
        Expr at0 = substitute(arg, t, zero());
        return k / p * (make_exp(arg) - make_exp(at0));
    }

    auto lin = match_linear_t(base, consts);
    if (!lin) return std::nullopt;

    bool is_minus_one = false;
    if (expo.is_rational()) {
        is_minus_one = expo.node().rat == Rat(-1);
    } else {
        auto pv = try_eval_const(expo, consts);
        if (!pv) return std::nullopt;
        is_minus_one = std::abs(*pv + 1.0) < 1e-12;
    }
    if (is_minus_one) return k / lin->b * make_log(base);
    Expr p1 = expo + 1;
    return k * make_pow(base, p1) / (lin->b * p1);
}

} // namespace detail

inline std::optional<Expr> antiderivative_closed(const Expr& g,
                                                 const std::map<Symbol, double>& consts = {}) {
    if (g.op() == Op::Sum) {
        std::vector<Expr> parts;
        for (const auto& term : g.kids()) {
            auto p = detail::integrate_term(term, consts);
            if (!p) return std::nullopt;
            parts.push_back(*p);
        }
        return make_sum(std::move(parts));
    }
    return detail::integrate_term(g, consts);
}

// ---------------------------------------------------------------------------
// Equation family

struct GardnerEquation {
    CoefficientFn A, B, C, Q;
    Rat n{1, 1};
    Interval t_domain;
    std::map<Symbol, double> constants; // numeric values of named constants
    Bindings numeric;                   // closures for opaque coefficient symbols
    bool warn_q_zero = false;
    bool warn_a_zero = false;

    Bindings bindings() const {
        Bindings b = numeric;
        for (const auto& [s, v] : constants) b.constants.emplace(s, v);
        return b;
    }

    bool is_canonical() const { return B.expr.is_one() && C.expr.is_one(); }

    double coeff_value(const CoefficientFn& f, double t) const {
        JetPoint p;
        p.t = t;
        return eval(f.expr, p, bindings());
    }
};

// The classified cases use A = 0 (Case 3) and Q = 0 specializations even though the
// family is usually stated with nonvanishing coefficients; only B*C != 0 is
// structural.
inline void validate(GardnerEquation& eq, int samples = 33) {
    if (!(eq.n.value() > 0)) throw Error("equation requires n > 0");
    eq.warn_q_zero = eq.Q.expr.is_zero();
    eq.warn_a_zero = eq.A.expr.is_zero();
    if (eq.B.expr.is_zero() || eq.C.expr.is_zero())
        throw Error("B and C must be nonvanishing");
    double sign = 0;
    for (int i = 0; i < samples; ++i) {
        double t = eq.t_domain.mid((i + 0.5) / samples);
        double bc;
        try {
            bc = eq.coeff_value(eq.B, t) * eq.coeff_value(eq.C, t);
        } catch (const EvalError&) {
            break; // symbolic coefficients: nothing to sample
        }
        if (!(std::abs(bc) > 1e-12) || (sign != 0 && bc * sign < 0))
            throw Error("B*C vanishes on the t-domain (t=" + std::to_string(t) + ")");
        sign = bc > 0 ? 1 : -1;
    }
}

inline GardnerEquation make_equation(CoefficientFn A, CoefficientFn B, CoefficientFn C,
                                     CoefficientFn Q, Rat n, Interval dom = {},
                                     std::map<Symbol, double> constants = {}) {
    GardnerEquation eq;
    eq.A = std::move(A);
    eq.B = std::move(B);
    eq.C = std::move(C);
    eq.Q = std::move(Q);
    eq.n = n;
    eq.t_domain = dom;
    eq.constants = std::move(constants);
    validate(eq);
    return eq;
}

inline GardnerEquation canonical_equation(CoefficientFn A, CoefficientFn Q, Rat n,
                                          Interval dom = {},
                                          std::map<Symbol, double> constants = {}) {
    return make_equation(std::move(A), CoefficientFn(one()), CoefficientFn(one()),
                         std::move(Q), n, dom, std::move(constants));
}

// Substitutes the equation's coefficient expressions (with their derivative
// chains) and the numeric n into e.
inline Expr bind_equation(const Expr& e, const GardnerEquation& eq) {
    auto& tab = symtab();
    Expr r = e;
    r = substitute_coefficient(r, tab.must("A"), eq.A.expr);
    r = substitute_coefficient(r, tab.must("B"), eq.B.expr);
    r = substitute_coefficient(r, tab.must("C"), eq.C.expr);
    r = substitute_coefficient(r, tab.must("Q"), eq.Q.expr);
    r = substitute(r, tab.must("n"), rational(eq.n));
    return r;
}

// Delta = u_t + A u^n u_x + C u^{2n} u_x + B u_xxx + Q u.
inline Expr residual(const GardnerEquation& eq) {
    auto& tab = symtab();
    Expr u = sym(tab.u(0, 0));
    Expr nn = rational(eq.n);
    Expr delta = sym(tab.u(1, 0)) + eq.A.expr * make_pow(u, nn) * sym(tab.u(0, 1)) +
                 eq.C.expr * make_pow(u, rational(2) * nn) * sym(tab.u(0, 1)) +
                 eq.B.expr * sym(tab.u(0, 3)) + eq.Q.expr * u;
    return delta;
}

// Right-hand side of u_t = ... used for on-shell reduction.
inline Expr onshell_rhs(const GardnerEquation& eq) {
    return -(residual(eq) - sym(symtab().u(1, 0)));
}

inline Expr on_shell_reduce(const Expr& e, const GardnerEquation& eq) {
    return on_shell_reduce_rhs(e, onshell_rhs(eq));
}

inline IdentityVerdict check_identity(const Expr& e, const GardnerEquation& eq,
                                      const SamplingSpec& spec, double tol,
                                      bool on_shell = false, const Bindings& extra = {}) {
    Bindings bind = eq.bindings();
    bind.merge(extra);
    std::optional<Expr> rhs;
    if (on_shell) rhs = onshell_rhs(eq);
    // rebinding matters: D_t may have reintroduced coefficient symbols (H' = Q)
    return check_identity(bind_equation(e, eq), rhs, spec, tol, bind);
}

// ---------------------------------------------------------------------------
// H(t) = int Q dt and L(t) = int e^{-H} dt

struct AuxFunctions {
    enum class Provenance { ClosedForm, NumericInterpolant };
    Expr H, L;
    Provenance provenance = Provenance::ClosedForm;
    Bindings numeric; // closures for symbols H and L on the numeric path
};

inline AuxFunctions build_aux(const CoefficientFn& Q, Interval dom,
                              const std::map<Symbol, double>& constants = {},
                              QuadratureSettings quad = {}) {
    auto& tab = symtab();
    AuxFunctions aux;
    std::optional<Expr> H = Q.antiderivative;
    if (!H) H = antiderivative_closed(Q.expr, constants);
    std::optional<Expr> L;
    if (H) L = antiderivative_closed(make_exp(-*H), constants);
    if (H && L) {
        aux.H = *H;
        aux.L = *L;
        aux.provenance = AuxFunctions::Provenance::ClosedForm;
        return aux;
    }

    aux.provenance = AuxFunctions::Provenance::NumericInterpolant;
    Bindings cbind;
    cbind.constants = constants;
    std::function<double(double)> h_of_t;
    if (H) {
        aux.H = *H;
        h_of_t = [He = *H, cbind](double t) {
            JetPoint p;
            p.t = t;
            return eval(He, p, cbind);
        };
    } else {
        auto q_of_t = [Qe = Q.expr, cbind](double t) {
            JetPoint p;
            p.t = t;
            return eval(Qe, p, cbind);
        };
        auto Hnum = std::make_shared<CumulativeIntegral>(q_of_t, dom, quad);
        aux.H = sym(tab.must("H"));
        aux.numeric.functions[tab.must("H")] = [Hnum](double t, double) { return (*Hnum)(t); };
        h_of_t = [Hnum](double t) { return (*Hnum)(t); };
    }
    auto Lnum = std::make_shared<CumulativeIntegral>(
        [h_of_t](double t) { return std::exp(-h_of_t(t)); }, dom, quad);
    aux.L = sym(tab.must("L"));
    aux.numeric.functions[tab.must("L")] = [Lnum](double t, double) { return (*Lnum)(t); };
    return aux;
}

// Substitutes closed-form H and L (when available) into e; on the numeric
// path the symbols stay and the bindings carry the interpolants.
inline Expr bind_aux(const Expr& e, const AuxFunctions& aux) {
    auto& tab = symtab();
    Expr r = e;
    if (aux.H != sym(tab.must("H"))) r = substitute_coefficient(r, tab.must("H"), aux.H);
    if (aux.L != sym(tab.must("L"))) r = substitute_coefficient(r, tab.must("L"), aux.L);
    return r;
}

} // namespace gardner
