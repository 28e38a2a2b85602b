// The equivalence group of the coefficient family and the concrete reduction
// to the canonical subclass B = C = 1. Transformed coefficients are
// re-expressed as functions of the new time through the affine inverse when
// available and through a cached monotone bisection otherwise. Jet pushforward
// follows the diagonal chain rule of the maps t~ = T(t), x~ = (x+shift)*scale,
// u~ = theta(t) u.
#pragma once

#include "gardner/model.hpp"

#include <atomic>

namespace gardner {

struct EquivalenceParams {
    double eps1 = 0, eps2 = 0, eps_r = 0;
    CoefficientFn alpha{sym(symtab().t())};
    CoefficientFn r{zero()};
};

struct TransformMaps {
    std::function<double(double)> t_map;
    std::function<double(double)> t_map_deriv;
    double x_shift = 0, x_scale = 1;
    std::function<double(double)> theta;
    std::function<double(double)> theta_t;
};

struct TransformedEquation {
    GardnerEquation eq_tilde;
    TransformMaps maps;
};

// ---------------------------------------------------------------------------
// Monotone inversion: coarse cached table plus bisection to 1e-12.

class MonotoneInverse {
  public:
    MonotoneInverse() = default;
    MonotoneInverse(std::function<double(double)> f, Interval dom, int table = 257)
        : f_(std::move(f)), lo_(dom.lo), hi_(dom.hi) {
        ts_.resize(table);
        ys_.resize(table);
        for (int i = 0; i < table; ++i) {
            ts_[i] = dom.lo + (dom.hi - dom.lo) * i / (table - 1);
            ys_[i] = f_(ts_[i]);
        }
        increasing_ = ys_.back() > ys_.front();
        for (size_t i = 1; i < ys_.size(); ++i) {
            double step = increasing_ ? ys_[i] - ys_[i - 1] : ys_[i - 1] - ys_[i];
            if (!(step > 0))
                throw Error("map is not strictly monotone on the domain");
        }
    }

    double operator()(double y) const {
        // bracket from the table, then bisect
        size_t j = 1;
        while (j < ys_.size() - 1 && (increasing_ ? ys_[j] < y : ys_[j] > y)) ++j;
        double a = ts_[j - 1], b = ts_[j];
        for (int it = 0; it < 90; ++it) {
            double m = 0.5 * (a + b);
            double fm = f_(m);
            if ((fm < y) == increasing_) a = m;
            else b = m;
            if (b - a < 1e-13 * std::max(1.0, std::abs(a))) break;
        }
        return 0.5 * (a + b);
    }

  private:
    std::function<double(double)> f_;
    double lo_ = 0, hi_ = 1;
    std::vector<double> ts_, ys_;
    bool increasing_ = true;
};

namespace detail {

// alpha = k*t + m with t-free k, m (k decidable nonzero); the closed-form
// re-parameterization path
inline std::optional<std::pair<Expr, Expr>> affine_in_t(const Expr& e,
                                                        const std::map<Symbol, double>& consts) {
    auto lin = match_linear_t(e, consts);
    if (!lin) return std::nullopt;
    // quadratic and higher are rejected by match_linear_t already (b must be t-free)
    return std::make_pair(lin->b, lin->c);
}

inline Symbol fresh_coefficient(const char* stem) {
    static std::atomic<int> counter{0};
    return symtab().declare_coefficient(std::string(stem) + std::to_string(counter++));
}

inline std::function<double(double)> coeff_closure(const Expr& e,
                                                   const std::map<Symbol, double>& consts) {
    Bindings bind;
    bind.constants = consts;
    return [e, bind](double t) {
        JetPoint p;
        p.t = t;
        return eval(e, p, bind);
    };
}

struct Reparam {
    CoefficientFn fn;       // expression in the new time (or an opaque symbol)
    std::optional<std::pair<Symbol, std::function<double(double, double)>>> binding;
};

// Re-expresses g(t) as a function of t~ given t~ = fwd(t).
inline Reparam reparameterize(const Expr& g, const char* stem,
                              const std::optional<Expr>& fwd_expr,
                              const std::function<double(double)>& fwd, Interval dom,
                              const std::map<Symbol, double>& consts) {
    Reparam out;
    std::optional<std::pair<Expr, Expr>> aff;
    if (fwd_expr) aff = affine_in_t(*fwd_expr, consts);
    if (aff) {
        auto& tab = symtab();
        Expr inv = (sym(tab.t()) - aff->second) / aff->first;
        out.fn = CoefficientFn(substitute(g, tab.t(), inv));
        return out;
    }
    auto invmap = std::make_shared<MonotoneInverse>(fwd, dom);
    auto gval = coeff_closure(g, consts);
    Symbol s = fresh_coefficient(stem);
    out.fn = CoefficientFn(sym(s));
    out.binding = {s, [invmap, gval](double ttil, double) { return gval((*invmap)(ttil)); }};
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// The group action on coefficients:
//   A~ = e^{n eps_r r + (1-n) eps1} A / alpha_t,  B~ = e^{3 eps1} B / alpha_t,
//   C~ = e^{2n eps_r r + (1-2n) eps1} C / alpha_t,  Q~ = (Q + eps_r r_t)/alpha_t,
//   n~ = n, all re-expressed in t~ = alpha(t).

inline TransformedEquation apply_group_full(const GardnerEquation& eq,
                                            const EquivalenceParams& p) {
    auto& tab = symtab();
    Expr alpha_t = partial(p.alpha.expr, tab.t());
    auto alpha_fn = detail::coeff_closure(p.alpha.expr, eq.constants);
    auto alpha_t_fn = detail::coeff_closure(alpha_t, eq.constants);
    for (int i = 0; i < 33; ++i) {
        double t = eq.t_domain.mid((i + 0.5) / 33);
        if (!(std::abs(alpha_t_fn(t)) > 1e-12))
            throw Error("alpha_t vanishes on the t-domain");
    }

    Expr n_e = rational(eq.n);
    Expr e1 = real_const(p.eps1);
    Expr er = real_const(p.eps_r);
    Expr At = make_exp(n_e * er * p.r.expr + (1 - n_e) * e1) * eq.A.expr / alpha_t;
    Expr Bt = make_exp(rational(3) * e1) * eq.B.expr / alpha_t;
    Expr Ct = make_exp(2 * n_e * er * p.r.expr + (1 - 2 * n_e) * e1) * eq.C.expr / alpha_t;
    Expr Qt = (eq.Q.expr + er * partial(p.r.expr, tab.t())) / alpha_t;

    TransformedEquation out;
    GardnerEquation& tilde = out.eq_tilde;
    tilde.n = eq.n;
    tilde.constants = eq.constants;
    double lo = alpha_fn(eq.t_domain.lo), hi = alpha_fn(eq.t_domain.hi);
    tilde.t_domain = {std::min(lo, hi), std::max(lo, hi)};

    const char* stems[4] = {"Aeq_", "Beq_", "Ceq_", "Qeq_"};
    Expr exprs[4] = {At, Bt, Ct, Qt};
    CoefficientFn* slots[4] = {&tilde.A, &tilde.B, &tilde.C, &tilde.Q};
    for (int i = 0; i < 4; ++i) {
        auto rp = detail::reparameterize(exprs[i], stems[i], p.alpha.expr, alpha_fn,
                                         eq.t_domain, eq.constants);
        *slots[i] = rp.fn;
        if (rp.binding) tilde.numeric.functions[rp.binding->first] = rp.binding->second;
    }
    validate(tilde);

    Expr theta = make_exp(e1 - er * p.r.expr);
    out.maps.t_map = alpha_fn;
    out.maps.t_map_deriv = alpha_t_fn;
    out.maps.x_shift = p.eps2;
    out.maps.x_scale = std::exp(p.eps1);
    out.maps.theta = detail::coeff_closure(theta, eq.constants);
    out.maps.theta_t = detail::coeff_closure(partial(theta, tab.t()), eq.constants);
    return out;
}

inline GardnerEquation apply_group(const GardnerEquation& eq, const EquivalenceParams& p) {
    return apply_group_full(eq, p).eq_tilde;
}

// Inverse group element (affine alpha only; the inverse map has no closed
// form otherwise).
inline EquivalenceParams inverse_params(const EquivalenceParams& p,
                                        const std::map<Symbol, double>& consts = {}) {
    auto aff = detail::affine_in_t(p.alpha.expr, consts);
    if (!aff) throw Error("inverse parameters need an affine alpha");
    auto& tab = symtab();
    Expr inv = (sym(tab.t()) - aff->second) / aff->first;
    EquivalenceParams q;
    q.eps1 = -p.eps1;
    q.eps2 = -p.eps2 * std::exp(-p.eps1);
    q.eps_r = -p.eps_r;
    q.alpha = CoefficientFn(inv);
    q.r = CoefficientFn(substitute(p.r.expr, tab.t(), inv));
    return q;
}

// ---------------------------------------------------------------------------
// Reduction to the canonical subclass:
//   t~ = e^{3 eps1} int B dt, x~ = (x + eps2) e^{eps1},
//   u~ = e^{-eps1/n} (B/C)^{-1/(2n)} u,
//   A~ = e^{-eps1} A / sqrt(B C), B~ = C~ = 1,
//   Q~ = e^{-3 eps1} (Q/B + C/(2n B^2) (B/C)_t).

inline TransformedEquation to_canonical(const GardnerEquation& eq, double eps1 = 0,
                                        double eps2 = 0) {
    auto& tab = symtab();
    for (int i = 0; i < 33; ++i) {
        double t = eq.t_domain.mid((i + 0.5) / 33);
        double ratio = eq.coeff_value(eq.B, t) / eq.coeff_value(eq.C, t);
        if (!(ratio > 0))
            throw Error("the canonical reduction needs B/C > 0 on the t-domain");
    }

    Expr e1 = real_const(eps1);
    Expr e3 = real_const(std::exp(3 * eps1));
    std::optional<Expr> Bint = eq.B.antiderivative;
    if (!Bint) Bint = antiderivative_closed(eq.B.expr, eq.constants);
    std::function<double(double)> bint_fn;
    std::optional<Expr> fwd_expr;
    if (Bint) {
        fwd_expr = e3 * *Bint;
        bint_fn = detail::coeff_closure(*fwd_expr, eq.constants);
    } else {
        auto numint = std::make_shared<CumulativeIntegral>(
            detail::coeff_closure(eq.B.expr, eq.constants), eq.t_domain, eq.B.quad);
        double scale = std::exp(3 * eps1);
        bint_fn = [numint, scale](double t) { return scale * (*numint)(t); };
    }

    Rat inv2n(-eq.n.den, 2 * eq.n.num); // -1/(2n)
    Expr ratio = eq.B.expr / eq.C.expr;
    Expr theta = make_exp(-e1 / rational(eq.n)) * make_pow(ratio, rational(inv2n));
    Expr At = make_exp(-e1) * eq.A.expr * make_pow(eq.B.expr * eq.C.expr, rational(-1, 2));
    Expr Qt = real_const(std::exp(-3 * eps1)) *
              (eq.Q.expr / eq.B.expr +
               eq.C.expr / (2 * rational(eq.n) * make_pow(eq.B.expr, rational(2))) *
                   partial(ratio, tab.t()));

    TransformedEquation out;
    GardnerEquation& tilde = out.eq_tilde;
    tilde.n = eq.n;
    tilde.constants = eq.constants;
    tilde.B = CoefficientFn(one());
    tilde.C = CoefficientFn(one());
    double lo = bint_fn(eq.t_domain.lo), hi = bint_fn(eq.t_domain.hi);
    tilde.t_domain = {std::min(lo, hi), std::max(lo, hi)};

    auto rpA = detail::reparameterize(At, "Acan_", fwd_expr, bint_fn, eq.t_domain, eq.constants);
    auto rpQ = detail::reparameterize(Qt, "Qcan_", fwd_expr, bint_fn, eq.t_domain, eq.constants);
    tilde.A = rpA.fn;
    tilde.Q = rpQ.fn;
    if (rpA.binding) tilde.numeric.functions[rpA.binding->first] = rpA.binding->second;
    if (rpQ.binding) tilde.numeric.functions[rpQ.binding->first] = rpQ.binding->second;
    validate(tilde);

    out.maps.t_map = bint_fn;
    out.maps.t_map_deriv = detail::coeff_closure(e3 * eq.B.expr, eq.constants);
    out.maps.x_shift = eps2;
    out.maps.x_scale = std::exp(eps1);
    out.maps.theta = detail::coeff_closure(theta, eq.constants);
    out.maps.theta_t = detail::coeff_closure(partial(theta, tab.t()), eq.constants);
    return out;
}

// ---------------------------------------------------------------------------
// Jet pushforward under the diagonal maps (order <= 3 is what the residual
// check needs; the whole stored jet is mapped).

inline JetPoint pushforward_jet(const JetPoint& p, const TransformMaps& m) {
    JetPoint q;
    q.t = m.t_map(p.t);
    q.x = (p.x + m.x_shift) * m.x_scale;
    q.has_v = false;
    double th = m.theta(p.t);
    double tht = m.theta_t(p.t);
    double Tt = m.t_map_deriv(p.t);
    double sc = 1;
    for (int j = 0; j <= kMaxJetOrder; ++j) {
        q.u[0][j] = th * p.u[0][j] * sc;
        if (j <= kMaxJetOrder - 1) q.u[1][j] = (tht * p.u[0][j] + th * p.u[1][j]) * sc / Tt;
        sc /= m.x_scale;
    }
    return q;
}

inline JetPoint pushforward_jet(const JetPoint& p, const TransformedEquation& tr) {
    return pushforward_jet(p, tr.maps);
}

} // namespace gardner
