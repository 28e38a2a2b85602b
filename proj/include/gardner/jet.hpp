// Jet-space calculus: numeric jet points, expression evaluation, total
// derivatives, third prolongation, Euler operators, on-shell reduction and
// the randomized identity checker used to certify every symbolic claim.
#pragma once

#include "gardner/parse.hpp"

#include <array>
#include <functional>
#include <limits>
#include <optional>

namespace gardner {

// ---------------------------------------------------------------------------
// Numeric jet points

struct JetPoint {
    double t = 0, x = 0;
    // value of d^{i+j} u / dt^i dx^j at (i, j); i <= 1, pure-x chain to 7
    std::array<std::array<double, kMaxJetOrder + 1>, 2> u{};
    std::array<std::array<double, kMaxJetOrder + 1>, 2> v{};
    bool has_v = false;

    static bool index_ok(int dt, int dx) {
        if (dt < 0 || dx < 0 || dt > 1) return false;
        if (dt == 0) return dx <= kMaxJetOrder;
        return dx <= kMaxJetOrder - 1;
    }

    double jet(int base, int dt, int dx) const {
        if (!index_ok(dt, dx))
            throw EvalError("jet value not stored: " + SymbolTable::jet_name(base, dt, dx));
        return base == 0 ? u[dt][dx] : v[dt][dx];
    }
    void set_jet(int base, int dt, int dx, double val) {
        if (!index_ok(dt, dx))
            throw EvalError("jet value not stored: " + SymbolTable::jet_name(base, dt, dx));
        (base == 0 ? u : v)[dt][dx] = val;
    }
};

// Numeric bindings for named constants and coefficient functions. Functions
// are called with the point's (t, x).
struct Bindings {
    std::map<Symbol, double> constants;
    std::map<Symbol, std::function<double(double, double)>> functions;

    bool bound(Symbol s) const {
        return constants.count(s) || functions.count(s);
    }
    void merge(const Bindings& o) {
        for (const auto& [k, v] : o.constants) constants.emplace(k, v);
        for (const auto& [k, v] : o.functions) functions.emplace(k, v);
    }
};

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64; stable across platforms)

struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed) {}
    uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    double uniform() { return (double)(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

// ---------------------------------------------------------------------------
// Quadrature (shared with the coefficient services)

namespace detail {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6 * (fa + 4 * flm + fm);
    double right = (b - m) / 6 * (fm + 4 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol)
        return left + right + delta / 15;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

} // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-10) {
    if (a == b) return 0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
        throw EvalError("quadrature failure: non-finite integrand");
    double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

struct EvalCtx {
    const JetPoint& pt;
    const Bindings& bind;
    std::unordered_map<const ExprNode*, std::pair<double, double>> memo; // value, magnitude
};

inline std::pair<double, double> eval_impl(const Expr& e, EvalCtx& ctx);

inline double eval_symbol(Symbol s, EvalCtx& ctx) {
    auto& tab = symtab();
    const auto& rec = tab.rec(s);
    switch (rec.kind) {
        case SymKind::Independent:
            return s == tab.t() ? ctx.pt.t : ctx.pt.x;
        case SymKind::Jet:
            return ctx.pt.jet(rec.jet_base, rec.dt, rec.dx);
        default: {
            auto it = ctx.bind.constants.find(s);
            if (it != ctx.bind.constants.end()) return it->second;
            auto fit = ctx.bind.functions.find(s);
            if (fit != ctx.bind.functions.end()) return fit->second(ctx.pt.t, ctx.pt.x);
            throw EvalError("unbound symbol: " + rec.name);
        }
    }
}

inline std::pair<double, double> eval_impl(const Expr& e, EvalCtx& ctx) {
    switch (e.op()) {
        case Op::Rational:
        case Op::Real: {
            double v = e.numeric_value();
            return {v, std::abs(v)};
        }
        case Op::Sym: {
            double v = eval_symbol(e.node().sym, ctx);
            return {v, std::abs(v)};
        }
        default:
            break;
    }
    auto mit = ctx.memo.find(e.raw());
    if (mit != ctx.memo.end()) return mit->second;
    std::pair<double, double> r{0, 0};
    switch (e.op()) {
        case Op::Sum: {
            double s = 0, mag = 0;
            for (const auto& k : e.kids()) {
                auto [kv, km] = eval_impl(k, ctx);
                s += kv;
                mag = std::max(mag, std::max(std::abs(kv), km));
            }
            r = {s, mag};
            break;
        }
        case Op::Prod: {
            double p = 1, mag = 1;
            for (const auto& k : e.kids()) {
                auto [kv, km] = eval_impl(k, ctx);
                p *= kv;
                mag *= std::max(std::abs(kv), km);
            }
            r = {p, mag};
            break;
        }
        case Op::Pow: {
            auto [b, bm] = eval_impl(e.kids()[0], ctx);
            auto [x, xm] = eval_impl(e.kids()[1], ctx);
            (void)bm; (void)xm;
            double val;
            if (b > 0) {
                val = std::pow(b, x);
            } else if (b == 0) {
                if (x > 0) val = 0;
                else throw DomainError("zero base with non-positive exponent in " + render(e));
            } else {
                double rx = std::round(x);
                if (std::abs(x - rx) < 1e-9) val = std::pow(b, rx);
                else throw DomainError("fractional power of non-positive base in " + render(e));
            }
            r = {val, std::abs(val)};
            break;
        }
        case Op::Exp: {
            double a = eval_impl(e.kids()[0], ctx).first;
            double val = std::exp(a);
            r = {val, val};
            break;
        }
        case Op::Log: {
            double a = eval_impl(e.kids()[0], ctx).first;
            if (a <= 0) throw DomainError("log of non-positive value in " + render(e));
            double val = std::log(a);
            r = {val, std::abs(val)};
            break;
        }
        case Op::Integral: {
            Symbol var = e.node().sym;
            const Expr& f = e.kids()[0];
            double hi = eval_symbol(var, ctx);
            JetPoint moved = ctx.pt;
            auto g = [&](double s) {
                JetPoint q = moved;
                if (var == symtab().t()) q.t = s;
                else if (var == symtab().x()) q.x = s;
                else throw EvalError("integral over non-independent variable");
                EvalCtx c2{q, ctx.bind, {}};
                return eval_impl(f, c2).first;
            };
            double val = adaptive_simpson(g, 0.0, hi, 1e-10);
            r = {val, std::abs(val)};
            break;
        }
        default:
            break;
    }
    ctx.memo.emplace(e.raw(), r);
    return r;
}

} // namespace detail

inline double eval(const Expr& e, const JetPoint& pt, const Bindings& bind = {}) {
    detail::EvalCtx ctx{pt, bind, {}};
    return detail::eval_impl(e, ctx).first;
}

// Value together with a cancellation-aware magnitude (the largest additive
// term encountered at any sum level).
inline std::pair<double, double> eval_scaled(const Expr& e, const JetPoint& pt,
                                             const Bindings& bind = {}) {
    detail::EvalCtx ctx{pt, bind, {}};
    return detail::eval_impl(e, ctx);
}

// ---------------------------------------------------------------------------
// Total derivatives

enum class Dir { T, X };

inline std::vector<Symbol> jet_symbols(const Expr& e) {
    std::vector<Symbol> out;
    for (Symbol s : free_symbols(e))
        if (s.kind() == SymKind::Jet) out.push_back(s);
    return out;
}

inline int max_jet_dx(const Expr& e) {
    int m = 0;
    for (Symbol s : jet_symbols(e)) m = std::max(m, symtab().rec(s).dx);
    return m;
}

inline Expr total_derivative(const Expr& e, Dir dir) {
    auto& tab = symtab();
    std::vector<Expr> terms;
    terms.push_back(partial(e, dir == Dir::T ? tab.t() : tab.x()));
    for (Symbol s : jet_symbols(e)) {
        Expr pe = partial(e, s);
        if (pe.is_zero()) continue;
        const auto& rec = tab.rec(s);
        Symbol raised = tab.jet(rec.jet_base, rec.dt + (dir == Dir::T ? 1 : 0),
                                rec.dx + (dir == Dir::X ? 1 : 0));
        terms.push_back(make_prod({pe, sym(raised)}));
    }
    return make_sum(std::move(terms));
}

inline Expr Dx(const Expr& e) { return total_derivative(e, Dir::X); }
inline Expr Dt(const Expr& e) { return total_derivative(e, Dir::T); }

inline Expr Dx_n(Expr e, int n) {
    for (int i = 0; i < n; ++i) e = Dx(e);
    return e;
}

// ---------------------------------------------------------------------------
// Generators and prolongation

struct Generator {
    Expr tau, xi, eta;
    std::string label;

    Generator() = default;
    Generator(Expr tau_, Expr xi_, Expr eta_, std::string label_ = "")
        : tau(std::move(tau_)), xi(std::move(xi_)), eta(std::move(eta_)),
          label(std::move(label_)) {}

    // Characteristic W = eta - tau*u_t - xi*u_x.
    Expr characteristic() const {
        auto& tab = symtab();
        return eta - tau * sym(tab.u(1, 0)) - xi * sym(tab.u(0, 1));
    }

    friend Generator operator+(const Generator& a, const Generator& b) {
        return {a.tau + b.tau, a.xi + b.xi, a.eta + b.eta,
                a.label.empty() ? b.label : b.label.empty() ? a.label : a.label + "+" + b.label};
    }
    friend Generator operator*(const Expr& c, const Generator& g) {
        return {c * g.tau, c * g.xi, c * g.eta, g.label};
    }
};

namespace detail {

inline void require_deps(const Expr& e, std::initializer_list<Symbol> allowed_extra,
                         const std::string& what) {
    auto& tab = symtab();
    for (Symbol s : free_symbols(e)) {
        const auto& rec = tab.rec(s);
        if (rec.kind == SymKind::Constant || rec.kind == SymKind::Coefficient) continue;
        if (s == tab.t()) continue;
        bool ok = false;
        for (Symbol a : allowed_extra)
            if (s == a) ok = true;
        if (!ok)
            throw Error("generator component " + what + " depends on disallowed variable " + rec.name);
    }
}

} // namespace detail

// Third prolongation pr^(3) v applied to target;
// zeta_J = D_J(eta - tau*u_t - xi*u_x) + tau*u_{J,t} + xi*u_{J,x}.
inline Expr prolong3(const Generator& gen, const Expr& target) {
    auto& tab = symtab();
    detail::require_deps(gen.tau, {}, "tau");
    detail::require_deps(gen.xi, {tab.x()}, "xi");
    detail::require_deps(gen.eta, {tab.x(), tab.u(0, 0)}, "eta");

    Expr W = gen.characteristic();
    std::vector<Expr> terms;
    terms.push_back(gen.tau * partial(target, tab.t()));
    terms.push_back(gen.xi * partial(target, tab.x()));
    terms.push_back(gen.eta * partial(target, tab.u(0, 0)));
    for (Symbol s : jet_symbols(target)) {
        const auto& rec = tab.rec(s);
        if (rec.jet_base != 0)
            throw Error("prolong3: target mentions adjoint jets");
        if (rec.dt == 0 && rec.dx == 0) continue;
        Expr coeff = partial(target, s);
        if (coeff.is_zero()) continue;
        Expr zeta = W;
        for (int i = 0; i < rec.dt; ++i) zeta = Dt(zeta);
        for (int j = 0; j < rec.dx; ++j) zeta = Dx(zeta);
        zeta = zeta + gen.tau * sym(tab.jet(0, rec.dt + 1, rec.dx)) +
               gen.xi * sym(tab.jet(0, rec.dt, rec.dx + 1));
        terms.push_back(coeff * zeta);
    }
    return make_sum(std::move(terms));
}

// ---------------------------------------------------------------------------
// Euler operators

// Variational derivative with respect to w = u or v. The spatial-temporal
// form sums (-1)^{i+j} D_t^i D_x^j d/dw_{(i,j)} over all jets present; the
// spatial-only variant keeps i = 0 terms (E_u of the multiplier method).
inline Expr euler_operator(const Expr& e, int base, bool spatial_only = false) {
    auto& tab = symtab();
    std::vector<Expr> terms;
    for (Symbol s : jet_symbols(e)) {
        const auto& rec = tab.rec(s);
        if (rec.jet_base != base) continue;
        if (spatial_only && rec.dt > 0) continue;
        Expr d = partial(e, s);
        if (d.is_zero()) continue;
        for (int i = 0; i < rec.dt; ++i) d = Dt(d);
        for (int j = 0; j < rec.dx; ++j) d = Dx(d);
        if ((rec.dt + rec.dx) % 2 == 1) d = -d;
        terms.push_back(d);
    }
    return make_sum(std::move(terms));
}

inline Expr euler_u(const Expr& e, bool spatial_only = false) { return euler_operator(e, 0, spatial_only); }
inline Expr euler_v(const Expr& e) { return euler_operator(e, 1); }

// Higher spatial Euler operator E_u^{(k)} = sum_{j>=k} C(j,k) (-D_x)^{j-k} d/du_{(0,j)}.
inline Expr euler_higher(const Expr& e, int k) {
    auto& tab = symtab();
    std::vector<Expr> terms;
    for (Symbol s : jet_symbols(e)) {
        const auto& rec = tab.rec(s);
        if (rec.jet_base != 0 || rec.dt != 0 || rec.dx < k) continue;
        Expr d = partial(e, s);
        if (d.is_zero()) continue;
        long long binom = 1;
        for (int i = 0; i < k; ++i) binom = binom * (rec.dx - i) / (i + 1);
        for (int j = 0; j < rec.dx - k; ++j) d = Dx(d);
        if ((rec.dx - k) % 2 == 1) d = -d;
        terms.push_back(rational(binom) * d);
    }
    return make_sum(std::move(terms));
}

// ---------------------------------------------------------------------------
// On-shell reduction: substitute u_t -> rhs and u_{t,jx} -> D_x^j(rhs),
// recursively until no t-derivatives of u remain.

inline Expr on_shell_reduce_rhs(Expr e, const Expr& ut_rhs) {
    auto& tab = symtab();
    for (int pass = 0; pass < 8; ++pass) {
        std::map<Symbol, Expr> map;
        for (Symbol s : jet_symbols(e)) {
            const auto& rec = tab.rec(s);
            if (rec.jet_base != 0 || rec.dt == 0) continue;
            Expr rep = Dx_n(ut_rhs, rec.dx);
            for (int i = 1; i < rec.dt; ++i) rep = Dt(rep);
            map.emplace(s, rep);
        }
        if (map.empty()) return e;
        e = substitute(e, map);
    }
    throw Error("on-shell reduction did not terminate");
}

// ---------------------------------------------------------------------------
// Sampling and identity checking

struct Range {
    double lo = 0, hi = 1;
};

struct SamplingSpec {
    int count = 100;
    uint64_t seed = 42;
    double tolerance = 1e-9;
    Range t{0.1, 2.0};
    Range x{-1.0, 1.0};
    Range u{0.5, 2.0};
    Range deriv{-1.0, 1.0};
    Range v{-1.0, 1.0};
    Range constant{0.5, 2.0};
    Range coefficient{0.5, 2.0};
    Range coefficient_deriv{-0.3, 0.3};
    std::map<Symbol, Range> symbol_ranges;
};

struct IdentityVerdict {
    bool holds = true;
    double max_abs_residual = 0;
    double max_rel_residual = 0;
    int samples = 0;
    JetPoint worst_point;
    std::map<Symbol, double> worst_symbols;
};

inline JetPoint sample_jet(const SamplingSpec& spec, Rng& rng, bool with_v = true) {
    JetPoint p;
    p.t = rng.uniform(spec.t.lo, spec.t.hi);
    p.x = rng.uniform(spec.x.lo, spec.x.hi);
    p.u[0][0] = rng.uniform(spec.u.lo, spec.u.hi);
    for (int j = 1; j <= kMaxJetOrder; ++j) p.u[0][j] = rng.uniform(spec.deriv.lo, spec.deriv.hi);
    for (int j = 0; j < kMaxJetOrder; ++j) p.u[1][j] = rng.uniform(spec.deriv.lo, spec.deriv.hi);
    p.has_v = with_v;
    if (with_v) {
        for (int j = 0; j <= kMaxJetOrder; ++j) p.v[0][j] = rng.uniform(spec.v.lo, spec.v.hi);
        for (int j = 0; j < kMaxJetOrder; ++j) p.v[1][j] = rng.uniform(spec.v.lo, spec.v.hi);
    }
    return p;
}

inline std::vector<JetPoint> sample_jets(const SamplingSpec& spec, uint64_t seed) {
    auto check = [](const Range& r, const char* what) {
        if (!(r.lo <= r.hi)) throw Error(std::string("empty sampling range for ") + what);
    };
    check(spec.t, "t");
    check(spec.x, "x");
    check(spec.u, "u");
    check(spec.deriv, "derivatives");
    Rng rng(seed);
    std::vector<JetPoint> out;
    out.reserve(spec.count);
    for (int i = 0; i < spec.count; ++i) out.push_back(sample_jet(spec, rng));
    return out;
}

namespace detail {

inline Range symbol_range(const SamplingSpec& spec, Symbol s) {
    auto it = spec.symbol_ranges.find(s);
    if (it != spec.symbol_ranges.end()) return it->second;
    const auto& rec = symtab().rec(s);
    if (rec.kind == SymKind::Coefficient)
        return (rec.dt + rec.dx) > 0 ? spec.coefficient_deriv : spec.coefficient;
    return spec.constant;
}

} // namespace detail

// Probabilistic zero test: evaluates e at `spec.count` sampled jet points.
// Free constants and coefficient-function symbols that the caller has not
// bound are sampled per point. Holds iff |e| <= tol * (1 + scale) at every
// sample, where scale is the cancellation-aware magnitude from eval_scaled.
inline IdentityVerdict check_identity(const Expr& e,
                                      const std::optional<Expr>& ut_rhs,
                                      const SamplingSpec& spec, double tol,
                                      const Bindings& bound = {}) {
    Expr r = ut_rhs ? on_shell_reduce_rhs(e, *ut_rhs) : e;

    auto& tab = symtab();
    if (has_fractional_power_of(r, tab.u(0, 0)) && spec.u.lo <= 0)
        throw Error("fractional powers of u require a positive sampling range for u");

    std::vector<Symbol> to_sample;
    for (Symbol s : free_symbols(r)) {
        const auto& rec = tab.rec(s);
        if (rec.kind == SymKind::Jet || rec.kind == SymKind::Independent) continue;
        if (bound.bound(s)) continue;
        to_sample.push_back(s);
    }

    Rng rng(spec.seed);
    IdentityVerdict verdict;
    int n = std::max(spec.count, 1);
    for (int i = 0; i < n; ++i) {
        JetPoint pt = sample_jet(spec, rng);
        Bindings bind = bound;
        for (Symbol s : to_sample) {
            Range rg = detail::symbol_range(spec, s);
            bind.constants[s] = rng.uniform(rg.lo, rg.hi);
        }
        double val, mag;
        try {
            std::tie(val, mag) = eval_scaled(r, pt, bind);
        } catch (const EvalError& err) {
            throw EvalError(std::string(err.what()) + " [at t=" + std::to_string(pt.t) +
                            ", x=" + std::to_string(pt.x) + ", u=" + std::to_string(pt.u[0][0]) + "]");
        }
        double rel = std::abs(val) / (1.0 + mag);
        ++verdict.samples;
        if (std::abs(val) > verdict.max_abs_residual) verdict.max_abs_residual = std::abs(val);
        if (rel > verdict.max_rel_residual) {
            verdict.max_rel_residual = rel;
            verdict.worst_point = pt;
            verdict.worst_symbols.clear();
            for (Symbol s : to_sample) verdict.worst_symbols[s] = bind.constants[s];
        }
        if (std::abs(val) > tol * (1.0 + mag)) verdict.holds = false;
    }
    return verdict;
}

inline IdentityVerdict check_identity(const Expr& e, const SamplingSpec& spec,
                                      double tol, const Bindings& bound = {}) {
    return check_identity(e, std::nullopt, spec, tol, bound);
}

} // namespace gardner
