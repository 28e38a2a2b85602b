// Immutable symbolic expression trees over independent variables, jet
// coordinates, coefficient functions of t (or t,x) and named constants.
// Normalization is deliberately light: flatten sums/products, fold numeric
// constants, merge like terms/factors, sort operands canonically. No
// polynomial expansion, no factoring.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gardner {

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct SymbolError : Error {
    using Error::Error;
};

struct JetOrderError : Error {
    using Error::Error;
};

struct EvalError : Error {
    using Error::Error;
};

struct DomainError : EvalError {
    using EvalError::EvalError;
};

// ---------------------------------------------------------------------------
// Exact rationals (fall back to doubles on overflow)

struct Rat {
    long long num = 0;
    long long den = 1;

    Rat() = default;
    Rat(long long n) : num(n), den(1) {}
    Rat(long long n, long long d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw Error("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    bool is_integer() const { return den == 1; }
    bool is_zero() const { return num == 0; }
    double value() const { return double(num) / double(den); }

    friend bool operator==(const Rat& a, const Rat& b) {
        return a.num == b.num && a.den == b.den;
    }
};

namespace detail {

inline std::optional<long long> narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) return std::nullopt;
    return (long long)v;
}

inline std::optional<Rat> rat_make(__int128 n, __int128 d) {
    if (d == 0) return std::nullopt;
    if (d < 0) { n = -n; d = -d; }
    __int128 an = n < 0 ? -n : n;
    __int128 g = 1;
    { // gcd on __int128
        __int128 x = an, y = d;
        while (y) { __int128 r = x % y; x = y; y = r; }
        g = x == 0 ? 1 : x;
    }
    n /= g; d /= g;
    auto nn = narrow(n), dd = narrow(d);
    if (!nn || !dd) return std::nullopt;
    Rat r; r.num = *nn; r.den = *dd;
    return r;
}

inline std::optional<Rat> rat_add(const Rat& a, const Rat& b) {
    return rat_make((__int128)a.num * b.den + (__int128)b.num * a.den,
                    (__int128)a.den * b.den);
}
inline std::optional<Rat> rat_mul(const Rat& a, const Rat& b) {
    return rat_make((__int128)a.num * b.num, (__int128)a.den * b.den);
}
inline std::optional<Rat> rat_pow(const Rat& a, long long e) {
    Rat r(1);
    Rat base = a;
    bool invert = e < 0;
    unsigned long long k = invert ? (unsigned long long)(-e) : (unsigned long long)e;
    if (invert && a.num == 0) return std::nullopt;
    while (k) {
        if (k & 1) {
            auto m = rat_mul(r, base);
            if (!m) return std::nullopt;
            r = *m;
        }
        auto s = rat_mul(base, base);
        if (!s) { if (k > 1) return std::nullopt; }
        else base = *s;
        k >>= 1;
    }
    if (invert) { if (r.num == 0) return std::nullopt; return Rat(r.den * (r.num < 0 ? -1 : 1), r.num < 0 ? -r.num : r.num); }
    return r;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Symbols

enum class SymKind : uint8_t { Independent, Jet, Coefficient, Constant };

struct Symbol {
    uint32_t id = 0;
    friend bool operator==(Symbol a, Symbol b) { return a.id == b.id; }
    friend bool operator!=(Symbol a, Symbol b) { return a.id != b.id; }
    friend bool operator<(Symbol a, Symbol b) { return a.id < b.id; }
    const std::string& name() const;
    SymKind kind() const;
};

// Derivative bookkeeping caps. Pure-x jets go one past the generic order cap
// because on-shell substitution of u_{txxx} needs D_x^3 of a third-order
// right-hand side.
inline constexpr int kMaxJetOrder = 7;
inline constexpr int kMaxJetT = 2;

class SymbolTable {
  public:
    struct Rec {
        std::string name;
        SymKind kind = SymKind::Constant;
        int jet_base = -1;     // 0 = u, 1 = v
        int dt = 0, dx = 0;    // jet multi-index, or coefficient derivative counts
        bool dep_t = false;    // coefficient depends on t
        bool dep_x = false;    // coefficient depends on x (only q)
        uint32_t root = 0;     // base symbol for coefficient-derivative chains
        int special = 0;       // 1: d/dt -> Q, 2: d/dt -> exp(-H)
    };

    SymbolTable() {
        add_independent("t");
        add_independent("x");
        for (int base = 0; base < 2; ++base)
            for (int i = 0; i <= kMaxJetT; ++i)
                for (int j = 0; i + j <= kMaxJetOrder; ++j)
                    add_jet(base, i, j);
        add_coeff("A");
        add_coeff("B");
        add_coeff("C");
        add_coeff("Q");
        add_coeff("H", 1);
        add_coeff("L", 2);
        add_coeff("p");
        add_coeff_tx("q");
        add_coeff("alpha");
        add_coeff("beta");
        add_coeff("gamma");
        add_coeff("tau");
        add_coeff("r");
        for (const char* c : {"n", "a", "b", "c", "d", "k", "c1", "c2", "c3",
                              "ct1", "ct2", "ct3", "eps1", "eps2", "eps_r"})
            declare_constant(c);
    }

    const Rec& rec(Symbol s) const { return recs_.at(s.id); }

    std::optional<Symbol> lookup(std::string_view name) const {
        auto it = by_name_.find(std::string(name));
        if (it == by_name_.end()) return std::nullopt;
        return Symbol{it->second};
    }

    Symbol must(std::string_view name) const {
        auto s = lookup(name);
        if (!s) throw SymbolError("unknown symbol: " + std::string(name));
        return *s;
    }

    Symbol t() const { return Symbol{0}; }
    Symbol x() const { return Symbol{1}; }

    Symbol jet(int base, int dt, int dx) const {
        if (dt < 0 || dx < 0 || dt > kMaxJetT || dt + dx > kMaxJetOrder)
            throw JetOrderError("jet order overflow: " + jet_name(base, dt, dx));
        auto it = by_name_.find(jet_name(base, dt, dx));
        return Symbol{it->second};
    }

    Symbol u(int dt = 0, int dx = 0) const { return jet(0, dt, dx); }
    Symbol v(int dt = 0, int dx = 0) const { return jet(1, dt, dx); }

    // Derivative symbol of a coefficient function, created on demand.
    Symbol coeff_deriv(Symbol s, int add_dt, int add_dx) {
        const Rec r = recs_.at(s.id);
        if (r.kind != SymKind::Coefficient)
            throw SymbolError("not a coefficient function: " + r.name);
        const Rec& root = recs_.at(r.root);
        int dt = r.dt + add_dt, dx = r.dx + add_dx;
        std::string nm = root.name;
        if (dt + dx > 0) {
            nm += "_";
            nm += std::string(dt, 't');
            nm += std::string(dx, 'x');
        }
        auto it = by_name_.find(nm);
        if (it != by_name_.end()) return Symbol{it->second};
        Rec nr = root;
        nr.name = nm;
        nr.dt = dt;
        nr.dx = dx;
        nr.special = 0;
        return add(nr);
    }

    Symbol declare_constant(std::string_view name) {
        auto it = by_name_.find(std::string(name));
        if (it != by_name_.end()) {
            if (recs_[it->second].kind != SymKind::Constant)
                throw SymbolError("name already declared as non-constant: " + std::string(name));
            return Symbol{it->second};
        }
        Rec r;
        r.name = std::string(name);
        r.kind = SymKind::Constant;
        return add(r);
    }

    // Registers an opaque coefficient function of t (numerically backed).
    Symbol declare_coefficient(std::string_view name) {
        auto it = by_name_.find(std::string(name));
        if (it != by_name_.end()) return Symbol{it->second};
        Rec r;
        r.name = std::string(name);
        r.kind = SymKind::Coefficient;
        r.dep_t = true;
        Symbol s = add(r);
        recs_[s.id].root = s.id;
        return s;
    }

    std::vector<std::string> declared_names() const {
        std::vector<std::string> out;
        out.reserve(recs_.size());
        for (const auto& r : recs_) out.push_back(r.name);
        return out;
    }

    static std::string jet_name(int base, int dt, int dx) {
        std::string nm = base == 0 ? "u" : "v";
        if (dt + dx > 0) {
            nm += "_";
            nm += std::string(dt, 't');
            nm += std::string(dx, 'x');
        }
        return nm;
    }

  private:
    Symbol add(Rec r) {
        uint32_t id = (uint32_t)recs_.size();
        by_name_[r.name] = id;
        recs_.push_back(std::move(r));
        return Symbol{id};
    }
    void add_independent(std::string name) {
        Rec r;
        r.name = std::move(name);
        r.kind = SymKind::Independent;
        add(r);
    }
    void add_jet(int base, int dt, int dx) {
        Rec r;
        r.name = jet_name(base, dt, dx);
        r.kind = SymKind::Jet;
        r.jet_base = base;
        r.dt = dt;
        r.dx = dx;
        add(r);
    }
    void add_coeff(std::string name, int special = 0) {
        Rec r;
        r.name = std::move(name);
        r.kind = SymKind::Coefficient;
        r.dep_t = true;
        r.special = special;
        Symbol s = add(r);
        recs_[s.id].root = s.id;
    }
    void add_coeff_tx(std::string name) {
        Rec r;
        r.name = std::move(name);
        r.kind = SymKind::Coefficient;
        r.dep_t = true;
        r.dep_x = true;
        Symbol s = add(r);
        recs_[s.id].root = s.id;
    }

    std::vector<Rec> recs_;
    std::unordered_map<std::string, uint32_t> by_name_;
};

inline SymbolTable& symtab() {
    static SymbolTable tab;
    return tab;
}

inline const std::string& Symbol::name() const { return symtab().rec(*this).name; }
inline SymKind Symbol::kind() const { return symtab().rec(*this).kind; }

// ---------------------------------------------------------------------------
// Expression nodes

enum class Op : uint8_t { Rational, Real, Sym, Pow, Exp, Log, Integral, Prod, Sum };

class Expr;

struct ExprNode {
    Op op = Op::Rational;
    Rat rat;
    double real = 0;
    Symbol sym{};          // Sym payload, or Integral variable
    std::vector<Expr> kids;
    bool pos_base = false; // Pow only: base assumed positive at evaluation
    size_t hash = 0;
};

class Expr {
  public:
    Expr() : p_(zero_node()) {}
    explicit Expr(std::shared_ptr<const ExprNode> p) : p_(std::move(p)) {}

    const ExprNode& node() const { return *p_; }
    const ExprNode* raw() const { return p_.get(); }
    Op op() const { return p_->op; }
    size_t hash() const { return p_->hash; }
    const std::vector<Expr>& kids() const { return p_->kids; }

    bool is_rational() const { return p_->op == Op::Rational; }
    bool is_numeric() const { return p_->op == Op::Rational || p_->op == Op::Real; }
    bool is_zero() const { return p_->op == Op::Rational && p_->rat.is_zero(); }
    bool is_one() const { return p_->op == Op::Rational && p_->rat == Rat(1); }
    bool is_sym() const { return p_->op == Op::Sym; }

    double numeric_value() const {
        return p_->op == Op::Rational ? p_->rat.value() : p_->real;
    }

    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

  private:
    static const std::shared_ptr<const ExprNode>& zero_node() {
        static const std::shared_ptr<const ExprNode> z = [] {
            auto n = std::make_shared<ExprNode>();
            n->op = Op::Rational;
            n->rat = Rat(0);
            n->hash = 0x9e3779b97f4a7c15ull;
            return std::shared_ptr<const ExprNode>(n);
        }();
        return z;
    }
    std::shared_ptr<const ExprNode> p_;
};

namespace detail {

inline size_t mix(size_t h, size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

inline size_t node_hash(const ExprNode& n) {
    size_t h = (size_t)n.op * 0x100000001b3ull + 0xcbf29ce484222325ull;
    switch (n.op) {
        case Op::Rational:
            h = mix(h, (size_t)n.rat.num);
            h = mix(h, (size_t)n.rat.den);
            break;
        case Op::Real: {
            uint64_t bits;
            static_assert(sizeof(bits) == sizeof(n.real));
            std::memcpy(&bits, &n.real, sizeof(bits));
            h = mix(h, (size_t)bits);
            break;
        }
        case Op::Sym:
            h = mix(h, n.sym.id);
            break;
        case Op::Integral:
            h = mix(h, n.sym.id);
            [[fallthrough]];
        default:
            for (const auto& k : n.kids) h = mix(h, k.hash());
    }
    return h;
}

inline Expr intern(ExprNode n) {
    n.hash = node_hash(n);
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

} // namespace detail

// Total structural order; also the canonical sort for commutative operands.
inline int cmp(const Expr& a, const Expr& b) {
    if (a.raw() == b.raw()) return 0;
    const ExprNode& x = a.node();
    const ExprNode& y = b.node();
    if (x.op != y.op) return x.op < y.op ? -1 : 1;
    switch (x.op) {
        case Op::Rational: {
            __int128 l = (__int128)x.rat.num * y.rat.den;
            __int128 r = (__int128)y.rat.num * x.rat.den;
            return l < r ? -1 : l > r ? 1 : 0;
        }
        case Op::Real:
            return x.real < y.real ? -1 : x.real > y.real ? 1 : 0;
        case Op::Sym:
            return x.sym.id < y.sym.id ? -1 : x.sym.id > y.sym.id ? 1 : 0;
        case Op::Integral:
            if (x.sym.id != y.sym.id) return x.sym.id < y.sym.id ? -1 : 1;
            break;
        default:
            break;
    }
    size_t na = x.kids.size(), nb = y.kids.size();
    for (size_t i = 0; i < std::min(na, nb); ++i) {
        int c = cmp(x.kids[i], y.kids[i]);
        if (c) return c;
    }
    return na < nb ? -1 : na > nb ? 1 : 0;
}

inline bool operator==(const Expr& a, const Expr& b) {
    if (a.raw() == b.raw()) return true;
    if (a.hash() != b.hash()) return false;
    return cmp(a, b) == 0;
}

struct ExprHash {
    size_t operator()(const Expr& e) const { return e.hash(); }
};
struct ExprEq {
    bool operator()(const Expr& a, const Expr& b) const { return a == b; }
};

// ---------------------------------------------------------------------------
// Builders (always produce normalized trees)

inline Expr rational(long long n, long long d = 1) {
    ExprNode node;
    node.op = Op::Rational;
    node.rat = Rat(n, d);
    return detail::intern(std::move(node));
}

inline Expr rational(const Rat& r) {
    ExprNode node;
    node.op = Op::Rational;
    node.rat = r;
    return detail::intern(std::move(node));
}

inline Expr real_const(double v) {
    // exact integers stay exact (keeps eps = 0 paths structurally clean)
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        ExprNode node;
        node.op = Op::Rational;
        node.rat = Rat((long long)v);
        return detail::intern(std::move(node));
    }
    ExprNode node;
    node.op = Op::Real;
    node.real = v;
    return detail::intern(std::move(node));
}

inline Expr sym(Symbol s) {
    ExprNode node;
    node.op = Op::Sym;
    node.sym = s;
    return detail::intern(std::move(node));
}

inline Expr sym(std::string_view name) { return sym(symtab().must(name)); }

inline Expr zero() { return rational(0); }
inline Expr one() { return rational(1); }

Expr make_sum(std::vector<Expr> terms);
Expr make_prod(std::vector<Expr> factors);
Expr make_pow(Expr base, Expr expo);
Expr make_exp(Expr arg);
Expr make_log(Expr arg);

inline Expr make_integral(Expr integrand, Symbol var) {
    ExprNode node;
    node.op = Op::Integral;
    node.sym = var;
    node.kids = {std::move(integrand)};
    return detail::intern(std::move(node));
}

namespace detail {

// Numeric accumulator: exact rational until a real contaminates or overflow.
struct NumC {
    bool is_real = false;
    Rat rat{1};
    double real = 1;

    static NumC from(const Expr& e) {
        NumC c;
        if (e.op() == Op::Rational) { c.rat = e.node().rat; }
        else { c.is_real = true; c.real = e.numeric_value(); }
        return c;
    }
    static NumC zero() { NumC c; c.rat = Rat(0); return c; }
    static NumC one() { return NumC{}; }

    double value() const { return is_real ? real : rat.value(); }
    bool is_zero() const { return is_real ? real == 0 : rat.is_zero(); }
    bool is_one() const { return !is_real && rat == Rat(1); }

    void degrade() { if (!is_real) { real = rat.value(); is_real = true; } }

    void add(const NumC& o) {
        if (is_real || o.is_real) { degrade(); real += o.value(); return; }
        auto r = rat_add(rat, o.rat);
        if (r) rat = *r;
        else { degrade(); real += o.value(); }
    }
    void mul(const NumC& o) {
        if (is_real || o.is_real) { degrade(); real *= o.value(); return; }
        auto r = rat_mul(rat, o.rat);
        if (r) rat = *r;
        else { degrade(); real *= o.value(); }
    }
    Expr expr() const { return is_real ? real_const(real) : rational(rat); }
};

inline Expr prod_from_sorted(std::vector<Expr> kids) {
    if (kids.empty()) return one();
    if (kids.size() == 1) return kids[0];
    ExprNode node;
    node.op = Op::Prod;
    node.kids = std::move(kids);
    return intern(std::move(node));
}

// Splits a normalized term into (numeric coefficient, symbolic core).
inline std::pair<NumC, Expr> split_coeff(const Expr& term) {
    if (term.is_numeric()) return {NumC::from(term), one()};
    if (term.op() == Op::Prod && term.kids().front().is_numeric()) {
        std::vector<Expr> rest(term.kids().begin() + 1, term.kids().end());
        return {NumC::from(term.kids().front()), prod_from_sorted(std::move(rest))};
    }
    return {NumC::one(), term};
}

inline std::pair<Expr, Expr> split_pow(const Expr& f) {
    if (f.op() == Op::Pow) return {f.kids()[0], f.kids()[1]};
    return {f, one()};
}

// Sign of the coefficient of the canonically largest core in a sum. Cores are
// sign-invariant, so exactly one of S and -S is positive-leading.
inline bool sum_leading_negative(const Expr& s) {
    const Expr* best_core = nullptr;
    double best_coeff = 0;
    Expr keep_core;
    for (const Expr& kid : s.kids()) {
        auto [coeff, core] = split_coeff(kid);
        if (!best_core || cmp(core, *best_core) > 0) {
            keep_core = core;
            best_core = &keep_core;
            best_coeff = coeff.value();
        }
    }
    return best_coeff < 0;
}

} // namespace detail

inline Expr make_sum(std::vector<Expr> terms) {
    using detail::NumC;
    NumC acc = NumC::zero();
    // bucket: core -> coefficient
    std::vector<std::pair<Expr, NumC>> buckets;
    std::unordered_map<Expr, size_t, ExprHash, ExprEq> index;
    auto add_term = [&](const Expr& t) {
        if (t.is_numeric()) { acc.add(NumC::from(t)); return; }
        auto [coeff, core] = detail::split_coeff(t);
        auto [it, inserted] = index.emplace(core, buckets.size());
        if (inserted) buckets.emplace_back(core, coeff);
        else buckets[it->second].second.add(coeff);
    };
    for (const auto& t : terms) {
        if (t.op() == Op::Sum)
            for (const auto& k : t.kids()) add_term(k);
        else
            add_term(t);
    }
    std::vector<Expr> out;
    out.reserve(buckets.size() + 1);
    if (!acc.is_zero()) out.push_back(acc.expr());
    for (auto& [core, coeff] : buckets) {
        if (coeff.is_zero()) continue;
        if (coeff.is_one()) { out.push_back(core); continue; }
        if (core.op() == Op::Prod) {
            std::vector<Expr> kids;
            kids.reserve(core.kids().size() + 1);
            kids.push_back(coeff.expr());
            kids.insert(kids.end(), core.kids().begin(), core.kids().end());
            out.push_back(detail::prod_from_sorted(std::move(kids)));
        } else {
            out.push_back(detail::prod_from_sorted({coeff.expr(), core}));
        }
    }
    if (out.empty()) return zero();
    if (out.size() == 1) return out[0];
    std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return cmp(a, b) < 0; });
    ExprNode node;
    node.op = Op::Sum;
    node.kids = std::move(out);
    return detail::intern(std::move(node));
}

inline Expr make_prod(std::vector<Expr> factors) {
    using detail::NumC;
    NumC acc = NumC::one();
    std::vector<std::pair<Expr, std::vector<Expr>>> bases; // base -> exponents
    std::unordered_map<Expr, size_t, ExprHash, ExprEq> index;
    std::vector<Expr> exp_args; // exp factors combine by adding arguments
    auto add_factor = [&](const Expr& f) {
        if (f.is_numeric()) { acc.mul(NumC::from(f)); return; }
        if (f.op() == Op::Exp) { exp_args.push_back(f.kids()[0]); return; }
        auto [b, e] = detail::split_pow(f);
        // sign-normalize sum factors so that S and -S share a core
        if (b.op() == Op::Sum && e.is_rational() && e.node().rat.is_integer() &&
            detail::sum_leading_negative(b)) {
            std::vector<Expr> neg;
            neg.reserve(b.kids().size());
            for (const Expr& kid : b.kids()) neg.push_back(make_prod({rational(-1), kid}));
            b = make_sum(std::move(neg));
            if (e.node().rat.num % 2 != 0) acc.mul(NumC::from(rational(-1)));
        }
        auto [it, inserted] = index.emplace(b, bases.size());
        if (inserted) bases.push_back({b, {e}});
        else bases[it->second].second.push_back(e);
    };
    for (const auto& f : factors) {
        if (f.op() == Op::Prod)
            for (const auto& k : f.kids()) add_factor(k);
        else
            add_factor(f);
    }
    if (acc.is_zero()) return zero();
    if (!exp_args.empty()) {
        Expr merged = make_exp(make_sum(std::move(exp_args)));
        exp_args.clear();
        if (merged.is_numeric()) acc.mul(NumC::from(merged));
        else if (merged.op() == Op::Exp) {
            bases.push_back({merged, {one()}});
        } else {
            // exp pulled powers back out (exp(k log b) folding); fold them in
            std::vector<Expr> fs = merged.op() == Op::Prod
                                       ? std::vector<Expr>(merged.kids().begin(), merged.kids().end())
                                       : std::vector<Expr>{merged};
            for (const auto& f : fs) {
                if (f.is_numeric()) { acc.mul(NumC::from(f)); continue; }
                auto [b, e] = detail::split_pow(f);
                auto [it, inserted] = index.emplace(b, bases.size());
                if (inserted) bases.push_back({b, {e}});
                else bases[it->second].second.push_back(e);
            }
        }
    }
    std::vector<Expr> out;
    out.reserve(bases.size() + 1);
    for (auto& [b, es] : bases) {
        Expr e = es.size() == 1 ? es[0] : make_sum(std::move(es));
        if (e.is_zero()) continue;
        Expr f = e.is_one() ? b : make_pow(b, e);
        if (f.is_numeric()) { acc.mul(NumC::from(f)); continue; }
        if (f.op() == Op::Prod) {
            for (const auto& k : f.kids()) {
                if (k.is_numeric()) acc.mul(NumC::from(k));
                else out.push_back(k);
            }
            continue;
        }
        out.push_back(f);
    }
    if (acc.is_zero()) return zero();
    if (out.empty()) return acc.expr();
    // numeric scalar times a bare sum distributes (keeps differentiation
    // confluent with like-term collection)
    if (!acc.is_one() && out.size() == 1 && out[0].op() == Op::Sum) {
        std::vector<Expr> ts;
        ts.reserve(out[0].kids().size());
        for (const auto& t : out[0].kids()) ts.push_back(make_prod({acc.expr(), t}));
        return make_sum(std::move(ts));
    }
    std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return cmp(a, b) < 0; });
    if (!acc.is_one()) out.insert(out.begin(), acc.expr());
    return detail::prod_from_sorted(std::move(out));
}

inline Expr make_pow(Expr base, Expr expo) {
    if (expo.is_zero()) return one();
    if (expo.is_one()) return base;
    if (base.is_one()) return one();
    const bool expo_int = expo.is_rational() && expo.node().rat.is_integer();
    if (base.op() == Op::Sum && expo_int && detail::sum_leading_negative(base)) {
        std::vector<Expr> neg;
        neg.reserve(base.kids().size());
        for (const Expr& kid : base.kids()) neg.push_back(make_prod({rational(-1), kid}));
        Expr flipped = make_pow(make_sum(std::move(neg)), expo);
        return expo.node().rat.num % 2 == 0 ? flipped
                                            : make_prod({rational(-1), flipped});
    }
    if (base.is_zero()) {
        if (expo.is_rational() && expo.node().rat.num > 0) return zero();
        // 0^negative or 0^symbolic: keep the node, evaluation reports it.
    }
    if (base.is_rational() && expo_int && !base.is_zero()) {
        long long k = expo.node().rat.num;
        if (k >= -32 && k <= 32) {
            auto r = detail::rat_pow(base.node().rat, k);
            if (r) return rational(*r);
        }
        double v = std::pow(base.numeric_value(), (double)k);
        if (std::isfinite(v)) return real_const(v);
    }
    if (base.op() == Op::Real && expo.is_numeric()) {
        double b = base.numeric_value(), e = expo.numeric_value();
        if (b > 0 || expo_int) {
            double v = std::pow(b, e);
            if (std::isfinite(v)) return real_const(v);
        }
    }
    if (base.op() == Op::Pow) {
        const Expr& ib = base.kids()[0];
        const Expr& ie = base.kids()[1];
        bool inner_int = ie.is_rational() && ie.node().rat.is_integer();
        // (b^p)^q folds when both are integers, or when b is assumed positive.
        if ((inner_int && expo_int) || base.node().pos_base)
            return make_pow(ib, make_prod({ie, expo}));
    }
    if (base.op() == Op::Exp) return make_exp(make_prod({base.kids()[0], expo}));
    if (base.op() == Op::Prod && expo_int) {
        long long k = expo.node().rat.num;
        if (k >= -8 && k <= 8) {
            std::vector<Expr> fs;
            fs.reserve(base.kids().size());
            for (const auto& f : base.kids()) fs.push_back(make_pow(f, expo));
            return make_prod(std::move(fs));
        }
    }
    ExprNode node;
    node.op = Op::Pow;
    node.pos_base = !expo_int;
    node.kids = {std::move(base), std::move(expo)};
    return detail::intern(std::move(node));
}

inline Expr make_exp(Expr arg) {
    if (arg.is_zero()) return one();
    if (arg.op() == Op::Real) return real_const(std::exp(arg.numeric_value()));
    if (arg.op() == Op::Log) return arg.kids()[0];
    // exp(k*log(b) + rest) -> b^k * exp(rest)
    std::vector<Expr> pow_factors;
    std::vector<Expr> rest;
    auto consume = [&](const Expr& term) {
        if (term.op() == Op::Log) {
            pow_factors.push_back(term.kids()[0]);
            return;
        }
        if (term.op() == Op::Prod) {
            const auto& ks = term.kids();
            size_t log_at = ks.size();
            for (size_t i = 0; i < ks.size(); ++i)
                if (ks[i].op() == Op::Log) {
                    if (log_at != ks.size()) { log_at = ks.size(); break; } // two logs: skip
                    log_at = i;
                }
            if (log_at != ks.size()) {
                std::vector<Expr> coeff;
                for (size_t i = 0; i < ks.size(); ++i)
                    if (i != log_at) coeff.push_back(ks[i]);
                pow_factors.push_back(make_pow(ks[log_at].kids()[0], make_prod(std::move(coeff))));
                return;
            }
        }
        rest.push_back(term);
    };
    if (arg.op() == Op::Sum)
        for (const auto& term : arg.kids()) consume(term);
    else
        consume(arg);
    if (!pow_factors.empty()) {
        if (!rest.empty()) {
            ExprNode node;
            node.op = Op::Exp;
            node.kids = {make_sum(std::move(rest))};
            pow_factors.push_back(detail::intern(std::move(node)));
        }
        return make_prod(std::move(pow_factors));
    }
    ExprNode node;
    node.op = Op::Exp;
    node.kids = {std::move(arg)};
    return detail::intern(std::move(node));
}

inline Expr make_log(Expr arg) {
    if (arg.is_one()) return zero();
    if (arg.op() == Op::Real) {
        double v = arg.numeric_value();
        if (v > 0) return real_const(std::log(v));
        throw DomainError("log of non-positive constant");
    }
    if (arg.op() == Op::Exp) return arg.kids()[0];
    ExprNode node;
    node.op = Op::Log;
    node.kids = {std::move(arg)};
    return detail::intern(std::move(node));
}

// Operator sugar
inline Expr operator+(const Expr& a, const Expr& b) { return make_sum({a, b}); }
inline Expr operator-(const Expr& a) { return make_prod({rational(-1), a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return make_sum({a, -b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return make_prod({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) { return make_prod({a, make_pow(b, rational(-1))}); }
inline Expr pow(const Expr& a, const Expr& b) { return make_pow(a, b); }
inline Expr pow(const Expr& a, long long k) { return make_pow(a, rational(k)); }
inline Expr exp(const Expr& a) { return make_exp(a); }
inline Expr log(const Expr& a) { return make_log(a); }
inline Expr operator*(long long k, const Expr& a) { return make_prod({rational(k), a}); }
inline Expr operator*(const Expr& a, long long k) { return make_prod({rational(k), a}); }
inline Expr operator/(const Expr& a, long long k) { return make_prod({a, rational(1, k)}); }
inline Expr operator+(const Expr& a, long long k) { return make_sum({a, rational(k)}); }
inline Expr operator+(long long k, const Expr& a) { return make_sum({rational(k), a}); }
inline Expr operator-(const Expr& a, long long k) { return make_sum({a, rational(-k)}); }
inline Expr operator-(long long k, const Expr& a) { return make_sum({rational(k), -a}); }

// ---------------------------------------------------------------------------
// Scans

inline void free_symbols(const Expr& e, std::set<Symbol>& out) {
    switch (e.op()) {
        case Op::Sym: out.insert(e.node().sym); break;
        case Op::Integral: out.insert(e.node().sym); [[fallthrough]];
        default:
            for (const auto& k : e.kids()) free_symbols(k, out);
    }
}

inline std::set<Symbol> free_symbols(const Expr& e) {
    std::set<Symbol> s;
    free_symbols(e, s);
    return s;
}

inline bool contains_symbol(const Expr& e, Symbol s) {
    if (e.op() == Op::Sym) return e.node().sym == s;
    if (e.op() == Op::Integral && e.node().sym == s) return true;
    for (const auto& k : e.kids())
        if (contains_symbol(k, s)) return true;
    return false;
}

// True if any subexpression is a power with non-integer (or symbolic)
// exponent whose base mentions the given symbol.
inline bool has_fractional_power_of(const Expr& e, Symbol s) {
    if (e.op() == Op::Pow) {
        const Expr& expo = e.kids()[1];
        bool frac = !(expo.is_rational() && expo.node().rat.is_integer());
        if (frac && contains_symbol(e.kids()[0], s)) return true;
    }
    if (e.op() == Op::Log && contains_symbol(e.kids()[0], s)) return true;
    for (const auto& k : e.kids())
        if (has_fractional_power_of(k, s)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Partial differentiation (all symbols independent; coefficient functions
// chain through their stored t / x dependence)

namespace detail {

inline Expr partial_impl(const Expr& e, Symbol s,
                         std::unordered_map<const ExprNode*, Expr>& memo);

inline Expr partial_symbol(Symbol y, Symbol s) {
    if (y == s) return one();
    auto& tab = symtab();
    const auto& rec = tab.rec(y);
    if (rec.kind != SymKind::Coefficient) return zero();
    if (s == tab.t() && rec.dep_t) {
        if (rec.special == 1) return sym(tab.must("Q"));          // H' = Q
        if (rec.special == 2) return make_exp(-sym(tab.must("H"))); // L' = e^-H
        return sym(tab.coeff_deriv(y, 1, 0));
    }
    if (s == tab.x() && rec.dep_x) return sym(tab.coeff_deriv(y, 0, 1));
    return zero();
}

inline Expr partial_impl(const Expr& e, Symbol s,
                         std::unordered_map<const ExprNode*, Expr>& memo) {
    switch (e.op()) {
        case Op::Rational:
        case Op::Real:
            return zero();
        case Op::Sym:
            return partial_symbol(e.node().sym, s);
        default:
            break;
    }
    auto it = memo.find(e.raw());
    if (it != memo.end()) return it->second;
    Expr result = zero();
    switch (e.op()) {
        case Op::Sum: {
            std::vector<Expr> ts;
            ts.reserve(e.kids().size());
            for (const auto& k : e.kids()) ts.push_back(partial_impl(k, s, memo));
            result = make_sum(std::move(ts));
            break;
        }
        case Op::Prod: {
            std::vector<Expr> ts;
            const auto& ks = e.kids();
            for (size_t i = 0; i < ks.size(); ++i) {
                Expr d = partial_impl(ks[i], s, memo);
                if (d.is_zero()) continue;
                std::vector<Expr> fs;
                fs.reserve(ks.size());
                for (size_t j = 0; j < ks.size(); ++j) fs.push_back(j == i ? d : ks[j]);
                ts.push_back(make_prod(std::move(fs)));
            }
            result = make_sum(std::move(ts));
            break;
        }
        case Op::Pow: {
            const Expr& b = e.kids()[0];
            const Expr& x = e.kids()[1];
            Expr db = partial_impl(b, s, memo);
            Expr dx = partial_impl(x, s, memo);
            if (dx.is_zero()) {
                if (db.is_zero()) { result = zero(); break; }
                result = make_prod({x, make_pow(b, x - 1), db});
            } else if (db.is_zero()) {
                result = make_prod({e, make_log(b), dx});
            } else {
                result = make_prod({e, make_sum({make_prod({dx, make_log(b)}),
                                                 make_prod({x, db, make_pow(b, rational(-1))})})});
            }
            break;
        }
        case Op::Exp:
            result = make_prod({e, partial_impl(e.kids()[0], s, memo)});
            break;
        case Op::Log:
            result = make_prod({partial_impl(e.kids()[0], s, memo),
                                make_pow(e.kids()[0], rational(-1))});
            break;
        case Op::Integral: {
            if (e.node().sym == s) { result = e.kids()[0]; break; }
            Expr d = partial_impl(e.kids()[0], s, memo);
            result = d.is_zero() ? zero() : make_integral(d, e.node().sym);
            break;
        }
        default:
            break;
    }
    memo.emplace(e.raw(), result);
    return result;
}

} // namespace detail

inline Expr partial(const Expr& e, Symbol s) {
    std::unordered_map<const ExprNode*, Expr> memo;
    return detail::partial_impl(e, s, memo);
}

inline Expr partial(const Expr& e, std::string_view name) { return partial(e, symtab().must(name)); }

// ---------------------------------------------------------------------------
// Substitution

namespace detail {

inline Expr substitute_impl(const Expr& e, const std::map<Symbol, Expr>& map,
                            std::unordered_map<const ExprNode*, Expr>& memo) {
    if (e.is_numeric()) return e;
    if (e.op() == Op::Sym) {
        auto it = map.find(e.node().sym);
        return it != map.end() ? it->second : e;
    }
    auto mit = memo.find(e.raw());
    if (mit != memo.end()) return mit->second;
    std::vector<Expr> kids;
    kids.reserve(e.kids().size());
    bool changed = false;
    for (const auto& k : e.kids()) {
        Expr nk = substitute_impl(k, map, memo);
        changed = changed || nk.raw() != k.raw();
        kids.push_back(std::move(nk));
    }
    Expr result = e;
    if (changed) {
        switch (e.op()) {
            case Op::Sum: result = make_sum(std::move(kids)); break;
            case Op::Prod: result = make_prod(std::move(kids)); break;
            case Op::Pow: result = make_pow(kids[0], kids[1]); break;
            case Op::Exp: result = make_exp(kids[0]); break;
            case Op::Log: result = make_log(kids[0]); break;
            case Op::Integral: result = make_integral(kids[0], e.node().sym); break;
            default: break;
        }
    }
    memo.emplace(e.raw(), result);
    return result;
}

} // namespace detail

inline Expr substitute(const Expr& e, const std::map<Symbol, Expr>& map) {
    if (map.empty()) return e;
    std::unordered_map<const ExprNode*, Expr> memo;
    return detail::substitute_impl(e, map, memo);
}

inline Expr substitute(const Expr& e, Symbol s, const Expr& g) {
    return substitute(e, std::map<Symbol, Expr>{{s, g}});
}

// Substitutes a coefficient function together with every derivative symbol of
// it that occurs in e (A -> g, A_t -> dg/dt, ...).
inline Expr substitute_coefficient(const Expr& e, Symbol base, const Expr& g) {
    auto& tab = symtab();
    std::map<Symbol, Expr> map;
    for (Symbol s : free_symbols(e)) {
        const auto& rec = tab.rec(s);
        if (rec.kind != SymKind::Coefficient) continue;
        if (Symbol{rec.root} != base) continue;
        Expr d = g;
        for (int i = 0; i < rec.dt; ++i) d = partial(d, tab.t());
        for (int i = 0; i < rec.dx; ++i) d = partial(d, tab.x());
        map.emplace(s, d);
    }
    return substitute(e, map);
}

// Distributes products over sums (and expands small integer powers of sums).
// Not part of normalization; used where term-wise structure is required.
inline Expr expand_distribute(const Expr& e) {
    switch (e.op()) {
        case Op::Rational:
        case Op::Real:
        case Op::Sym:
            return e;
        case Op::Sum: {
            std::vector<Expr> ts;
            ts.reserve(e.kids().size());
            for (const auto& k : e.kids()) ts.push_back(expand_distribute(k));
            return make_sum(std::move(ts));
        }
        case Op::Prod: {
            std::vector<std::vector<Expr>> groups;
            for (const auto& k : e.kids()) {
                Expr g = expand_distribute(k);
                if (g.op() == Op::Sum)
                    groups.push_back({g.kids().begin(), g.kids().end()});
                else
                    groups.push_back({g});
            }
            std::vector<Expr> terms{one()};
            for (const auto& g : groups) {
                std::vector<Expr> next;
                next.reserve(terms.size() * g.size());
                if (terms.size() * g.size() > 200000)
                    throw Error("expansion too large");
                for (const auto& t : terms)
                    for (const auto& f : g) next.push_back(make_prod({t, f}));
                terms = std::move(next);
            }
            return make_sum(std::move(terms));
        }
        case Op::Pow: {
            Expr b = expand_distribute(e.kids()[0]);
            const Expr& x = e.kids()[1];
            if (b.op() == Op::Sum && x.is_rational() && x.node().rat.is_integer()) {
                long long k = x.node().rat.num;
                if (k >= 2 && k <= 8) {
                    std::vector<Expr> terms{one()};
                    for (long long i = 0; i < k; ++i) {
                        std::vector<Expr> next;
                        next.reserve(terms.size() * b.kids().size());
                        for (const auto& t : terms)
                            for (const auto& f : b.kids()) next.push_back(make_prod({t, f}));
                        terms = std::move(next);
                    }
                    return make_sum(std::move(terms));
                }
            }
            return make_pow(b, x);
        }
        case Op::Exp: return make_exp(e.kids()[0]);
        case Op::Log: return make_log(e.kids()[0]);
        case Op::Integral: return e;
    }
    return e;
}

} // namespace gardner
