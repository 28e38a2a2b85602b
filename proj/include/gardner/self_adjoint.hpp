// Formal Lagrangian L = v*Delta, the adjoint equation F* = delta(L)/delta(u),
// and the nonlinear self-adjointness substitutions v = phi(t,x,u) = p(t)u + q(t,x).
// The proportionality factor lambda is forced to -phi_u by the u_xxx and u_t
// coefficients, so self-adjointness is certified by one residual identity.
#pragma once

#include "gardner/model.hpp"

namespace gardner {

enum class AdjointBranch { General, NHalfAZero };

struct Substitution {
    Expr phi, p, q;
    AdjointBranch branch = AdjointBranch::General;
};

inline Expr formal_lagrangian(const GardnerEquation& eq) {
    return sym(symtab().v(0, 0)) * residual(eq);
}

// Executed derivation, not a transcription.
inline Expr adjoint_equation(const GardnerEquation& eq) {
    return euler_u(formal_lagrangian(eq));
}

// Theorem form of F* for the canonical equation, with the equation's
// coefficients substituted; used to cross-check the derivation.
inline Expr adjoint_equation_closed_form(const GardnerEquation& eq) {
    return bind_equation(parse("Q*v - u^(2*n)*v_x - v_xxx - u^n*A*v_x - v_t"), eq);
}

// Replaces the adjoint variable and its jets by the substitution phi and its
// total derivatives.
inline Expr substitute_adjoint(const Expr& e, const Expr& phi) {
    auto& tab = symtab();
    std::map<Symbol, Expr> map;
    for (Symbol s : jet_symbols(e)) {
        const auto& rec = tab.rec(s);
        if (rec.jet_base != 1) continue;
        Expr d = phi;
        for (int i = 0; i < rec.dt; ++i) d = Dt(d);
        for (int j = 0; j < rec.dx; ++j) d = Dx(d);
        map.emplace(s, d);
    }
    return substitute(e, map);
}

inline Substitution theorem3_substitution(const GardnerEquation& eq, AdjointBranch branch) {
    auto& tab = symtab();
    Substitution sub;
    sub.branch = branch;
    Expr u = sym(tab.u(0, 0));
    if (branch == AdjointBranch::NHalfAZero) {
        if (!(eq.n == Rat(1, 2)) || !eq.A.expr.is_zero())
            throw Error("the special branch needs n = 1/2 and A = 0");
        sub.p = parse("c1*exp(2*H) - c2*exp(2*H)*L");
        sub.q = parse("(c2*x + c3)*exp(H)");
    } else {
        sub.p = parse("c1*exp(2*H)");
        sub.q = parse("c2*exp(H)");
    }
    sub.phi = sub.p * u + sub.q;
    if (sub.phi.is_zero()) throw Error("substitution phi must not vanish identically");
    return sub;
}

// F*|_{v=phi} + phi_u * Delta. Nonlinear self-adjointness of the equation
// under phi is equivalent to this vanishing identically in all jet variables
// (checked off shell).
inline Expr self_adjointness_residual(const GardnerEquation& eq, const Substitution& sub) {
    Expr fstar = adjoint_equation(eq);
    Expr phi_u = partial(sub.phi, symtab().u(0, 0));
    Expr res = substitute_adjoint(fstar, sub.phi) + phi_u * residual(eq);
    return bind_equation(res, eq);
}

// Definition-level taxonomy, evaluated structurally on phi.
inline bool is_self_adjoint_substitution(const Substitution& sub) {
    return sub.phi == sym(symtab().u(0, 0));
}

inline bool is_quasi_self_adjoint_substitution(const Substitution& sub) {
    auto& tab = symtab();
    if (partial(sub.phi, tab.u(0, 0)).is_zero()) return false;
    for (Symbol s : free_symbols(sub.phi)) {
        if (s == tab.u(0, 0) || s.kind() == SymKind::Constant) continue;
        return false; // depends on t, x or a coefficient function
    }
    return true;
}

inline bool is_weak_self_adjoint_substitution(const Substitution& sub) {
    auto& tab = symtab();
    if (partial(sub.phi, tab.u(0, 0)).is_zero()) return false;
    bool space_time = !partial(sub.phi, tab.x()).is_zero() ||
                      !partial(sub.phi, tab.t()).is_zero() ||
                      contains_symbol(sub.phi, tab.must("H")) ||
                      contains_symbol(sub.phi, tab.must("L"));
    return space_time;
}

} // namespace gardner
