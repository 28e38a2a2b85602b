#include "doctest.h"

#include "gardner/jet.hpp"

#include <cmath>

using namespace gardner;

namespace {

// Analytic jet of u = 1.5 + 0.4*sin(1.3 x + 0.7 t), v = 0.8 + 0.2*sin(0.9 x - 0.4 t + 1)
JetPoint fn_jet(double t, double x) {
    JetPoint p;
    p.t = t;
    p.x = x;
    p.has_v = true;
    const double au = 0.4, ku = 1.3, wu = 0.7;
    const double av = 0.2, kv = 0.9, wv = -0.4;
    for (int i = 0; i <= 1; ++i)
        for (int j = 0; j <= kMaxJetOrder - i; ++j) {
            double thu = ku * x + wu * t + 0.5 * M_PI * (i + j);
            double thv = kv * x + wv * t + 1.0 + 0.5 * M_PI * (i + j);
            double base_u = (i + j == 0) ? 1.5 : 0.0;
            double base_v = (i + j == 0) ? 0.8 : 0.0;
            p.u[i][j] = base_u + au * std::pow(ku, j) * std::pow(wu, i) * std::sin(thu);
            p.v[i][j] = base_v + av * std::pow(kv, j) * std::pow(wv, i) * std::sin(thv);
        }
    return p;
}

Bindings smooth_coeffs() {
    Bindings b;
    auto& tab = symtab();
    b.functions[tab.must("A")] = [](double t, double) { return 1.2 + 0.3 * std::sin(t); };
    b.functions[tab.coeff_deriv(tab.must("A"), 1, 0)] = [](double t, double) { return 0.3 * std::cos(t); };
    b.functions[tab.must("Q")] = [](double t, double) { return 0.8 + 0.2 * std::cos(t); };
    b.functions[tab.coeff_deriv(tab.must("Q"), 1, 0)] = [](double t, double) { return -0.2 * std::sin(t); };
    b.constants[tab.must("n")] = 2.0;
    return b;
}

Expr canonical_delta() {
    return parse("u_t + A*u^n*u_x + u^(2*n)*u_x + u_xxx + Q*u");
}

} // namespace

TEST_CASE("total derivatives: basic shapes") {
    CHECK(Dx(parse("u")) == parse("u_x"));
    CHECK(Dx(parse("u*u_xx")) == parse("u_x*u_xx + u*u_xxx"));
    CHECK(Dt(parse("exp(2*H)*u^2")) == parse("2*Q*exp(2*H)*u^2 + 2*exp(2*H)*u*u_t"));
    CHECK_THROWS_AS(Dx(sym(symtab().u(0, kMaxJetOrder))), JetOrderError);
}

TEST_CASE("total derivatives agree with finite differences") {
    Bindings bind = smooth_coeffs();
    std::vector<Expr> exprs = {
        parse("u^2*u_x + A*u"),
        parse("exp(2*H)*u*u_xx"),
        parse("Q*u^n + u_x*u_xx"),
        parse("v*u_t + v_x*u"),
    };
    auto& tab = symtab();
    bind.functions[tab.must("H")] = [](double t, double) { return 0.5 * t; };
    // H' must equal Q for the chain rule to be exact; use a matching pair here
    bind.functions[tab.must("Q")] = [](double, double) { return 0.5; };
    bind.functions[tab.coeff_deriv(tab.must("Q"), 1, 0)] = [](double, double) { return 0.0; };
    const double h = 1e-5;
    for (const Expr& e : exprs) {
        Expr dxe = Dx(e);
        bool has_ut = contains_symbol(e, symtab().u(1, 0));
        for (double t : {0.3, 1.1}) {
            for (double x : {-0.4, 0.8}) {
                double fd_x = (eval(e, fn_jet(t, x + h), bind) - eval(e, fn_jet(t, x - h), bind)) / (2 * h);
                CHECK(eval(dxe, fn_jet(t, x), bind) == doctest::Approx(fd_x).epsilon(1e-7));
                if (!has_ut) { // D_t of a u_t term would need u_tt, which jet points do not store
                    double fd_t = (eval(e, fn_jet(t + h, x), bind) - eval(e, fn_jet(t - h, x), bind)) / (2 * h);
                    CHECK(eval(Dt(e), fn_jet(t, x), bind) == doctest::Approx(fd_t).epsilon(1e-7));
                }
            }
        }
    }
}

TEST_CASE("Dx and Dt commute on random expressions") {
    Rng rng(5150);
    std::vector<Expr> atoms = {parse("t"), parse("x"), parse("u"), parse("u_x"),
                               parse("u_xx"), parse("u_xxx"), parse("u_xxxx"), parse("A")};
    auto random_tree = [&](auto&& self, int depth) -> Expr {
        if (depth <= 0 || rng.uniform() < 0.35) return atoms[rng.next() % atoms.size()];
        switch (rng.next() % 3) {
            case 0: return self(self, depth - 1) + self(self, depth - 1);
            case 1: return self(self, depth - 1) * self(self, depth - 1);
            default: return pow(self(self, depth - 1), 2);
        }
    };
    SamplingSpec spec;
    spec.count = 30;
    for (int i = 0; i < 20; ++i) {
        Expr e = random_tree(random_tree, 3);
        Expr diff = Dx(Dt(e)) - Dt(Dx(e));
        auto verdict = check_identity(diff, spec, 1e-12);
        CHECK(verdict.holds);
    }
}

TEST_CASE("prolongation") {
    auto& tab = symtab();
    Expr delta = canonical_delta();

    Generator v1{zero(), one(), zero(), "v1"};
    CHECK(prolong3(v1, delta).is_zero());

    Generator scaling{zero(), zero(), parse("u"), ""};
    CHECK(prolong3(scaling, parse("u_x")) == parse("u_x"));

    Generator bad{parse("t"), parse("u"), zero(), ""};
    CHECK_THROWS_AS(prolong3(bad, delta), Error);

    // linearity in the generator, evaluated at random jets
    Generator g1{parse("b*t+c"), parse("b/3*x"), parse("-b/(3*n)*u"), "g1"};
    Generator g2{zero(), parse("k"), zero(), "g2"};
    Expr diff = prolong3(g1 + g2, delta) - (prolong3(g1, delta) + prolong3(g2, delta));
    SamplingSpec spec;
    spec.count = 40;
    CHECK(check_identity(diff, spec, 1e-10).holds);
    (void)tab;
}

TEST_CASE("euler operator") {
    // hand-applied definition
    CHECK(euler_u(parse("u_x^2")) == parse("-2*u_xx"));

    // total divergences are annihilated
    Expr div = Dx(parse("u^2*u_x"));
    Expr res = euler_u(div, true);
    SamplingSpec spec;
    spec.count = 100;
    CHECK(check_identity(res, spec, 1e-10).holds);

    // adjoint equation comes out of the variational derivative
    Expr fstar = euler_u(parse("v") * canonical_delta());
    Expr expected = parse("Q*v - u^(2*n)*v_x - v_xxx - u^n*A*v_x - v_t");
    CHECK(expand_distribute(fstar) == expand_distribute(expected));
    CHECK(check_identity(fstar - expected, spec, 1e-12).holds);
}

TEST_CASE("euler annihilation of divergences, spatial and spatio-temporal") {
    Rng rng(808);
    std::vector<Expr> atoms = {parse("t"), parse("x"), parse("u"), parse("u_x"), parse("u_xx"), parse("A")};
    auto random_tree = [&](auto&& self, int depth) -> Expr {
        if (depth <= 0 || rng.uniform() < 0.4) return atoms[rng.next() % atoms.size()];
        switch (rng.next() % 3) {
            case 0: return self(self, depth - 1) + self(self, depth - 1);
            case 1: return self(self, depth - 1) * self(self, depth - 1);
            default: return pow(self(self, depth - 1), 2);
        }
    };
    SamplingSpec spec;
    spec.count = 25;
    for (int i = 0; i < 20; ++i) {
        Expr f = random_tree(random_tree, 2);
        CHECK(check_identity(euler_u(Dx(f), true), spec, 1e-9).holds);
        CHECK(check_identity(euler_u(Dt(f)), spec, 1e-9).holds);
        Expr g = random_tree(random_tree, 2);
        CHECK(check_identity(euler_u(Dt(f) + Dx(g)), spec, 1e-9).holds);
    }
}

TEST_CASE("on-shell reduction") {
    // canonical equation with A = Q = 0, n = 1
    Expr rhs = parse("-(u^2*u_x + u_xxx)");
    CHECK(on_shell_reduce_rhs(parse("u_tx"), rhs) ==
          parse("-2*u*u_x^2 - u^2*u_xx - u_xxxx"));

    // definition of the residual collapses to zero
    Expr delta = parse("u_t + u^2*u_x + u_xxx");
    CHECK(on_shell_reduce_rhs(delta, rhs).is_zero());

    // u_t-free expressions are untouched
    Expr e = parse("u*u_xx + x");
    CHECK(on_shell_reduce_rhs(e, rhs) == e);

    // idempotence, structurally and numerically
    Rng rng(99);
    std::vector<Expr> atoms = {parse("u"), parse("u_x"), parse("u_t"), parse("u_tx"), parse("x")};
    auto random_tree = [&](auto&& self, int depth) -> Expr {
        if (depth <= 0 || rng.uniform() < 0.4) return atoms[rng.next() % atoms.size()];
        return rng.next() % 2 ? self(self, depth - 1) + self(self, depth - 1)
                              : self(self, depth - 1) * self(self, depth - 1);
    };
    for (int i = 0; i < 20; ++i) {
        Expr f = random_tree(random_tree, 2);
        Expr once = on_shell_reduce_rhs(f, rhs);
        CHECK(on_shell_reduce_rhs(once, rhs) == once);
    }

    // second-order t-derivatives resolve through the chain
    Expr utt = on_shell_reduce_rhs(parse("u_tt"), rhs);
    CHECK(jet_symbols(utt).size() > 0);
    for (Symbol s : jet_symbols(utt)) CHECK(symtab().rec(s).dt == 0);
}

TEST_CASE("jet sampling") {
    SamplingSpec spec;
    spec.count = 100;
    auto pts1 = sample_jets(spec, 42);
    auto pts2 = sample_jets(spec, 42);
    REQUIRE(pts1.size() == 100);
    bool all_equal = true;
    for (size_t i = 0; i < pts1.size(); ++i) {
        if (pts1[i].t != pts2[i].t || pts1[i].u[0][0] != pts2[i].u[0][0]) all_equal = false;
        CHECK(pts1[i].u[0][0] >= spec.u.lo);
        CHECK(pts1[i].u[0][0] <= spec.u.hi);
        CHECK(std::isfinite(pts1[i].u[1][3]));
    }
    CHECK(all_equal);

    auto pts3 = sample_jets(spec, 43);
    bool differs = false;
    for (size_t i = 0; i < pts1.size(); ++i)
        if (pts1[i].u[0][0] != pts3[i].u[0][0]) differs = true;
    CHECK(differs);

    SamplingSpec bad;
    bad.u = {0.5, 0.2};
    CHECK_THROWS_AS(sample_jets(bad, 1), Error);
}

TEST_CASE("identity checking") {
    SamplingSpec spec;
    spec.count = 100;

    auto zero_verdict = check_identity(zero(), spec, 1e-9);
    CHECK(zero_verdict.holds);
    CHECK(zero_verdict.max_abs_residual == 0.0);
    CHECK(zero_verdict.samples == 100);

    auto bad = check_identity(parse("u_x"), spec, 1e-9);
    CHECK(!bad.holds);
    CHECK(bad.max_rel_residual > 0.05);

    // positivity guard when fractional powers are active
    SamplingSpec neg;
    neg.u = {-1.0, 1.0};
    CHECK_THROWS_AS(check_identity(parse("u^(1/2)"), neg, 1e-9), Error);

    // a cancellation-heavy identity: (u + u_x)^2 - u^2 - 2*u*u_x - u_x^2
    Expr e = pow(parse("u + u_x"), 2) - parse("u^2 + 2*u*u_x + u_x^2");
    CHECK(check_identity(e, spec, 1e-12).holds);
}
