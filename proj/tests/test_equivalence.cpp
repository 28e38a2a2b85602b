#include "doctest.h"

#include "gardner/equivalence.hpp"

#include <cmath>

using namespace gardner;

namespace {

std::map<Symbol, double> consts(double a, double b, double c, double d) {
    auto& tab = symtab();
    return {{tab.must("a"), a}, {tab.must("b"), b}, {tab.must("c"), c}, {tab.must("d"), d}};
}

// draws a jet point and moves it onto the solution manifold of eq
JetPoint on_shell_point(const GardnerEquation& eq, Rng& rng, const SamplingSpec& spec) {
    JetPoint p = sample_jet(spec, rng, false);
    p.t = rng.uniform(eq.t_domain.lo, eq.t_domain.hi);
    p.u[1][0] = eval(onshell_rhs(eq), p, eq.bindings());
    return p;
}

double tilde_residual(const GardnerEquation& tilde, const JetPoint& q) {
    return eval(residual(tilde), q, tilde.bindings());
}

double tilde_scale(const GardnerEquation& tilde, const JetPoint& q) {
    return eval_scaled(residual(tilde), q, tilde.bindings()).second;
}

} // namespace

TEST_CASE("group action on coefficients") {
    SUBCASE("identity element") {
        GardnerEquation eq = make_equation("2", "3", "1/2", "t", Rat(2), {0.1, 2.0});
        GardnerEquation out = apply_group(eq, EquivalenceParams{});
        for (double t : {0.2, 0.9, 1.7}) {
            CHECK(out.coeff_value(out.A, t) == doctest::Approx(2.0));
            CHECK(out.coeff_value(out.B, t) == doctest::Approx(3.0));
            CHECK(out.coeff_value(out.C, t) == doctest::Approx(0.5));
            CHECK(out.coeff_value(out.Q, t) == doctest::Approx(t));
        }
        CHECK(out.n == eq.n);
    }

    SUBCASE("time-linear r shifts Q and scales the nonlinear terms") {
        GardnerEquation eq = make_equation("A", "B", "C", "Q", Rat(2), {0.1, 2.0});
        EquivalenceParams p;
        p.eps_r = 1;
        p.r = CoefficientFn(sym(symtab().t()));
        GardnerEquation out = apply_group(eq, p);
        CHECK(out.Q.expr == parse("Q + 1"));
        CHECK(out.A.expr == parse("exp(2*t)*A"));
        CHECK(out.C.expr == parse("exp(4*t)*C"));
        CHECK(out.B.expr == parse("B"));
    }

    SUBCASE("translations compose") {
        GardnerEquation eq = make_equation("1", "1", "1", "0", Rat(1), {0.1, 2.0});
        EquivalenceParams p1, p2;
        p1.eps2 = 0.3;
        p2.eps2 = 0.5;
        auto tr1 = apply_group_full(eq, p1);
        auto tr2 = apply_group_full(tr1.eq_tilde, p2);
        JetPoint p;
        p.x = 1.0;
        JetPoint q = pushforward_jet(pushforward_jet(p, tr1), tr2);
        CHECK(q.x == doctest::Approx(1.0 + 0.8));
    }

    SUBCASE("round trip with random affine alpha") {
        GardnerEquation eq = make_equation("2 + t", "3", "1 + t^2", "t", Rat(2), {0.1, 2.0});
        Rng rng(404);
        for (int i = 0; i < 20; ++i) {
            EquivalenceParams p;
            p.eps1 = rng.uniform(-0.4, 0.4);
            p.eps2 = rng.uniform(-0.5, 0.5);
            p.eps_r = rng.uniform(-0.5, 0.5);
            double k = rng.uniform(0.5, 2.0), m = rng.uniform(-0.3, 0.3);
            p.alpha = CoefficientFn(real_const(k) * sym(symtab().t()) + real_const(m));
            p.r = CoefficientFn(real_const(rng.uniform(-1, 1)) +
                                real_const(rng.uniform(-1, 1)) * sym(symtab().t()));
            GardnerEquation mid = apply_group(eq, p);
            CHECK(mid.n == eq.n);
            GardnerEquation back = apply_group(mid, inverse_params(p));
            for (double s : {0.15, 0.8, 1.9}) {
                CHECK(back.coeff_value(back.A, s) ==
                      doctest::Approx(eq.coeff_value(eq.A, s)).epsilon(1e-9));
                CHECK(back.coeff_value(back.B, s) ==
                      doctest::Approx(eq.coeff_value(eq.B, s)).epsilon(1e-9));
                CHECK(back.coeff_value(back.C, s) ==
                      doctest::Approx(eq.coeff_value(eq.C, s)).epsilon(1e-9));
                CHECK(back.coeff_value(back.Q, s) ==
                      doctest::Approx(eq.coeff_value(eq.Q, s)).epsilon(1e-9));
            }
        }
    }

    SUBCASE("non-monotone alpha is rejected") {
        GardnerEquation eq = make_equation("1", "1", "1", "0", Rat(1), {0.1, 2.0});
        EquivalenceParams p;
        p.alpha = CoefficientFn(parse("(t - 1)^2"));
        CHECK_THROWS_AS(apply_group(eq, p), Error);
    }
}

TEST_CASE("canonical reduction") {
    SUBCASE("already canonical is a fixed point") {
        GardnerEquation eq = canonical_equation("t", "t^2", Rat(1), {0.1, 2.0});
        TransformedEquation tr = to_canonical(eq);
        CHECK(tr.eq_tilde.A.expr == parse("t"));
        CHECK(tr.eq_tilde.Q.expr == parse("t^2"));
        CHECK(tr.eq_tilde.B.expr.is_one());
        CHECK(tr.eq_tilde.C.expr.is_one());
        JetPoint p;
        p.t = 0.7;
        p.x = 0.2;
        p.u[0][0] = 1.3;
        JetPoint q = pushforward_jet(p, tr);
        CHECK(q.t == doctest::Approx(0.7));
        CHECK(q.x == doctest::Approx(0.2));
        CHECK(q.u[0][0] == doctest::Approx(1.3));
    }

    SUBCASE("exponential C gives the constant damping -1") {
        // B = 1, C = e^{2 n t}, A = 0, Q = 0
        GardnerEquation eq = make_equation(CoefficientFn(zero()), "1", "exp(2*t)",
                                           CoefficientFn(zero()), Rat(1), {0.1, 2.0});
        TransformedEquation tr = to_canonical(eq);
        for (double tt : {0.2, 0.8, 1.5}) {
            CHECK(tr.eq_tilde.coeff_value(tr.eq_tilde.Q, tt) == doctest::Approx(-1.0).epsilon(1e-12));
        }
        CHECK(tr.maps.theta(0.5) == doctest::Approx(std::exp(0.5)).epsilon(1e-12));
    }

    SUBCASE("pure scaling transforms slopes by the chain rule") {
        GardnerEquation eq = canonical_equation("1", "0", Rat(2), {0.1, 2.0});
        double eps1 = std::log(2.0);
        TransformedEquation tr = to_canonical(eq, eps1, 0.0);
        JetPoint p;
        p.t = 1.0;
        p.u[0][1] = 0.6;
        JetPoint q = pushforward_jet(p, tr);
        double theta = std::pow(2.0, -1.0 / 2.0); // e^{-eps1/n}, n = 2
        CHECK(q.u[0][1] == doctest::Approx(theta * 0.6 / 2.0).epsilon(1e-12));
    }

    SUBCASE("B/C of mixed sign is rejected") {
        GardnerEquation eq = make_equation("1", "1", "-1", "0", Rat(1), {0.1, 2.0});
        CHECK_THROWS_AS(to_canonical(eq), Error);
    }
}

TEST_CASE("solutions map to solutions") {
    SamplingSpec spec;
    Rng rng(777);

    auto check_mapping = [&](const GardnerEquation& eq, const TransformedEquation& tr,
                             int points) {
        for (int i = 0; i < points; ++i) {
            JetPoint p = on_shell_point(eq, rng, spec);
            JetPoint q = pushforward_jet(p, tr);
            double res = tilde_residual(tr.eq_tilde, q);
            double scale = tilde_scale(tr.eq_tilde, q);
            CHECK(std::abs(res) <= 1e-9 * (1 + scale));
        }
    };

    SUBCASE("constant rescaling, n = 1") {
        GardnerEquation eq = make_equation("1", "2", "1/2", "0", Rat(1), {0.1, 2.0});
        check_mapping(eq, to_canonical(eq, 0.2, 0.1), 100);
    }

    SUBCASE("exponential C, n = 1") {
        GardnerEquation eq = make_equation(CoefficientFn(zero()), "1", "exp(2*t)",
                                           CoefficientFn(zero()), Rat(1), {0.1, 2.0});
        check_mapping(eq, to_canonical(eq), 100);
    }

    SUBCASE("time-dependent B with numeric inversion, n = 2") {
        GardnerEquation eq = make_equation("a*(b*t+c)^(-1/3)", "b*t + c", "b*t + c",
                                           "d*(b*t+c)^(-1)", Rat(2), {0.1, 2.0},
                                           consts(1, 1, 1, 1));
        TransformedEquation tr = to_canonical(eq, 0.1, 0.0);
        check_mapping(eq, tr, 100);

        // the opaque reparameterized coefficients agree with direct evaluation
        for (double t : {0.3, 1.0, 1.8}) {
            double ttil = tr.maps.t_map(t);
            double expect = std::exp(-0.1) * eq.coeff_value(eq.A, t) /
                            std::sqrt(eq.coeff_value(eq.B, t) * eq.coeff_value(eq.C, t));
            CHECK(tr.eq_tilde.coeff_value(tr.eq_tilde.A, ttil) ==
                  doctest::Approx(expect).epsilon(1e-9));
        }
    }

    SUBCASE("group action also maps solutions") {
        GardnerEquation eq = make_equation("1", "2", "1/2", "t", Rat(1), {0.1, 2.0});
        EquivalenceParams p;
        p.eps1 = 0.3;
        p.eps2 = -0.2;
        p.eps_r = 0.4;
        p.alpha = CoefficientFn(parse("2*t + 1/2"));
        p.r = CoefficientFn(parse("t"));
        TransformedEquation tr = apply_group_full(eq, p);
        for (int i = 0; i < 50; ++i) {
            JetPoint pt = on_shell_point(eq, rng, spec);
            JetPoint q = pushforward_jet(pt, tr);
            double res = tilde_residual(tr.eq_tilde, q);
            double scale = tilde_scale(tr.eq_tilde, q);
            CHECK(std::abs(res) <= 1e-9 * (1 + scale));
        }
    }
}
