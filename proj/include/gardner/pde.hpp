// Method-of-lines solver for the canonical equation on a periodic domain:
// Fourier collocation in x with the u_xxx term integrated exactly by an
// integrating factor and the remaining terms advanced with classical RK4.
// A functional monitor tracks int T dx for certified conservation laws.
#pragma once

#include "gardner/model.hpp"

#include <complex>

namespace gardner {

struct Grid {
    int N = 256;
    double period = 2 * M_PI;

    Grid() = default;
    Grid(int n, double p) : N(n), period(p) {
        if (N < 64 || (N & (N - 1)) != 0)
            throw Error("grid size must be a power of two, at least 64");
        if (!(period > 0)) throw Error("period must be positive");
    }
    double x(int j) const { return period * j / N; }
    // wavenumber of mode index j (kappa in [-N/2, N/2))
    double wavenumber(int j) const {
        int kappa = j <= N / 2 ? j : j - N;
        return 2 * M_PI * kappa / period;
    }
};

namespace detail {

inline void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2 * M_PI / (double)len * (inverse ? 1 : -1);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& z : a) z /= (double)n;
}

} // namespace detail

struct SolverOptions {
    bool linear_only = false; // drop both advection nonlinearities (test switch)
    bool dealias = true;      // 2/3-rule truncation applied to products
};

class SpectralGardner {
  public:
    SpectralGardner(Grid grid, const GardnerEquation& eq, SolverOptions opt = {})
        : grid_(grid), opt_(opt), n_(eq.n.value()),
          n_fractional_(!eq.n.is_integer() || !Rat(2 * eq.n.num, eq.n.den).is_integer()) {
        if (!eq.is_canonical())
            throw Error("the solver integrates the canonical form; reduce first");
        Bindings bind = eq.bindings();
        A_ = [&eq, bind](double t) {
            JetPoint p;
            p.t = t;
            return eval(eq.A.expr, p, bind);
        };
        Q_ = [&eq, bind](double t) {
            JetPoint p;
            p.t = t;
            return eval(eq.Q.expr, p, bind);
        };
        // cache per-mode linear phase ik^3 and dealias mask
        lin_.resize(grid_.N);
        mask_.resize(grid_.N);
        for (int j = 0; j < grid_.N; ++j) {
            double k = grid_.wavenumber(j);
            lin_[j] = std::complex<double>(0, k * k * k);
            int kappa = j <= grid_.N / 2 ? j : j - grid_.N;
            mask_[j] = std::abs(kappa) <= grid_.N / 3 ? 1.0 : 0.0;
        }
    }

    void set_state(const std::vector<double>& u, double t0) {
        if ((int)u.size() != grid_.N) throw Error("state size does not match the grid");
        hat_.assign(u.begin(), u.end());
        detail::fft(hat_, false);
        t_ = t0;
    }

    double time() const { return t_; }
    const Grid& grid() const { return grid_; }
    double min_u() const { return min_u_; }

    std::vector<double> state() const { return to_physical(hat_, 0); }
    std::vector<double> derivative(int order) const { return to_physical(hat_, order); }

    void step(double dt) {
        auto E = phase(dt / 2);
        auto E2 = phase(dt);
        const auto& v = hat_;
        auto Na = nonlinear(v, t_);
        auto a = combine(E, v, dt / 2, Na);
        auto Nb = nonlinear(a, t_ + dt / 2);
        std::vector<std::complex<double>> b(grid_.N);
        for (int j = 0; j < grid_.N; ++j) b[j] = E[j] * v[j] + (dt / 2) * Nb[j];
        auto Nc = nonlinear(b, t_ + dt / 2);
        std::vector<std::complex<double>> c(grid_.N);
        for (int j = 0; j < grid_.N; ++j) c[j] = E2[j] * v[j] + dt * E[j] * Nc[j];
        auto Nd = nonlinear(c, t_ + dt);
        std::vector<std::complex<double>> next(grid_.N);
        for (int j = 0; j < grid_.N; ++j)
            next[j] = E2[j] * v[j] +
                      dt / 6.0 * (E2[j] * Na[j] + 2.0 * E[j] * (Nb[j] + Nc[j]) + Nd[j]);
        for (const auto& z : next)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw Error("solution blew up (non-finite Fourier mode) at t=" + std::to_string(t_));
        hat_ = std::move(next);
        t_ += dt;
    }

  private:
    std::vector<std::complex<double>> phase(double dt) const {
        std::vector<std::complex<double>> e(grid_.N);
        for (int j = 0; j < grid_.N; ++j) e[j] = std::exp(lin_[j] * dt);
        return e;
    }

    static std::vector<std::complex<double>> combine(const std::vector<std::complex<double>>& E,
                                                     const std::vector<std::complex<double>>& v,
                                                     double h,
                                                     const std::vector<std::complex<double>>& N) {
        std::vector<std::complex<double>> out(v.size());
        for (size_t j = 0; j < v.size(); ++j) out[j] = E[j] * (v[j] + h * N[j]);
        return out;
    }

    std::vector<double> to_physical(std::vector<std::complex<double>> hat, int order) const {
        for (int j = 0; j < grid_.N; ++j) {
            double k = grid_.wavenumber(j);
            std::complex<double> mult(1, 0);
            for (int m = 0; m < order; ++m) mult *= std::complex<double>(0, k);
            if (order % 2 == 1 && j == grid_.N / 2) mult = 0; // odd derivative at Nyquist
            hat[j] *= mult;
        }
        detail::fft(hat, true);
        std::vector<double> out(grid_.N);
        for (int j = 0; j < grid_.N; ++j) out[j] = hat[j].real();
        return out;
    }

    std::vector<std::complex<double>> nonlinear(std::vector<std::complex<double>> hat, double s) {
        if (opt_.dealias)
            for (int j = 0; j < grid_.N; ++j) hat[j] *= mask_[j];
        std::vector<double> u = to_physical(hat, 0);
        std::vector<double> ux = to_physical(hat, 1);
        double Av = A_(s), Qv = Q_(s);
        std::vector<std::complex<double>> nl(grid_.N);
        for (int j = 0; j < grid_.N; ++j) {
            double uj = u[j];
            min_u_ = std::min(min_u_, uj);
            double advect = 0;
            if (!opt_.linear_only) {
                if (n_fractional_ && uj <= 0)
                    throw Error("positivity lost under fractional n at t=" + std::to_string(s));
                double un = std::pow(uj, n_);
                advect = (Av * un + un * un) * ux[j];
            }
            nl[j] = -advect - Qv * uj;
        }
        detail::fft(nl, false);
        if (opt_.dealias)
            for (int j = 0; j < grid_.N; ++j) nl[j] *= mask_[j];
        return nl;
    }

    Grid grid_;
    SolverOptions opt_;
    double n_;
    bool n_fractional_;
    std::function<double(double)> A_, Q_;
    std::vector<std::complex<double>> lin_, hat_;
    std::vector<double> mask_;
    double t_ = 0;
    double min_u_ = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Initial data class: u0 = mean + sum a_k cos(2 pi k x / P + phase); keeping
// mean > sum |a_k| preserves positivity for fractional n.

struct InitialMode {
    int k = 1;
    double amp = 0.1;
    double phase = 0;
};

struct InitialData {
    double mean = 1.5;
    std::vector<InitialMode> modes{{1, 0.3, 0.0}};

    std::vector<double> sample(const Grid& g) const {
        std::vector<double> u(g.N);
        for (int j = 0; j < g.N; ++j) {
            double x = g.x(j);
            double v = mean;
            for (const auto& m : modes)
                v += m.amp * std::cos(2 * M_PI * m.k * x / g.period + m.phase);
            u[j] = v;
        }
        return u;
    }
};

// ---------------------------------------------------------------------------
// Conserved-functional monitor

struct MonitoredLaw {
    std::string name;
    Expr T, X;           // density and flux, fully bound except for constants
    int max_deriv = 2;   // spatial derivatives of u the density needs
};

struct FunctionalSeries {
    std::string name;
    std::vector<double> values;          // int T dx at output times
    std::vector<double> corrected;       // with accumulated boundary flux
    bool x_weighted = false;
    double initial = 0;

    double drift() const { return drift_of(values); }
    double corrected_drift() const { return drift_of(corrected); }

  private:
    double drift_of(const std::vector<double>& v) const {
        double m = 0;
        for (double f : v) m = std::max(m, std::abs(f - initial));
        return m / std::max(std::abs(initial), 1e-30);
    }
};

struct SimulationResult {
    std::vector<double> times;
    std::vector<std::vector<double>> snapshots;
    std::vector<FunctionalSeries> functionals;
    bool failed = false;
    std::string failure;
    double min_u = 0;
};

struct SimulateOptions {
    double t_final = 1.0;
    double dt = 1e-3;
    int output_every = 10;
    bool boundary_correction = true;
    bool store_snapshots = false;
    SolverOptions solver;
};

inline SimulationResult simulate(const GardnerEquation& eq, const Grid& grid,
                                 const std::vector<double>& u0, const SimulateOptions& opt,
                                 const std::vector<MonitoredLaw>& laws,
                                 const Bindings& law_bindings = {}) {
    SpectralGardner solver(grid, eq, opt.solver);
    solver.set_state(u0, eq.t_domain.lo);

    Bindings bind = eq.bindings();
    bind.merge(law_bindings);

    SimulationResult result;
    result.functionals.resize(laws.size());
    std::vector<double> flux_accum_(laws.size(), 0.0);
    std::vector<double> flux_last_(laws.size(), 0.0);

    auto functional = [&](const MonitoredLaw& law, double t) {
        std::vector<std::vector<double>> derivs;
        for (int m = 0; m <= law.max_deriv; ++m) derivs.push_back(solver.derivative(m));
        double sum = 0;
        JetPoint p;
        p.t = t;
        for (int j = 0; j < grid.N; ++j) {
            p.x = grid.x(j);
            for (int m = 0; m <= law.max_deriv; ++m) p.u[0][m] = derivs[m][j];
            sum += eval(law.T, p, bind);
        }
        if (contains_symbol(law.T, symtab().x())) {
            // explicit x breaks periodicity of the density; close the
            // trapezoid with the x = P endpoint (same periodic state values)
            for (int m = 0; m <= law.max_deriv; ++m) p.u[0][m] = derivs[m][0];
            p.x = grid.period;
            double at_p = eval(law.T, p, bind);
            p.x = 0;
            double at_0 = eval(law.T, p, bind);
            sum += 0.5 * (at_p - at_0);
        }
        return sum * grid.period / grid.N;
    };
    auto boundary_flux = [&](const MonitoredLaw& law, double t) {
        // X(x = P) - X(x = 0) with the periodic state values at j = 0
        std::vector<std::vector<double>> derivs;
        for (int m = 0; m <= 3; ++m) derivs.push_back(solver.derivative(m));
        JetPoint p;
        p.t = t;
        for (int m = 0; m <= 3; ++m) p.u[0][m] = derivs[m][0];
        p.x = grid.period;
        double hi = eval(law.X, p, bind);
        p.x = 0;
        double lo = eval(law.X, p, bind);
        return hi - lo;
    };

    auto record = [&](bool first) {
        double t = solver.time();
        result.times.push_back(t);
        if (opt.store_snapshots) result.snapshots.push_back(solver.state());
        for (size_t i = 0; i < laws.size(); ++i) {
            auto& series = result.functionals[i];
            double F = functional(laws[i], t);
            if (first) {
                series.name = laws[i].name;
                series.initial = F;
                series.x_weighted = contains_symbol(laws[i].T, symtab().x());
            }
            series.values.push_back(F);
            double corrected = F;
            if (opt.boundary_correction && series.x_weighted && !first) {
                // accumulate int_0^t (X(P) - X(0)) ds by the trapezoid rule
                double prev = flux_accum_[i];
                double f_now = boundary_flux(laws[i], t);
                double dt_out = t - result.times[result.times.size() - 2];
                flux_accum_[i] = prev + 0.5 * dt_out * (f_now + flux_last_[i]);
                flux_last_[i] = f_now;
                corrected = F + flux_accum_[i];
            } else if (series.x_weighted && first) {
                flux_last_[i] = boundary_flux(laws[i], t);
            }
            series.corrected.push_back(corrected);
        }
    };

    try {
        record(true);
        long long steps = (long long)std::llround(opt.t_final / opt.dt);
        for (long long s = 1; s <= steps; ++s) {
            solver.step(opt.dt);
            if (s % opt.output_every == 0 || s == steps) record(false);
        }
    } catch (const Error& err) {
        result.failed = true;
        result.failure = err.what();
    }
    result.min_u = solver.min_u();
    return result;
}

} // namespace gardner
