#include <doctest.h>

#include <cmath>
#include <random>

#include "spiral/linearized.hpp"

using namespace spiral;

namespace {

SolverParams lin_params(double mu = 0.75, int m = 2, int nodes = 2048) {
    SolverParams p;
    p.mu = mu;
    p.m = m;
    p.alpha = SolverParams::auto_alpha(mu);
    p.grid = RadialGrid(1e-3, 1e3, nodes);
    p.n_modes = 64;
    p.finalize();
    return p;
}

double wsup(const RadialGrid& g, const CVector& v, double w_exp) {
    double m = 0;
    for (int i = 0; i < g.size(); ++i)
        m = std::max(m, std::pow(g[i], w_exp) * std::abs(v[i]));
    return m;
}

// Manufactured admissible mode profile psi*(beta) = beta^2 (1+beta)^{-c} and
// its exact derivatives; c = 2 + 2mu + alpha gives the far decay beta^{-2mu-alpha}
// required of nonzero modes (so that beta^{2mu-1} H stays <beta>^{-alpha}-bounded).
struct Manufactured {
    double mu, alpha, gamma;
    int n;
    double c;
    Manufactured(int n_, const SolverParams& p)
        : mu(p.mu), alpha(p.alpha), gamma(p.gamma), n(n_), c(2 + 2 * p.mu + p.alpha) {}
    double psi(double b) const { return b * b * std::pow(1 + b, -c); }
    double dpsi(double b) const {
        return 2 * b * std::pow(1 + b, -c) - c * b * b * std::pow(1 + b, -c - 1);
    }
    double ddpsi(double b) const {
        return 2 * std::pow(1 + b, -c) - 4 * c * b * std::pow(1 + b, -c - 1) +
               c * (c + 1) * b * b * std::pow(1 + b, -c - 2);
    }
    double dddpsi(double b) const {
        return -6 * c * std::pow(1 + b, -c - 1) + 6 * c * (c + 1) * b * std::pow(1 + b, -c - 2) -
               c * (c + 1) * (c + 2) * b * b * std::pow(1 + b, -c - 3);
    }
    Complex h(double b) const {
        double D1 = b * dpsi(b);
        return psi(b) + (D1 + Complex(0, n) * b * psi(b)) / (2 * mu);
    }
    // G from  mu beta G = D^2 H - mu^2 n^2 H + (gamma/2) i n beta psi
    Complex g(double b) const {
        double D1 = b * dpsi(b);
        double D2 = b * dpsi(b) + b * b * ddpsi(b);
        double D3 = b * dpsi(b) + 3 * b * b * ddpsi(b) + b * b * b * dddpsi(b);
        Complex in(0, double(n));
        Complex H = psi(b) + (D1 + in * b * psi(b)) / (2 * mu);
        Complex D2H = D2 + (D3 + in * b * (psi(b) + 2 * D1 + D2)) / (2 * mu);
        Complex rhs = D2H - mu * mu * n * n * H + 0.5 * gamma * in * b * psi(b);
        return rhs / (mu * b);
    }
};

}  // namespace

TEST_CASE("apply_T0: fixed points and closed forms") {
    auto p = lin_params();
    const int N = p.grid.size();

    // H = 1 (mode 0) -> F = 1: constants are fixed points of T0
    SpectralField h1(p.grid, p.m);
    h1.set_mode(0, CVector(N, Complex(1.0)));
    SpectralField f1 = apply_T0(h1, p.mu);
    for (int i = 0; i < N; i += 111)
        CHECK(f1.mode(0)[i].real() == doctest::Approx(1.0).epsilon(1e-10));

    // H = beta^{1-2mu} -> F = 2mu beta^{1-2mu} (integrand s^{2mu-1} s^{1-2mu} = 1)
    SpectralField h2(p.grid, p.m);
    CVector c2(N);
    for (int i = 0; i < N; ++i) c2[i] = std::pow(p.grid[i], 1.0 - 2 * p.mu);
    h2.set_mode(0, c2);
    SpectralField f2 = apply_T0(h2, p.mu);
    for (int i = 0; i < N; i += 111)
        CHECK(f2.mode(0)[i].real() ==
              doctest::Approx(2 * p.mu * std::pow(p.grid[i], 1.0 - 2 * p.mu)).epsilon(1e-9));

    // H = 0 -> F = 0
    SpectralField h0(p.grid, p.m);
    h0.set_mode(0, CVector(N, Complex(0.0)));
    CHECK(apply_T0(h0, p.mu).max_abs() == 0.0);
}

TEST_CASE("T0 inverse relation for random bounded H") {
    auto p = lin_params();
    const int N = p.grid.size();
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> u(-1, 1);
    SpectralField h(p.grid, p.m);
    for (int n : {0, 2, 4, 8}) {
        CVector c(N);
        double a0 = u(rng), a1 = u(rng);
        for (int i = 0; i < N; ++i) {
            double t = p.grid.log_node(i);
            c[i] = std::pow(p.grid[i], 1.0 - 2 * p.mu) * (a0 + 0.3 * a1 * std::sin(t)) /
                   std::pow(std::hypot(p.grid[i], 1.0), p.alpha);
        }
        h.set_mode(n, c);
    }
    SpectralField f, fb;
    apply_T0_with_deriv(h, p.mu, f, fb);
    // H - (F + (beta/2mu)(F_beta + i n F)) == 0 in the weighted sup
    for (const auto& [n, hc] : h.modes()) {
        CVector fc = f.mode(n), fbc = fb.mode(n);
        double worst = 0;
        for (int i = 0; i < N; ++i) {
            Complex r = hc[i] - (fc[i] + p.grid[i] / (2 * p.mu) *
                                             (fbc[i] + Complex(0, double(n)) * fc[i]));
            worst = std::max(worst, std::pow(p.grid[i], 2 * p.mu - 1.0) * std::abs(r));
        }
        CHECK(worst < 1e-8);
    }
    // FD cross-check of the derivative on the non-oscillatory mode
    LogDerivative D(p.grid);
    CVector f0 = f.mode(0), fb0 = fb.mode(0);
    CVector df0 = D.apply(f0);
    for (int i = 4; i < N - 4; i += 101)
        CHECK(std::abs(df0[i] / p.grid[i] - fb0[i]) < 1e-7 * (1 + std::abs(fb0[i])));
}

TEST_CASE("apply_L on the radial solution (oracle-computed closed form)") {
    auto p = lin_params();
    StreamSolution sol = StreamSolution::radial(p);
    SpectralField L = apply_L(sol, p);
    // L(psi0) = (2mu-1)/(2mu^2) beta^{-2mu}; at mu = 3/4 this is (4/9) beta^{-3/2}
    const double cexp = (2 * p.mu - 1) / (2 * p.mu * p.mu);
    CHECK(cexp == doctest::Approx(4.0 / 9.0));
    for (int i = 0; i < p.grid.size(); i += 97)
        CHECK(L.mode(0)[i].real() ==
              doctest::Approx(cexp * std::pow(p.grid[i], -2 * p.mu)).epsilon(1e-12));

    // L(0) = 0
    StreamSolution zero;
    zero.mu = p.mu;
    zero.psi = SpectralField(p.grid, p.m);
    zero.h = SpectralField(p.grid, p.m);
    zero.psi.set_mode(2, CVector(p.grid.size(), Complex(0)));
    zero.h.set_mode(2, CVector(p.grid.size(), Complex(0)));
    CHECK(apply_L(zero, p).max_abs() == 0.0);
}

TEST_CASE("solve_mode_linearized: zero rhs, excluded modes") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    const int N = p.grid.size();
    CVector zero(N, Complex(0));
    auto ms = solver.solve_mode(2, zero, zero);
    CHECK(wsup(p.grid, ms.psi, 2 * p.mu - 1) < 1e-13);
    CHECK(wsup(p.grid, ms.h, 2 * p.mu - 1) < 1e-13);
    CHECK_THROWS_AS(solver.solve_mode(1, zero, zero), PreconditionError);
    CHECK_THROWS_AS(solver.solve_mode(-1, zero, zero), PreconditionError);
}

TEST_CASE("per-mode BVP nonsingular and homogeneous solve returns zero") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    CVector zero(p.grid.size(), Complex(0));
    for (int n = p.m; n <= p.n_modes; n += p.m) {
        auto ms = solver.solve_mode_g(n, zero);  // factorization throws if singular
        CHECK(wsup(p.grid, ms.psi, 2 * p.mu - 1) == 0.0);
        auto msn = solver.solve_mode_g(-n, zero);
        CHECK(wsup(p.grid, msn.h, 2 * p.mu - 1) == 0.0);
    }
}

TEST_CASE("manufactured single-mode recovery") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    const int N = p.grid.size();
    for (int n : {2, 4, 8, 16, 32, -2, -6}) {
        Manufactured mf(n, p);
        CVector g(N);
        for (int i = 0; i < N; ++i) g[i] = mf.g(p.grid[i]);
        auto ms = solver.solve_mode_g(n, g);
        double scale = 0, err = 0, errh = 0;
        for (int i = 0; i < N; ++i) {
            double w = std::pow(p.grid[i], 2 * p.mu - 1.0);
            scale = std::max(scale, w * std::abs(mf.psi(p.grid[i])));
            err = std::max(err, w * std::abs(ms.psi[i] - mf.psi(p.grid[i])));
            errh = std::max(errh, w * std::abs(ms.h[i] - mf.h(p.grid[i])));
        }
        INFO("mode ", n, " err ", err / scale, " errh ", errh / scale);
        // psi is recovered to the stated tolerance; H additionally carries the
        // far-field closure's tail-model error against the 1/beta-curved data
        // of this manufactured family (it does not feed back into psi).
        CHECK(err / scale < 1e-6);
        CHECK(errh / scale < 1e-3);
    }
}

TEST_CASE("n = 0 explicit path matches the quadrature oracle") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    const int N = p.grid.size();
    // F0 = <beta>^{-alpha} beta^{1-2mu}, c0 = 0
    CVector p0f1(N);
    for (int i = 0; i < N; ++i)
        p0f1[i] = std::pow(std::hypot(p.grid[i], 1.0), -p.alpha) *
                  std::pow(p.grid[i], 1.0 - 2 * p.mu);
    auto ms = solver.solve_mode(0, p0f1, CVector(N, Complex(0)));
    CHECK(std::abs(ms.singular_coeff) < 1e-6);

    // oracle: H0(beta) = mu int_beta^inf <s>^{-alpha} s^{-2mu} ds by fine Simpson
    auto h0_oracle = [&](double beta) {
        const int M = 200000;
        const double top = 1e6;
        double a = std::log(beta), b = std::log(top), hh = (b - a) / M;
        auto f = [&](double t) {
            double s = std::exp(t);
            return std::pow(std::hypot(s, 1.0), -p.alpha) * std::pow(s, 1.0 - 2 * p.mu);
        };
        double acc = 0;
        for (int k = 0; k < M; k += 2)
            acc += hh / 3.0 * (f(a + k * hh) + 4 * f(a + (k + 1) * hh) + f(a + (k + 2) * hh));
        // analytic tail beyond `top`
        double p_tail = 1.0 - 2 * p.mu - p.alpha;
        acc += -std::pow(std::hypot(top, 1.0), -p.alpha) * std::pow(top, 1.0 - 2 * p.mu) / p_tail;
        return p.mu * acc;
    };
    // weighted-sup comparison against the oracle (H is compared through the
    // beta^{2mu-1} weighting of its norm, relative to the field's scale)
    double scale = 0;
    for (int i = 0; i < N; i += 16)
        scale = std::max(scale, std::pow(p.grid[i], 2 * p.mu - 1.0) * std::abs(ms.h[i]));
    for (int i : {0, 400, 1024, 1600, 2047}) {
        double expect = h0_oracle(p.grid[i]);
        // total H = grid part + symbolic beta^{1-2mu} direction (the split
        // between the two is fit-dependent; their sum is not)
        double total = ms.h[i].real() + (ms.singular_coeff.real() / (2 * p.mu)) *
                                            std::pow(p.grid[i], 1.0 - 2 * p.mu);
        double werr = std::pow(p.grid[i], 2 * p.mu - 1.0) * std::abs(total - expect);
        CHECK(werr < 1e-8 * scale);
    }
}

namespace {

// Random admissible rhs decomposition over modes at multiples of m.
RhsDecomposition random_rhs(const SolverParams& p, std::mt19937& rng, int max_mode) {
    std::uniform_real_distribution<double> u(-1, 1);
    RhsDecomposition rhs;
    rhs.f1 = SpectralField(p.grid, p.m);
    rhs.f2 = SpectralField(p.grid, p.m);
    const int N = p.grid.size();
    for (int n = 0; n <= max_mode; n += p.m) {
        double a0 = u(rng), a1 = u(rng), b0 = u(rng), b1 = u(rng);
        CVector c1(N), c2(N);
        for (int i = 0; i < N; ++i) {
            double t = p.grid.log_node(i);
            double w = std::pow(std::hypot(p.grid[i], 1.0), -p.alpha);
            c1[i] = std::pow(p.grid[i], 1.0 - 2 * p.mu) * w *
                    Complex(a0 + 0.3 * a1 * std::sin(t), n == 0 ? 0.0 : 0.2 * b0 * std::cos(t));
            c2[i] = std::pow(p.grid[i], -2 * p.mu) * w *
                    Complex(b1 + 0.2 * a1 * std::cos(2 * t), n == 0 ? 0.0 : 0.1 * a0 * std::sin(t));
        }
        rhs.f1.set_mode(n, c1);
        rhs.f2.set_mode(n, c2);
        if (n > 0) {
            CVector c1m(N), c2m(N);
            for (int i = 0; i < N; ++i) {
                c1m[i] = std::conj(c1[i]);
                c2m[i] = std::conj(c2[i]);
            }
            rhs.f1.set_mode(-n, c1m);
            rhs.f2.set_mode(-n, c2m);
        }
    }
    return rhs;
}

// G = d_varphi F1 + d_phi F2 as a field (shared discrete stencils).
SpectralField rhs_field(const RhsDecomposition& rhs, const SolverParams& p) {
    LogDerivative D(p.grid);
    SpectralField g(p.grid, p.m);
    const int N = p.grid.size();
    std::map<int, bool> keys;
    for (const auto& [n, c] : rhs.f1.modes()) keys[n] = true;
    for (const auto& [n, c] : rhs.f2.modes()) keys[n] = true;
    for (const auto& [n, unused] : keys) {
        CVector f1 = rhs.f1.mode(n), f2 = rhs.f2.mode(n);
        CVector df1 = D.apply(f1);
        CVector c(N);
        for (int i = 0; i < N; ++i)
            c[i] = -df1[i] / p.grid[i] + Complex(0, double(n)) * f2[i];
        g.set_mode(n, c);
    }
    return g;
}

}  // namespace

TEST_CASE("L(solve(rhs)) reproduces the rhs to 1e-8 (weighted interior sup)") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        RhsDecomposition rhs = random_rhs(p, rng, 8);
        StreamSolution sol = solver.solve(rhs);
        SpectralField g_back = apply_L(sol, p);
        SpectralField g_ref = rhs_field(rhs, p);
        double num = weighted_rhs_norm(g_back - g_ref, p);
        double den = weighted_rhs_norm(g_ref, p);
        INFO("relative residual ", num / den);
        CHECK(num / den < 1e-8);
    }
}

TEST_CASE("mode decoupling is exact (bitwise under fixed order)") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    std::mt19937 rng(77);
    RhsDecomposition rhs = random_rhs(p, rng, 4);
    StreamSolution joint = solver.solve(rhs);
    for (int n : {0, 2, 4}) {
        auto single = solver.solve_mode(n, rhs.f1.mode(n), rhs.f2.mode(n));
        CVector jp = joint.psi.mode(n);
        for (int i = 0; i < p.grid.size(); i += 7) {
            CHECK(jp[i] == single.psi[i]);
        }
    }
}

TEST_CASE("solve on an n=0-only rhs equals the explicit path") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    const int N = p.grid.size();
    RhsDecomposition rhs;
    rhs.f1 = SpectralField(p.grid, p.m);
    rhs.f2 = SpectralField(p.grid, p.m);
    CVector c(N);
    for (int i = 0; i < N; ++i)
        c[i] = std::pow(p.grid[i], 1.0 - 2 * p.mu) *
               (0.7 + std::pow(std::hypot(p.grid[i], 1.0), -p.alpha));
    rhs.f1.set_mode(0, c);
    StreamSolution sol = solver.solve(rhs);
    auto ms = solver.solve_mode(0, c, CVector(N, Complex(0)));
    for (int i = 0; i < N; i += 53) CHECK(sol.psi.mode(0)[i] == ms.psi[i]);
    CHECK(sol.singular_coeff == ms.singular_coeff);
    // the constant part of beta^{2mu-1} F1 feeds the singular direction
    CHECK(std::abs(sol.singular_coeff - 2.0 * 0.7 * p.mu * p.mu / (2 * p.mu - 1)) < 1e-3);
}

TEST_CASE("high-frequency transport path agrees with the BVP") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-1, 1);
    const int N = p.grid.size();
    const int n = 32;
    double a0 = u(rng), a1 = u(rng);
    // random modulation, windowed to exact power laws near the grid ends (a
    // dead zone of 2.5 log-units, then a smoothstep ramp): both methods model
    // off-grid data by local power laws, so data whose exponent still drifts
    // at the boundary would compare their extrapolations rather than their
    // solves (pipeline data is power-ended).
    auto window = [&](double t) {
        const double lo = p.grid.log_node(0), hi = p.grid.log_node(N - 1);
        double s = std::min((t - lo - 2.5) / 2.0, (hi - t - 2.5) / 2.0);
        s = std::clamp(s, 0.0, 1.0);
        return s * s * (3 - 2 * s);
    };
    CVector f1(N), f2(N);
    for (int i = 0; i < N; ++i) {
        double t = p.grid.log_node(i);
        double w = std::pow(std::hypot(p.grid[i], 1.0), -p.alpha);
        double chi = window(t);
        f1[i] = std::pow(p.grid[i], 1.0 - 2 * p.mu) * w * (a0 + 0.3 * chi * std::sin(t));
        f2[i] = std::pow(p.grid[i], -2 * p.mu) * w * (a1 + 0.2 * chi * std::cos(t));
    }
    auto hf = solver.highfreq_transport_solve(n, f1, f2);
    auto ms = solver.solve_mode(n, f1, f2);
    double scale = wsup(p.grid, ms.h, 2 * p.mu - 1.0);
    // The solution carries a small e^{-i n beta} component.  The transport
    // path represents it exactly; the finite-difference BVP can only carry it
    // where the grid resolves the phase (n beta h below ~0.15 rad/node), so
    // the 1e-6 agreement is asserted there and the sub-stencil oscillatory
    // content bounds the global deviation.
    const double h = p.grid.log_step();
    double err_resolved = 0, err_global = 0;
    for (int i = 0; i < N; ++i) {
        double d = std::pow(p.grid[i], 2 * p.mu - 1.0) * std::abs(hf.h[i] - ms.h[i]);
        err_global = std::max(err_global, d);
        if (n * p.grid[i] * h <= 0.15) err_resolved = std::max(err_resolved, d);
    }
    INFO("cross-method deviation resolved ", err_resolved / scale, " global ",
         err_global / scale);
    CHECK(err_resolved / scale < 1e-6);
    CHECK(err_global / scale < 1e-3);
    CHECK_THROWS_AS(solver.highfreq_transport_solve(1, f1, f2), PreconditionError);
}

TEST_CASE("high-frequency contraction factor decays like 1/n") {
    auto p = lin_params();
    LinearizedSolver solver(p);
    const int N = p.grid.size();
    CVector f1(N), f2(N);
    for (int i = 0; i < N; ++i) {
        double w = std::pow(std::hypot(p.grid[i], 1.0), -p.alpha);
        f1[i] = std::pow(p.grid[i], 1.0 - 2 * p.mu) * w;
        f2[i] = std::pow(p.grid[i], -2 * p.mu) * w * 0.5;
    }
    double prev = 1e9;
    for (int n : {8, 16, 32, 64}) {
        auto hf = solver.highfreq_transport_solve(n, f1, f2);
        REQUIRE(hf.update_norms.size() >= 2);
        double factor = hf.update_norms[1] / hf.update_norms[0];
        INFO("n = ", n, " contraction ", factor);
        CHECK(factor < prev);
        CHECK(factor < 8.0 / n);  // O(1/n) behavior with a modest constant
        prev = factor;
    }
}
