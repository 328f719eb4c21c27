#include <doctest.h>

#include <cmath>
#include <random>

#include "spiral/calculus.hpp"

using namespace spiral;

TEST_CASE("log grid layout") {
    RadialGrid g(1e-3, 1e3, 128);
    CHECK(g.size() == 128);
    CHECK(g[0] == doctest::Approx(1e-3));
    CHECK(g[127] == doctest::Approx(1e3));
    for (int i = 0; i + 1 < g.size(); ++i) CHECK(g[i] < g[i + 1]);
    // uniform in log
    double r0 = g[1] / g[0], r1 = g[64] / g[63];
    CHECK(r0 == doctest::Approx(r1).epsilon(1e-12));
    CHECK_THROWS_AS(RadialGrid(1e-3, 1e3, 32), DomainError);
    CHECK_THROWS_AS(RadialGrid(2.0, 1e3, 128), DomainError);
}

TEST_CASE("log derivative is 4th order on powers") {
    RadialGrid g(1e-2, 1e2, 2048);
    LogDerivative D(g);
    RVector f(g.size());
    const double p = 1.7;
    for (int i = 0; i < g.size(); ++i) f[i] = std::pow(g[i], p);
    RVector df = D.apply(f);
    for (int i = 0; i < g.size(); ++i) {
        CHECK(df[i] == doctest::Approx(p * f[i]).epsilon(1e-9));
    }
}

TEST_CASE("cumulative quadrature: exponential in log coordinate") {
    RadialGrid g(1e-2, 1e2, 2048);
    const double h = g.log_step();
    const double a = 2.3;
    CVector f(g.size());
    for (int i = 0; i < g.size(); ++i) f[i] = std::exp(a * g.log_node(i));
    CVector cum = quad::cumulative(f, h);
    for (int i = 0; i < g.size(); i += 100) {
        double exact = (std::exp(a * g.log_node(i)) - std::exp(a * g.log_node(0))) / a;
        CHECK(cum[i].real() == doctest::Approx(exact).epsilon(1e-9));
    }
}

TEST_CASE("weighted cumulative rules match closed forms") {
    RadialGrid g(1e-2, 1e2, 1024);
    const double h = g.log_step();
    // R_i = e^{-a t_i} int_{t0}^{t_i} e^{a s} f(s) ds with f = e^{p s}
    const double a = 36.0, p = -0.8;
    CVector f(g.size());
    for (int i = 0; i < g.size(); ++i) f[i] = std::exp(p * g.log_node(i));
    CVector r = quad::weighted_cum_left(Complex(a, 0.0), f, h);
    for (int i = 1; i < g.size(); i += 111) {
        const double ti = g.log_node(i), t0 = g.log_node(0);
        double exact = (std::exp(p * ti) - std::exp(-a * (ti - t0) + p * t0)) / (a + p);
        CHECK(r[i].real() == doctest::Approx(exact).epsilon(1e-10));
    }
    // from the right with a < 0
    CVector rr = quad::weighted_cum_right(Complex(-a, 0.0), f, h);
    for (int i = 0; i < g.size() - 1; i += 111) {
        const double ti = g.log_node(i), t1 = g.log_node(g.size() - 1);
        double exact = (std::exp(a * (t1 - ti) * -1.0 + p * t1) - std::exp(p * ti)) / (-a + p);
        CHECK(rr[i].real() == doctest::Approx(exact).epsilon(1e-10));
    }
}

TEST_CASE("filon cumulative: oscillatory integral with power-law amplitude") {
    // int_0^x e^{i n s} ds = (e^{i n x} - 1) / (i n), checked through the grid path
    RadialGrid g(1e-3, 1e3, 2048);
    CVector ones(g.size(), Complex(1.0));
    for (double n : {2.0, 17.0, 64.0}) {
        CVector cum = quad::filon_cum_left(n, g.nodes(), ones);
        Complex tail = quad::filon_lower_tail(n, g[0], Complex(1.0), Complex(0.0));
        for (int i : {5, 500, 1500, 2047}) {
            Complex exact =
                (std::exp(Complex(0, n * g[i])) - 1.0) / Complex(0, n);
            Complex got = cum[i] + tail;
            CHECK(std::abs(got - exact) < 1e-9);
        }
    }
}

TEST_CASE("filon from the right") {
    RadialGrid g(1e-3, 1e3, 2048);
    // int_x^X e^{i n s} s^{-2} ds against fine Simpson on a dense grid
    const double n = 32.0;
    CVector f(g.size());
    for (int i = 0; i < g.size(); ++i) f[i] = 1.0 / (g[i] * g[i]);
    CVector cum = quad::filon_cum_right(n, g.nodes(), f);
    int i1 = 0;
    while (g[i1] < 1.0) ++i1;  // first node >= 1
    // reference: composite Simpson from g[i1] to beta_max, phase-resolved
    auto fn = [&](double s) { return std::exp(Complex(0, n * s)) / (s * s); };
    Complex ref = 0;
    const int M = 2000000;  // even
    const double a = g[i1], b = 1e3, hh = (b - a) / M;
    for (int k = 0; k < M; k += 2)
        ref += (hh / 3.0) * (fn(a + k * hh) + 4.0 * fn(a + (k + 1) * hh) + fn(a + (k + 2) * hh));
    CHECK(std::abs(cum[i1] - ref) < 2e-9);
}

TEST_CASE("midpoint refinement is high order") {
    RadialGrid g(1e-2, 1e2, 256);
    CVector f(g.size());
    for (int i = 0; i < g.size(); ++i) f[i] = std::sin(1.3 * g.log_node(i));
    CVector r = midpoint_refine(f);
    RadialGrid gf = g.refined();
    REQUIRE(static_cast<int>(r.size()) == gf.size());
    for (int i = 0; i < gf.size(); ++i) {
        CHECK(std::abs(r[i] - std::sin(1.3 * gf.log_node(i))) < 1e-10);
    }
}

TEST_CASE("banded complex LU solves a manufactured system") {
    const int n = 40;
    BandedComplexLU lu(n, 3, 3);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<CVector> rows(n, CVector(n, Complex(0)));
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j) {
            Complex v(u(rng), u(rng));
            if (i == j) v += 6.0;
            lu.at(i, j) = v;
            rows[i][j] = v;
        }
    }
    CVector x_true(n);
    for (int i = 0; i < n; ++i) x_true[i] = Complex(u(rng), u(rng));
    CVector b(n, Complex(0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b[i] += rows[i][j] * x_true[j];
    lu.factorize();
    lu.solve(b);
    for (int i = 0; i < n; ++i) CHECK(std::abs(b[i] - x_true[i]) < 1e-12);
}

TEST_CASE("jet2 arithmetic against hand derivatives") {
    Jet2 x = Jet2::var(1.7);
    Jet2 y = pow(x, 2.0) / (Jet2::cst(1.0) + x);
    // y = x^2/(1+x); y' = (x^2 + 2x)/(1+x)^2; y'' = 2/(1+x)^3
    double v = 1.7 * 1.7 / 2.7;
    double d = (1.7 * 1.7 + 2 * 1.7) / (2.7 * 2.7);
    double dd = 2.0 / (2.7 * 2.7 * 2.7);
    CHECK(y.v == doctest::Approx(v).epsilon(1e-14));
    CHECK(y.d == doctest::Approx(d).epsilon(1e-14));
    CHECK(y.dd == doctest::Approx(dd).epsilon(1e-14));
}
