#include "spiral/singular_ode.hpp"

#include <algorithm>
#include <cmath>

namespace spiral {

IndicialRoots indicial_roots(int n, double mu) {
    if (!(mu > 0.5)) throw DomainError("indicial_roots: need mu > 1/2");
    IndicialRoots r{};
    r.lambda1 = 2.0 * mu + n * mu;
    r.lambda2 = 0.0;
    r.lambda3 = 2.0 * mu - n * mu;
    r.sorted[0] = r.lambda1;
    r.sorted[1] = r.lambda2;
    r.sorted[2] = r.lambda3;
    std::sort(r.sorted, r.sorted + 3, std::greater<double>());
    const double scale = std::max({1.0, std::abs(r.lambda1), std::abs(r.lambda3)});
    r.logarithmic = std::abs(r.sorted[0] - r.sorted[1]) < 1e-12 * scale ||
                    std::abs(r.sorted[1] - r.sorted[2]) < 1e-12 * scale;
    return r;
}

HypParams hyp_params(int n, double mu) {
    const double disc = double(n) * n * mu * mu - 2.0 * mu + 1.0;
    if (disc < 0) throw DomainError("hyp_params: negative discriminant");
    const double root = std::sqrt(disc);
    return {n * mu + root, n * mu - root};
}

ModeOdeSystem mode_ode_system(int n, double mu) {
    return {n, mu, indicial_roots(n, mu), hyp_params(n, mu)};
}

Complex hyp2f2(double a1, double a2, double b1, double b2, Complex z) {
    auto bad = [](double b) { return b <= 0.0 && std::abs(b - std::round(b)) < 1e-14; };
    if (bad(b1) || bad(b2))
        throw DomainError("hyp2f2: denominator parameter is a non-positive integer");
    if (std::abs(z) > 48.0)
        throw NumericalError("hyp2f2: |z| too large for the series path (limit 48)");
    using CL = std::complex<long double>;
    const CL zl(static_cast<long double>(z.real()), static_cast<long double>(z.imag()));
    CL term = 1.0L, sum = 1.0L, comp = 0.0L;
    for (long k = 0; k < 100000; ++k) {
        term *= (static_cast<long double>(a1) + k) * (static_cast<long double>(a2) + k) /
                ((static_cast<long double>(b1) + k) * (static_cast<long double>(b2) + k)) * zl /
                static_cast<long double>(k + 1);
        // Kahan-compensated accumulation
        CL y = term - comp;
        CL t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (std::abs(term) < 1e-16L * std::abs(sum) && k > 3)
            return Complex(static_cast<double>(sum.real()), static_cast<double>(sum.imag()));
    }
    throw NumericalError("hyp2f2: series did not converge within 1e5 terms");
}

Complex homogeneous_mode_solution(int n, double mu, double beta) {
    if (n < 2) throw PreconditionError("homogeneous_mode_solution: need n >= 2");
    if (!(mu > 0.5)) throw DomainError("homogeneous_mode_solution: need mu > 1/2");
    if (!(beta > 0) || n * beta > 48.0)
        throw NumericalError("homogeneous_mode_solution: beta outside the series-stable range");
    const auto hp = hyp_params(n, mu);
    Complex f = hyp2f2(hp.alpha1 + 1.0, hp.alpha2 + 1.0, 2.0 * mu + n * mu + 1.0,
                       2.0 * n * mu + 1.0, Complex(0.0, -double(n) * beta));
    return std::pow(beta, 2.0 * mu + n * mu) * f;
}

double homogeneous_growth_exponent(int n, double mu) {
    return 2.0 * mu - 1.0 + std::sqrt(double(n) * n * mu * mu - 2.0 * mu + 1.0);
}

double SingularOdeProblem::q_of(double x) const {
    if (x <= 1.0) return q1_ * q1_;
    if (x >= 2.0) return q2_ * q2_;
    const double u = x - 1.0;
    const double s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    return q1_ * q1_ + (q2_ * q2_ - q1_ * q1_) * s;
}

double SingularOdeProblem::transition_value(const RVector& y, const RVector& v, double x,
                                            bool want_v) const {
    const double t = std::log(x);
    const RVector& arr = want_v ? v : y;
    return interp_cubic(0.0, ts_h_, arr, t);
}

double SingularOdeProblem::y1(double x) const {
    if (x <= 1.0) return std::pow(x, q1_);
    if (x >= 2.0) return c1_ * std::pow(x, q2_) + c2_ * std::pow(x, -q2_);
    return transition_value(ty1_, tv1_, x, false);
}

double SingularOdeProblem::y2(double x) const {
    if (x >= 2.0) return std::pow(x, -q2_);
    if (x <= 1.0) return c3_ * std::pow(x, -q1_) + c4_ * std::pow(x, q1_);
    return transition_value(ty2_, tv2_, x, false);
}

double SingularOdeProblem::xdy1(double x) const {
    if (x <= 1.0) return q1_ * std::pow(x, q1_);
    if (x >= 2.0) return q2_ * (c1_ * std::pow(x, q2_) - c2_ * std::pow(x, -q2_));
    return transition_value(ty1_, tv1_, x, true);
}

double SingularOdeProblem::xdy2(double x) const {
    if (x >= 2.0) return -q2_ * std::pow(x, -q2_);
    if (x <= 1.0) return q1_ * (-c3_ * std::pow(x, -q1_) + c4_ * std::pow(x, q1_));
    return transition_value(ty2_, tv2_, x, true);
}

RVector SingularOdeProblem::xw_samples() const {
    RVector w(grid_.size());
    for (int i = 0; i < grid_.size(); ++i) {
        const double x = grid_[i];
        w[i] = y1(x) * xdy2(x) - y2(x) * xdy1(x);
    }
    return w;
}

SingularOdeProblem build_fundamental(double q1, double q2, const RadialGrid& grid) {
    if (!(q1 > 0) || !(q2 > 0)) throw DomainError("build_fundamental: need q1, q2 > 0");
    SingularOdeProblem p;
    p.q1_ = q1;
    p.q2_ = q2;
    p.grid_ = grid;

    // Integrate (y, v = x y') across the transition [1, 2] in t = log x:
    // dy/dt = v, dv/dt = q(e^t) y.  RK4 with fixed steps; data exact at both ends.
    const int steps = 4096;
    const double t_end = std::log(2.0);
    p.ts_h_ = t_end / steps;
    auto rhs = [&p](double t, double y, double v, double& dy, double& dv) {
        dy = v;
        dv = p.q_of(std::exp(t)) * y;
    };
    auto rk4 = [&rhs](double t, double h, double& y, double& v) {
        double k1y, k1v, k2y, k2v, k3y, k3v, k4y, k4v;
        rhs(t, y, v, k1y, k1v);
        rhs(t + h / 2, y + h / 2 * k1y, v + h / 2 * k1v, k2y, k2v);
        rhs(t + h / 2, y + h / 2 * k2y, v + h / 2 * k2v, k3y, k3v);
        rhs(t + h, y + h * k3y, v + h * k3v, k4y, k4v);
        y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
        v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    };

    p.ty1_.resize(steps + 1);
    p.tv1_.resize(steps + 1);
    {
        double y = 1.0, v = q1;  // y1 = x^{q1} at x = 1
        p.ty1_[0] = y;
        p.tv1_[0] = v;
        for (int i = 0; i < steps; ++i) {
            rk4(i * p.ts_h_, p.ts_h_, y, v);
            if (!std::isfinite(y) || !std::isfinite(v))
                throw NumericalError("build_fundamental: y1 integration failed at x = " +
                                     std::to_string(std::exp((i + 1) * p.ts_h_)));
            p.ty1_[i + 1] = y;
            p.tv1_[i + 1] = v;
        }
        const double x2q = std::pow(2.0, q2);
        p.c1_ = 0.5 * (y + v / q2) / x2q;
        p.c2_ = 0.5 * (y - v / q2) * x2q;
    }
    p.ty2_.resize(steps + 1);
    p.tv2_.resize(steps + 1);
    {
        double y = std::pow(2.0, -q2), v = -q2 * y;  // y2 = x^{-q2} at x = 2
        p.ty2_[steps] = y;
        p.tv2_[steps] = v;
        for (int i = steps; i > 0; --i) {
            rk4(i * p.ts_h_, -p.ts_h_, y, v);
            if (!std::isfinite(y) || !std::isfinite(v))
                throw NumericalError("build_fundamental: y2 integration failed at x = " +
                                     std::to_string(std::exp((i - 1) * p.ts_h_)));
            p.ty2_[i - 1] = y;
            p.tv2_[i - 1] = v;
        }
        p.c3_ = 0.5 * (y - v / q1);
        p.c4_ = 0.5 * (y + v / q1);
    }
    p.wronskian_c_ = -2.0 * q1 * p.c3_;
    if (!(p.wronskian_c_ < 0))
        throw NumericalError("build_fundamental: Wronskian sign check failed (C >= 0)");

    p.y1s_.resize(grid.size());
    p.y2s_.resize(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        p.y1s_[i] = p.y1(grid[i]);
        p.y2s_[i] = p.y2(grid[i]);
    }
    return p;
}

double fitted_growth_exponent(int n, double mu) {
    // oscillation-averaged anchors over [5, 15], least squares on
    // ln|Psi1| = g ln(beta) + c + d / beta^2
    const int K = 24, P = 48;
    const double period = 2.0 * M_PI / n;
    std::vector<double> X, Y, Z;
    for (int k = 0; k < K; ++k) {
        double beta = 5.0 + (10.0 - period) * k / double(K - 1);
        double acc = 0;
        for (int p = 0; p < P; ++p)
            acc += std::log(std::abs(homogeneous_mode_solution(n, mu, beta + period * (p + 0.5) / P)));
        const double bmid = beta + period / 2;
        X.push_back(std::log(bmid));
        Z.push_back(1.0 / (bmid * bmid));
        Y.push_back(acc / P);
    }
    double A[3][3] = {}, b[3] = {};
    for (size_t k = 0; k < X.size(); ++k) {
        const double row[3] = {X[k], 1.0, Z[k]};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) A[i][j] += row[i] * row[j];
            b[i] += row[i] * Y[k];
        }
    }
    for (int c = 0; c < 3; ++c) {
        int p = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
        std::swap(A[c], A[p]);
        std::swap(b[c], b[p]);
        for (int r = c + 1; r < 3; ++r) {
            const double f = A[r][c] / A[c][c];
            for (int j = c; j < 3; ++j) A[r][j] -= f * A[c][j];
            b[r] -= f * b[c];
        }
    }
    double sol[3];
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < 3; ++j) s -= A[r][j] * sol[j];
        sol[r] = s / A[r][r];
    }
    return sol[0];
}

namespace {

double weighted_sup(const RadialGrid& g, const RVector& f, double mu, double alpha) {
    double m = 0;
    for (int i = 0; i < g.size(); ++i) {
        const double x = g[i];
        m = std::max(m, std::pow(std::hypot(x, 1.0), alpha) * std::pow(x, 2.0 * mu - 1.0) *
                            std::abs(f[i]));
    }
    return m;
}

void check_exponents(const SingularOdeProblem& prob, double mu, double alpha) {
    if (!(prob.q1() - 2.0 * mu + 1.0 > 0))
        throw DomainError("green_solve: exponent condition q1 - 2 mu + 1 > 0 fails");
    if (!(prob.q2() - 2.0 * mu - alpha + 1.0 > 0))
        throw DomainError("green_solve: exponent condition q2 - 2 mu - alpha + 1 > 0 fails");
}

double fit_or(double f0, double f1, double h, double fallback) {
    Complex p = quad::fit_log_slope(Complex(f0), Complex(f1), h, Complex(fallback));
    return p.real();
}

GreenSolution assemble(const SingularOdeProblem& prob, const RVector& u1, const RVector& u2,
                       const RVector& f, double mu, double alpha) {
    const auto& g = prob.grid();
    GreenSolution sol;
    sol.y.resize(g.size());
    RVector dy(g.size());
    for (int i = 0; i < g.size(); ++i) {
        const double x = g[i];
        sol.y[i] = u1[i] * prob.y1(x) + u2[i] * prob.y2(x);
        dy[i] = (u1[i] * prob.xdy1(x) + u2[i] * prob.xdy2(x)) / x;  // y' = u1 y1' + u2 y2'
    }
    sol.weighted_in = weighted_sup(g, f, mu, alpha);
    RVector xdy(g.size());
    for (int i = 0; i < g.size(); ++i) xdy[i] = g[i] * dy[i];
    sol.weighted_out = weighted_sup(g, sol.y, mu, alpha) + weighted_sup(g, xdy, mu, alpha);
    return sol;
}

// Per-cell Gauss quadrature in t = log x of w(x(t)) f(x(t)), splitting cells
// at the listed discontinuities of f.
double gauss_cell(const RadialGrid& g, const std::function<double(double)>& w,
                  const RadialData& f, int i) {
    static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                 0.4786286704993665, 0.2369268850561891};
    const double ta = g.log_node(i), tb = g.log_node(i + 1);
    std::vector<double> pts{ta};
    for (double br : f.breaks) {
        double tbr = std::log(br);
        if (tbr > ta + 1e-14 && tbr < tb - 1e-14) pts.push_back(tbr);
    }
    pts.push_back(tb);
    std::sort(pts.begin(), pts.end());
    double cell = 0;
    for (size_t s = 0; s + 1 < pts.size(); ++s) {
        const double mid = 0.5 * (pts[s] + pts[s + 1]);
        const double half = 0.5 * (pts[s + 1] - pts[s]);
        for (int k = 0; k < 5; ++k) {
            const double x = std::exp(mid + half * gx[k]);
            cell += gw[k] * half * w(x) * f.fn(x);
        }
    }
    return cell;
}

RVector gauss_cumulative(const RadialGrid& g, const std::function<double(double)>& w,
                         const RadialData& f) {
    const int N = g.size();
    RVector out(N);
    out[0] = 0;
    double acc = 0, comp = 0;
    for (int i = 0; i + 1 < N; ++i) {
        double cell = gauss_cell(g, w, f, i);
        double y = cell - comp;
        double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        out[i + 1] = acc;
    }
    return out;
}

// int_{x_i}^{x_max}, accumulated from the right to avoid cancellation.
RVector gauss_cumulative_right(const RadialGrid& g, const std::function<double(double)>& w,
                               const RadialData& f) {
    const int N = g.size();
    RVector out(N);
    out[N - 1] = 0;
    double acc = 0, comp = 0;
    for (int i = N - 2; i >= 0; --i) {
        double cell = gauss_cell(g, w, f, i);
        double y = cell - comp;
        double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        out[i] = acc;
    }
    return out;
}

struct GreenParts {
    RVector u1, u2, fsamp;
};

// Shared quadrature skeleton for the two Green solvers.  w1/w2 are the
// integrand weights (y2, y1 for prop_B2; y2', y1' for prop_B3), measure_pow
// distinguishes dt/t (0) from dt (1), and the tails integrate the fitted
// power law against the exact power-law form of y1/y2 outside [1, 2].
GreenParts green_quadratures(const SingularOdeProblem& prob, const RadialData& f, double mu,
                             double alpha, bool derivform) {
    const auto& g = prob.grid();
    const int N = g.size();
    const double h = g.log_step();
    const double C = prob.wronskian_c();
    const double q1 = prob.q1(), q2 = prob.q2();

    GreenParts parts;
    parts.fsamp.resize(N);
    for (int i = 0; i < N; ++i) parts.fsamp[i] = f.fn(g[i]);

    // integrands in the log measure: dt/t = ds; derivform uses dt = x ds
    auto w_u2 = [&](double x) { return derivform ? prob.xdy1(x) : prob.y1(x); };
    auto w_u1 = [&](double x) { return derivform ? prob.xdy2(x) : prob.y2(x); };

    RVector cum2 = gauss_cumulative(g, w_u2, f);
    RVector cum1 = gauss_cumulative_right(g, w_u1, f);

    // analytic tails from fitted local power laws of f
    const double f0a = f.fn(g[0]), f0b = f.fn(g[0] * std::exp(h));
    const double p0 = fit_or(f0a, f0b, h, 1.0 - 2.0 * mu);
    double den0 = q1 + p0 > 1e-3 ? q1 + p0 : q1 + (1.0 - 2.0 * mu);
    double tail0 = std::pow(g[0], q1) * f0a / den0;
    if (derivform) tail0 *= q1;

    const double f1a = f.fn(g[N - 1] * std::exp(-h)), f1b = f.fn(g[N - 1]);
    const double p1 = fit_or(f1a, f1b, h, 1.0 - 2.0 * mu - alpha);
    double den1 = q2 - p1 > 1e-3 ? q2 - p1 : q2 - (1.0 - 2.0 * mu - alpha);
    double tail1 = std::pow(g[N - 1], -q2) * f1b / den1;
    if (derivform) tail1 *= -q2;

    const double sign = derivform ? -1.0 : 1.0;
    parts.u1.resize(N);
    parts.u2.resize(N);
    for (int i = 0; i < N; ++i) {
        parts.u2[i] = sign * (cum2[i] + tail0) / C;
        parts.u1[i] = sign * (cum1[i] + tail1) / C;
    }
    return parts;
}

RadialData wrap_samples(const RadialGrid& g, const RVector& f) {
    CVector fc(f.begin(), f.end());
    const double t0 = g.log_node(0), h = g.log_step();
    RadialData d;
    d.fn = [fc, t0, h](double x) {
        return interp_cubic(t0, h, fc, std::log(x)).real();
    };
    return d;
}

}  // namespace

GreenSolution green_solve(const SingularOdeProblem& prob, const RadialData& f, double mu,
                          double alpha) {
    check_exponents(prob, mu, alpha);
    auto parts = green_quadratures(prob, f, mu, alpha, false);
    return assemble(prob, parts.u1, parts.u2, parts.fsamp, mu, alpha);
}

GreenSolution green_solve(const SingularOdeProblem& prob, const RVector& f, double mu,
                          double alpha) {
    if (static_cast<int>(f.size()) != prob.grid().size())
        throw PreconditionError("green_solve: f must be sampled on the problem grid");
    return green_solve(prob, wrap_samples(prob.grid(), f), mu, alpha);
}

GreenSolution green_solve_derivform(const SingularOdeProblem& prob, const RadialData& f,
                                    double mu, double alpha) {
    check_exponents(prob, mu, alpha);
    auto parts = green_quadratures(prob, f, mu, alpha, true);
    return assemble(prob, parts.u1, parts.u2, parts.fsamp, mu, alpha);
}

GreenSolution green_solve_derivform(const SingularOdeProblem& prob, const RVector& f, double mu,
                                    double alpha) {
    if (static_cast<int>(f.size()) != prob.grid().size())
        throw PreconditionError("green_solve_derivform: f must be sampled on the problem grid");
    return green_solve_derivform(prob, wrap_samples(prob.grid(), f), mu, alpha);
}

double ode_residual(const SingularOdeProblem& prob, const RVector& y, const RVector& f) {
    const auto& g = prob.grid();
    LogDerivative D(g);
    RVector dy = D.apply(y);
    RVector ddy = D.apply(dy);  // (x d/dx)^2 y = x^2 y'' + x y'
    double num = 0, den = 0;
    for (int i = 2; i < g.size() - 2; ++i) {
        num = std::max(num, std::abs(ddy[i] - prob.q_of(g[i]) * y[i] - f[i]));
        den = std::max(den, std::abs(f[i]));
    }
    return den > 0 ? num / den : num;
}

namespace {

// Quadratic log-log tail model g ~ g_end e^{p tau + q tau^2/2} fitted on the
// three end nodes; integrated against e^{-b |tau|} this contributes
// g_end (1/b + q/b^3) with b = |a + p|.  Falls back to a pure power law.
Complex tail_moment(Complex gA, Complex gB, Complex gC, double h, double a, double fallback,
                    bool upper) {
    // gC is the end node, gB one in, gA two in
    const double tiny = 1e-290;
    if (std::abs(gA) < tiny || std::abs(gB) < tiny || std::abs(gC) < tiny) {
        double b = upper ? -(a + fallback) : (a + fallback);
        return b > 1e-3 ? gC / b : Complex(0);
    }
    Complex l1 = std::log(gC / gB), l2 = std::log(gB / gA);
    if (!std::isfinite(l1.real()) || !std::isfinite(l2.real()) ||
        !std::isfinite(l1.imag()) || !std::isfinite(l2.imag())) {
        double b = upper ? -(a + fallback) : (a + fallback);
        return b > 1e-3 ? gC / b : Complex(0);
    }
    // l1 = log(end / adjacent), l2 = log(adjacent / two-in); outward slope p
    // and curvature q of the quadratic log-log model at the end node.
    const Complex q = (l1 - l2) / (h * h);
    const Complex p = upper ? (3.0 * l1 - l2) / (2.0 * h) : (-3.0 * l1 + l2) / (2.0 * h);
    Complex b = upper ? -(a + p) : (a + p);
    if (b.real() < 1e-3) {
        double bf = upper ? -(a + fallback) : (a + fallback);
        return bf > 1e-3 ? gC / bf : Complex(0);
    }
    Complex corr = q / (b * b * b);
    if (std::abs(corr) > 0.5 * std::abs(1.0 / b)) corr = 0;  // fit not power-law-like
    return gC * (1.0 / b + corr);
}

}  // namespace

CVector transport_exponent_solve(double a, const CVector& g, const RadialGrid& grid,
                                 double tail_fallback_lo, double tail_fallback_hi) {
    const int N = grid.size();
    if (static_cast<int>(g.size()) != N)
        throw PreconditionError("transport_exponent_solve: g must be sampled on the grid");
    const double h = grid.log_step();
    if (a > 0) {
        CVector out = quad::weighted_cum_left(Complex(a, 0.0), g, h);
        // analytic lower tail: int_{-inf}^{t0} e^{a(tau - t0)} g dtau
        const Complex tail0 = tail_moment(g[2], g[1], g[0], h, a, tail_fallback_lo, false);
        for (int i = 0; i < N; ++i) out[i] += tail0 * std::exp(-a * h * i);
        return out;
    }
    // a < 0: from the right with analytic upper tail
    CVector out = quad::weighted_cum_right(Complex(a, 0.0), g, h);
    const Complex tail1 = tail_moment(g[N - 3], g[N - 2], g[N - 1], h, a, tail_fallback_hi, true);
    for (int i = 0; i < N; ++i) {
        out[i] += tail1 * std::exp(a * h * (N - 1 - i));
        out[i] = -out[i];
    }
    return out;
}

CVector transport_mode_solve(int n, const CVector& g_hat, double mu, const RadialGrid& grid) {
    const int N = grid.size();
    if (static_cast<int>(g_hat.size()) != N)
        throw PreconditionError("transport_mode_solve: g_hat must be sampled on the grid");
    double gmax = 0;
    for (const auto& v : g_hat) gmax = std::max(gmax, std::abs(v));
    if (n == 0 || n == 1 || n == -1) {
        if (gmax > 0)
            throw PreconditionError(
                "transport_mode_solve: modes n in {0, +1, -1} are excluded (nonzero data)");
        return CVector(N, Complex(0));
    }
    return transport_exponent_solve(mu * n, g_hat, grid, 1.0 - 2.0 * mu, 1.0 - 2.0 * mu);
}

}  // namespace spiral
