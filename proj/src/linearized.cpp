#include "spiral/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "spiral/singular_ode.hpp"

namespace spiral {

CVector t0_mode(int n, const CVector& h, double mu, const RadialGrid& grid) {
    const int N = grid.size();
    if (static_cast<int>(h.size()) != N)
        throw PreconditionError("t0_mode: coefficient length != grid size");
    const double hstep = grid.log_step();
    CVector out(N);
    if (n == 0) {
        // F(beta) = 2mu beta^{-2mu} int_0^beta s^{2mu-1} H ds, log-measure form
        CVector wcl = quad::weighted_cum_left(Complex(2.0 * mu, 0.0), h, hstep);
        Complex p = quad::fit_log_slope(h[0], h[1], hstep, Complex(1.0 - 2.0 * mu));
        if (2.0 * mu + p.real() < 1e-3) p = Complex(1.0 - 2.0 * mu);
        const Complex tail0 = h[0] / (2.0 * mu + p);
        for (int i = 0; i < N; ++i)
            out[i] = 2.0 * mu * (wcl[i] + tail0 * std::exp(-2.0 * mu * hstep * i));
        return out;
    }
    // Oscillatory mode: F_n(beta) = 2mu beta^{-2mu} e^{-i n beta}
    //                      int_0^beta s^{2mu-1} e^{i n s} H_n(s) ds  (Filon)
    CVector g(N);
    for (int i = 0; i < N; ++i) g[i] = std::pow(grid[i], 2.0 * mu - 1.0) * h[i];
    CVector cum = quad::filon_cum_left(double(n), grid.nodes(), g);
    Complex pg = quad::fit_log_slope(g[0], g[1], hstep, Complex(0.0));
    if (pg.real() <= -0.999) pg = Complex(0.0);
    const Complex tail = quad::filon_lower_tail(double(n), grid[0], g[0], pg);
    for (int i = 0; i < N; ++i) {
        const double b = grid[i];
        out[i] = 2.0 * mu * std::pow(b, -2.0 * mu) * std::exp(Complex(0.0, -double(n) * b)) *
                 (cum[i] + tail);
    }
    return out;
}

SpectralField apply_T0(const SpectralField& h, double mu) {
    SpectralField out(h.grid(), h.fold());
    for (const auto& [n, c] : h.modes()) out.set_mode(n, t0_mode(n, c, mu, h.grid()));
    return out;
}

void apply_T0_with_deriv(const SpectralField& h, double mu, SpectralField& f,
                         SpectralField& f_beta) {
    f = apply_T0(h, mu);
    f_beta = SpectralField(h.grid(), h.fold());
    const auto& g = h.grid();
    for (const auto& [n, c] : h.modes()) {
        CVector fm = f.mode(n);
        CVector d(c.size());
        for (int i = 0; i < g.size(); ++i) {
            // exact relation H = F + (beta/2mu)(F' + i n F)
            d[i] = 2.0 * mu * (c[i] - fm[i]) / g[i] - Complex(0.0, double(n)) * fm[i];
        }
        f_beta.set_mode(n, std::move(d));
    }
}

SpectralField apply_L(const StreamSolution& sol, const SolverParams& params) {
    const auto& grid = sol.psi.grid();
    const int N = grid.size();
    const double mu = params.mu, gamma = params.gamma;
    LogDerivative D(grid);
    SpectralField out(grid, sol.psi.fold());
    // union of psi/h modes
    std::map<int, bool> keys;
    for (const auto& [n, c] : sol.psi.modes()) keys[n] = true;
    for (const auto& [n, c] : sol.h.modes()) keys[n] = true;
    if (std::abs(sol.singular_coeff) > 0) keys[0] = true;
    for (const auto& [n, unused] : keys) {
        CVector hn = sol.h.mode(n);
        CVector pn = sol.psi.mode(n);
        CVector dh = D.apply(hn);
        CVector ddh = D.apply(dh);
        CVector g(N);
        for (int i = 0; i < N; ++i) {
            const double b = grid[i];
            g[i] = (ddh[i] - mu * mu * double(n) * double(n) * hn[i] +
                    Complex(0.0, 0.5 * gamma * n) * b * pn[i]) /
                   (mu * b);
        }
        if (n == 0) {
            const Complex s = sol.singular_coeff;
            const double c = (1.0 - 2.0 * mu) * (1.0 - 2.0 * mu) / (2.0 * mu * mu);
            for (int i = 0; i < N; ++i) g[i] += s * c * std::pow(grid[i], -2.0 * mu);
        }
        out.set_mode(n, std::move(g));
    }
    return out;
}

double weighted_rhs_norm(const SpectralField& g, const SolverParams& params) {
    const auto& grid = g.grid();
    RVector phis = collocation_angles(params.m, params.n_modes);
    double worst = 0;
    for (int i = 2; i < grid.size() - 2; ++i) {
        const double w = std::pow(grid[i], 2.0 * params.mu);
        for (double phi : phis) worst = std::max(worst, w * std::abs(g.value_at(i, phi)));
    }
    return worst;
}

struct LinearizedSolver::Impl {
    LogDerivative D;
    mutable std::mutex mtx;
    mutable std::map<int, std::unique_ptr<BandedComplexLU>> lu;
    explicit Impl(const RadialGrid& g) : D(g) {}
};

LinearizedSolver::LinearizedSolver(const SolverParams& params)
    : params_(params), impl_(std::make_unique<Impl>(params.grid)) {}
LinearizedSolver::~LinearizedSolver() = default;

namespace {

constexpr int kBand = 14;
constexpr int kSeriesOrder = 4;  // local series terms at beta_min

// int_{t_max}^inf f dt for f ~ f_end e^{p tau + q tau^2/2} fitted on the last
// three nodes (quadratic log model; requires Re p < 0).
Complex upper_tail_integral(const CVector& f, double h, double fallback_p) {
    const int N = static_cast<int>(f.size());
    const double tiny = 1e-290;
    for (int k = 1; k <= 3; ++k)
        if (std::abs(f[N - k]) < tiny) return -f[N - 1] / fallback_p;
    const Complex l1 = std::log(f[N - 1] / f[N - 2]);
    const Complex l2 = std::log(f[N - 2] / f[N - 3]);
    Complex p = (3.0 * l1 - l2) / (2.0 * h);
    Complex q = (l1 - l2) / (h * h);
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag()) || p.real() > -1e-3)
        return -f[N - 1] / fallback_p;
    const Complex b = -p;
    Complex corr = q / (b * b * b);
    if (std::abs(corr) > 0.5 * std::abs(1.0 / b)) corr = 0;
    return f[N - 1] * (1.0 / b + corr);
}

// Frobenius-type local series u_j = beta^{lambda} sum_k u_{j,k} beta^k of the
// mode system
//   D u1 = 2mu u2 - (2mu + i n beta) u1,  D u2 = u3,
//   D u3 = mu^2 n^2 u2 - (gamma/2) i n beta u1 + r0 beta^{lambda},
// either the admissible homogeneous branch (lambda = |n| mu, r0 = 0,
// u2_0 = 1) or the particular response to a pure power (r0 = 1).
struct LocalSeries {
    Complex u1[kSeriesOrder], u2[kSeriesOrder], u3[kSeriesOrder];
    bool ok = true;
};

LocalSeries local_series(int n, double mu, double gamma, Complex lambda, bool particular) {
    LocalSeries s;
    const Complex in(0.0, double(n));
    const double sig2 = mu * mu * double(n) * double(n);
    Complex u1prev = 0;
    for (int k = 0; k < kSeriesOrder; ++k) {
        const Complex lk = lambda + double(k);
        const Complex den2 = lk * lk - sig2;
        Complex src = 0;
        if (particular && k == 0) src = 1.0;
        if (!particular && k == 0) {
            s.u2[0] = 1.0;
        } else {
            if (std::abs(den2) < 1e-6 * std::max(1.0, sig2)) {
                s.ok = false;
                return s;
            }
            s.u2[k] = (src - 0.5 * gamma * in * u1prev) / den2;
        }
        s.u3[k] = lk * s.u2[k];
        s.u1[k] = (2.0 * mu * s.u2[k] - in * u1prev) / (lk + 2.0 * mu);
        u1prev = s.u1[k];
    }
    return s;
}

Complex series_at(const Complex* c, double b) {
    Complex acc = 0;
    double bk = 1.0;
    for (int k = 0; k < kSeriesOrder; ++k) {
        acc += c[k] * bk;
        bk *= b;
    }
    return acc;
}

}  // namespace

ModeSolution LinearizedSolver::solve_mode_g(int n, const CVector& g) const {
    const auto& grid = params_.grid;
    const int N = grid.size();
    if (static_cast<int>(g.size()) != N)
        throw PreconditionError("solve_mode_g: rhs length != grid size");
    if (n == 1 || n == -1)
        throw PreconditionError("solve_mode_g: modes n = +1/-1 are unsupported (uniqueness fails)");
    const double mu = params_.mu, gamma = params_.gamma, hstep = grid.log_step();

    if (n == 0) {
        // P0 F1(beta) = int_beta^inf g0 ds (linear measure)
        CVector integrand(N);
        for (int i = 0; i < N; ++i) integrand[i] = g[i] * grid[i];
        CVector cum = quad::cumulative_right(integrand, hstep);
        const Complex tail =
            upper_tail_integral(integrand, hstep, 1.0 - 2.0 * mu - params_.alpha);
        CVector p0f1(N);
        for (int i = 0; i < N; ++i) p0f1[i] = cum[i] + tail;
        return solve_mode_zero(p0f1);
    }

    // assemble (or fetch) the banded LU for this mode
    BandedComplexLU* lu = nullptr;
    {
        std::lock_guard<std::mutex> lock(impl_->mtx);
        auto it = impl_->lu.find(n);
        if (it == impl_->lu.end()) {
            auto mat = std::make_unique<BandedComplexLU>(3 * N, kBand, kBand);
            const Complex in(0.0, double(n));
            const double n2 = double(n) * double(n);
            for (int i = 0; i < N; ++i) {
                const double b = grid[i];
                auto dr = impl_->D.row(i);
                const int rA = 3 * i, rB = 3 * i + 1, rC = 3 * i + 2;
                // R_B everywhere: D h - u3 = 0
                for (int k = 0; k < 5; ++k) mat->at(rB, 3 * (dr.first + k) + 1) += dr.c[k];
                mat->at(rB, 3 * i + 2) += -1.0;
                if (i == 0) {
                    // branch-selection rows replacing R_A(0) and R_C(0):
                    // annihilate everything that is not (admissible branch +
                    // local particular), written in product form to avoid
                    // dividing by series values.
                    const auto hs =
                        local_series(n, mu, gamma, Complex(std::abs(n) * mu), false);
                    const Complex s1 = series_at(hs.u1, b), s2 = series_at(hs.u2, b),
                                  s3 = series_at(hs.u3, b);
                    mat->at(rA, 0) += s2;   // u1 * S2 - u2 * S1 = rhs_A
                    mat->at(rA, 1) += -s1;
                    mat->at(rC, 2) += s2;   // u3 * S2 - u2 * S3 = rhs_C
                    mat->at(rC, 1) += -s3;
                    continue;
                }
                // R_A: D psi + (2mu + i n beta) psi - 2mu h = 0
                for (int k = 0; k < 5; ++k) mat->at(rA, 3 * (dr.first + k)) += dr.c[k];
                mat->at(rA, 3 * i) += 2.0 * mu + in * b;
                mat->at(rA, 3 * i + 1) += -2.0 * mu;
                if (i == N - 1) {
                    // far-field Dirichlet row replacing R_C(N-1)
                    mat->at(rC, 3 * i + 1) += 1.0;
                    continue;
                }
                // R_C: D u3 - mu^2 n^2 h + (gamma/2) i n beta psi = mu beta g
                for (int k = 0; k < 5; ++k) mat->at(rC, 3 * (dr.first + k) + 2) += dr.c[k];
                mat->at(rC, 3 * i + 1) += -mu * mu * n2;
                mat->at(rC, 3 * i) += 0.5 * gamma * in * b;
            }
            mat->factorize();
            it = impl_->lu.emplace(n, std::move(mat)).first;
        }
        lu = it->second.get();
    }

    // rhs vector
    CVector b(3 * N, Complex(0));
    for (int i = 1; i < N - 1; ++i) b[3 * i + 2] = mu * grid[i] * g[i];

    // Boundary data at beta_min: local particular response to the quadratic
    // log-log model of the rhs, r ~ r(b0) e^{q tau + c tau^2/2}.  The
    // curvature term is the second q-derivative of the power-law response
    // (linearity of the response in the data), taken by central differences.
    {
        const double b0 = grid[0];
        const Complex r0 = mu * b0 * g[0];
        const Complex r1 = mu * grid[1] * g[1];
        const Complex r2 = mu * grid[2] * g[2];
        Complex q(2.0 - 2.0 * mu), curv(0.0);
        const double tiny = 1e-290;
        if (std::abs(r0) > tiny && std::abs(r1) > tiny && std::abs(r2) > tiny) {
            const Complex l1 = std::log(r1 / r0), l2 = std::log(r2 / r1);
            const Complex qf = (3.0 * l1 - l2) / (2.0 * hstep);  // (-3y0+4y1-y2)/(2h)
            const Complex cf = (l2 - l1) / (hstep * hstep);      // (y0-2y1+y2)/h^2
            if (std::isfinite(qf.real()) && std::isfinite(qf.imag()) && std::abs(qf) < 20.0) {
                q = qf;
                if (std::isfinite(cf.real()) && std::isfinite(cf.imag()) && std::abs(cf) < 50.0)
                    curv = cf;
            }
        }
        auto response = [&](Complex qq, Complex& v1, Complex& v2, Complex& v3) {
            LocalSeries ps = local_series(n, mu, gamma, qq, true);
            if (!ps.ok) ps = local_series(n, mu, gamma, Complex(2.0 - 2.0 * mu), true);
            v1 = series_at(ps.u1, b0);
            v2 = series_at(ps.u2, b0);
            v3 = series_at(ps.u3, b0);
        };
        Complex u1p = 0, u2p = 0, u3p = 0;
        if (std::abs(r0) > 0) {
            Complex a1, a2, a3, p1, p2, p3, m1, m2, m3;
            response(q, a1, a2, a3);
            const double dq = 1e-2;
            response(q + dq, p1, p2, p3);
            response(q - dq, m1, m2, m3);
            const Complex half_c = 0.5 * curv / (dq * dq);
            u1p = r0 * (a1 + half_c * (p1 - 2.0 * a1 + m1));
            u2p = r0 * (a2 + half_c * (p2 - 2.0 * a2 + m2));
            u3p = r0 * (a3 + half_c * (p3 - 2.0 * a3 + m3));
        }
        const auto hs = local_series(n, mu, gamma, Complex(std::abs(n) * mu), false);
        const Complex s1 = series_at(hs.u1, b0), s2 = series_at(hs.u2, b0),
                      s3 = series_at(hs.u3, b0);
        b[0] = u1p * s2 - u2p * s1;
        b[2] = u3p * s2 - u2p * s3;
    }

    // Far-field selection at beta_max.  The mode equation at large beta reads
    // (D^2 - S) H = b + (2mu-1) H - (gamma/2) i n beta psi,  S = mu^2 n^2 - (2mu-1);
    // inverting D^2 - S through the factored transport integrals picks the
    // branch with no growth at infinity.  Seed the coupling with the
    // stationary-phase estimate psi ~ (2mu / i n beta) H, then defect-correct
    // the Dirichlet value with the exactly solved fields (two passes).
    const double S = mu * mu * double(n) * double(n) - (2.0 * mu - 1.0);
    const double sq = std::sqrt(S);
    const Complex in(0.0, double(n));
    const double fb_lo = 2.0 - 2.0 * mu, fb_hi = 1.0 - 2.0 * mu - params_.alpha;
    CVector bv(N);
    for (int i = 0; i < N; ++i) bv[i] = mu * grid[i] * g[i];
    auto green = [&](const CVector& w) {
        CVector v = transport_exponent_solve(sq, w, grid, fb_lo, fb_hi);
        return transport_exponent_solve(-sq, v, grid, fb_lo, fb_hi);
    };
    {
        CVector h0 = green(bv);
        CVector dh0 = impl_->D.apply(h0);
        CVector w2(N);
        for (int i = 0; i < N; ++i)
            w2[i] = bv[i] + (2.0 * mu - 1.0) / (in * grid[i]) *
                                ((2.0 * mu - 1.0) * h0[i] + dh0[i]);
        CVector h1 = green(w2);
        b[3 * (N - 1) + 2] = h1[N - 1];
    }

    ModeSolution sol;
    sol.psi.resize(N);
    sol.h.resize(N);
    CVector x = b;
    for (int pass = 0;; ++pass) {
        lu->solve(x);
        for (int i = 0; i < N; ++i) {
            sol.psi[i] = x[3 * i];
            sol.h[i] = x[3 * i + 1];
        }
        if (pass == 2) break;
        CVector w(N);
        for (int i = 0; i < N; ++i)
            w[i] = bv[i] + (2.0 * mu - 1.0) * sol.h[i] -
                   0.5 * gamma * in * grid[i] * sol.psi[i];
        CVector hf = green(w);
        x = b;
        x[3 * (N - 1) + 2] = hf[N - 1];
    }
    return sol;
}

ModeSolution LinearizedSolver::solve_mode(int n, const CVector& f1, const CVector& f2) const {
    const auto& grid = params_.grid;
    const int N = grid.size();
    if (n == 1 || n == -1)
        throw PreconditionError("solve_mode: modes n = +1/-1 are unsupported (uniqueness fails)");
    if (n == 0) return solve_mode_zero(f1);
    CVector df1 = impl_->D.apply(f1);
    CVector g(N);
    for (int i = 0; i < N; ++i)
        g[i] = -df1[i] / grid[i] + Complex(0.0, double(n)) * f2[i];
    return solve_mode_g(n, g);
}

ModeSolution LinearizedSolver::solve_mode_zero(const CVector& p0f1) const {
    const auto& grid = params_.grid;
    const int N = grid.size();
    const double mu = params_.mu, alpha = params_.alpha, hstep = grid.log_step();

    // split beta^{2mu-1} P0F1 = (c_alpha beta^{-alpha} like part) + c0
    CVector w(N);
    for (int i = 0; i < N; ++i) w[i] = std::pow(grid[i], 2.0 * mu - 1.0) * p0f1[i];
    const double x1 = std::pow(grid[N - 1], -alpha), x2 = std::pow(grid[N - 4], -alpha);
    const Complex ca = (w[N - 4] - w[N - 1]) / (x2 - x1);
    const Complex c0 = w[N - 1] - ca * x1;

    CVector f0(N);
    for (int i = 0; i < N; ++i) f0[i] = p0f1[i] - c0 * std::pow(grid[i], 1.0 - 2.0 * mu);

    // H01 = mu int_beta^inf F0(s)/s ds  (log measure)
    CVector cum = quad::cumulative_right(f0, hstep);
    const Complex tail = upper_tail_integral(f0, hstep, 1.0 - 2.0 * mu - alpha);
    CVector h01(N);
    for (int i = 0; i < N; ++i) h01[i] = mu * (cum[i] + tail);

    ModeSolution sol;
    sol.h = h01;
    sol.psi = t0_mode(0, h01, mu, grid);
    sol.singular_coeff = 2.0 * c0 * mu * mu / (2.0 * mu - 1.0);
    return sol;
}

namespace {

std::vector<int> rhs_mode_set(const RhsDecomposition& rhs) {
    std::map<int, bool> keys;
    for (const auto& [n, c] : rhs.f1.modes()) keys[n] = true;
    for (const auto& [n, c] : rhs.f2.modes()) keys[n] = true;
    std::vector<int> out;
    for (const auto& [n, u] : keys) out.push_back(n);
    return out;
}

}  // namespace

StreamSolution LinearizedSolver::solve(const RhsDecomposition& rhs) const {
    const auto modes = rhs_mode_set(rhs);
    for (int n : modes) {
        if (n % params_.m != 0)
            throw PreconditionError("solve_linearized: rhs mode " + std::to_string(n) +
                                    " is not a multiple of m");
        if (n == 1 || n == -1) throw PreconditionError("solve_linearized: |n| = 1 unsupported");
    }
    std::vector<ModeSolution> sols(modes.size());
    parallel_for(static_cast<int>(modes.size()), worker_count(), [&](int k) {
        sols[k] = solve_mode(modes[k], rhs.f1.mode(modes[k]), rhs.f2.mode(modes[k]));
    });
    StreamSolution out;
    out.mu = params_.mu;
    out.psi = SpectralField(params_.grid, params_.m);
    out.h = SpectralField(params_.grid, params_.m);
    for (size_t k = 0; k < modes.size(); ++k) {
        out.psi.set_mode(modes[k], sols[k].psi);
        out.h.set_mode(modes[k], sols[k].h);
        out.singular_coeff += sols[k].singular_coeff;
    }
    return out;
}

StreamSolution LinearizedSolver::solve_field(const SpectralField& g) const {
    std::vector<int> modes;
    for (const auto& [n, c] : g.modes()) modes.push_back(n);
    for (int n : modes) {
        if (n % params_.m != 0)
            throw PreconditionError("solve_linearized: rhs mode " + std::to_string(n) +
                                    " is not a multiple of m");
        if (n == 1 || n == -1) throw PreconditionError("solve_linearized: |n| = 1 unsupported");
    }
    std::vector<ModeSolution> sols(modes.size());
    parallel_for(static_cast<int>(modes.size()), worker_count(), [&](int k) {
        sols[k] = solve_mode_g(modes[k], g.mode(modes[k]));
    });
    StreamSolution out;
    out.mu = params_.mu;
    out.psi = SpectralField(params_.grid, params_.m);
    out.h = SpectralField(params_.grid, params_.m);
    for (size_t k = 0; k < modes.size(); ++k) {
        out.psi.set_mode(modes[k], sols[k].psi);
        out.h.set_mode(modes[k], sols[k].h);
        out.singular_coeff += sols[k].singular_coeff;
    }
    return out;
}

namespace {

// Oscillatory transports with a power weight: the fixed-point correction term
// integrates e^{i phase s} chi(s) against s^{a-1} where chi is smooth in
// log s.  Cells are subdivided so the power factor stays resolved, the
// oscillation is handled exactly through the exponential moments, and the
// e^{i phase beta} carrier is divided out so outputs stay smooth.
//
// osc_left  (a > 0): Z(b) = e^{-i phase b} b^{-a} int_0^b s^{a-1} e^{i phase s} chi ds
// osc_right (a < 0): Z(b) = -e^{-i phase b} b^{-a} int_b^inf s^{a-1} e^{i phase s} chi ds
class OscTransport {
  public:
    OscTransport(const RadialGrid& grid, double a, double phase)
        : grid_(grid), a_(a), phase_(phase) {}

    CVector left(const CVector& chi, double fallback_p) const {
        const int N = grid_.size();
        CVector out(N);
        // lower analytic tail: chi ~ chi0 (s/s0)^p, e^{i phase s} expanded in series
        Complex p = quad::fit_log_slope(chi[0], chi[1], grid_.log_step(), Complex(fallback_p));
        if (a_ + p.real() < 1e-3) p = Complex(fallback_p);
        const double s0 = grid_[0];
        // int_0^{s0} s^{a-1} chi0 (s/s0)^p e^{i phase s} ds = chi0 s0^{a-1} series,
        // so the s0^{-a}-normalized tail is chi0 * series / s0
        Complex series = quad::filon_lower_tail(phase_, s0, Complex(1.0), p + a_ - 1.0) / s0;
        // running value of e^{-i phase s_i} s_i^{-a} int_0^{s_i}
        Complex acc = std::exp(Complex(0, -phase_ * s0)) * chi[0] * series;
        out[0] = acc;
        for (int i = 0; i + 1 < N; ++i) {
            const double sl = grid_[i], sr = grid_[i + 1];
            acc = acc * std::exp(Complex(0, -phase_ * (sr - sl))) * std::pow(sl / sr, a_) +
                  cell(chi, i);
            out[i + 1] = acc;
        }
        return out;
    }

    CVector right(const CVector& chi, double fallback_p) const {
        const int N = grid_.size();
        CVector out(N);
        // upper tail by two integrations by parts (|phase| s_max is huge)
        Complex p = quad::fit_log_slope(chi[N - 2], chi[N - 1], grid_.log_step(),
                                        Complex(fallback_p));
        const double s1 = grid_[N - 1];
        const Complex iphi(0.0, phase_);
        // int_{s1}^inf s^{a-1} e^{i phi s} chi ds ~ -e^{i phi s1} s1^{a-1} chi1 / (i phi)
        //   * (1 + (a - 1 + p)/(i phi s1)), normalized by e^{-i phi s1} s1^{-a}
        Complex tail = -(chi[N - 1] / s1) / iphi * (1.0 + (a_ - 1.0 + p) / (iphi * s1));
        Complex acc = tail;
        out[N - 1] = -acc;
        for (int i = N - 2; i >= 0; --i) {
            const double sl = grid_[i], sr = grid_[i + 1];
            acc = acc * std::exp(Complex(0, phase_ * (sr - sl))) * std::pow(sl / sr, -a_) +
                  cell_from_left(chi, i);
            out[i] = -acc;
        }
        return out;
    }

  private:
    const RadialGrid& grid_;
    double a_, phase_;

    // J = e^{-i phase s_r} s_r^{-a} int_{s_l}^{s_r} s^{a-1} e^{i phase s} chi ds
    Complex cell(const CVector& chi, int i) const {
        return cell_impl(chi, i, grid_[i + 1]);
    }
    // same normalized at the left node (for right-to-left accumulation)
    Complex cell_from_left(const CVector& chi, int i) const {
        return cell_impl(chi, i, grid_[i]);
    }

    Complex cell_impl(const CVector& chi, int i, double s_ref) const {
        const double sl = grid_[i], sr = grid_[i + 1];
        const double h = grid_.log_step();
        const int K = std::min(8, std::max(1, (int)std::ceil(std::abs(a_ - 1.0) * h / 0.1)));
        const double t0g = grid_.log_node(0);
        Complex sum = 0;
        for (int k = 0; k < K; ++k) {
            // subcell in log space
            const double ta = std::log(sl) + h * k / K, tb = std::log(sl) + h * (k + 1) / K;
            const double xa = std::exp(ta), xb = std::exp(tb);
            double xs[4];
            Complex fs[4];
            for (int j = 0; j < 4; ++j) {
                const double t = ta + (tb - ta) * j / 3.0;
                const double s = std::exp(t);
                xs[j] = s - xa;
                const Complex c = interp_cubic(t0g, h, chi, t);
                fs[j] = std::pow(s / s_ref, a_ - 1.0) * c;
            }
            Complex cf[4];
            quad::cubic_coeffs(xs, fs, cf);
            Complex M[4];
            quad::exp_moments(Complex(0, phase_), xb - xa, M);
            Complex val = cf[0] * M[0] + cf[1] * M[1] + cf[2] * M[2] + cf[3] * M[3];
            sum += std::exp(Complex(0, phase_ * (xa - s_ref))) * val;
        }
        return sum / s_ref;
    }
};

}  // namespace

HighFreqSolution LinearizedSolver::highfreq_transport_solve(int n, const CVector& f1,
                                                            const CVector& f2, int max_iter,
                                                            double tol) const {
    if (std::abs(n) < 2)
        throw PreconditionError("highfreq_transport_solve: need |n| >= 2");
    const auto& grid = params_.grid;
    const int N = grid.size();
    const double mu = params_.mu, gamma = params_.gamma;

    // step 1: simplified solve with smooth data
    CVector g1(N), g2(N);
    for (int i = 0; i < N; ++i) {
        const Complex ib(0.0, grid[i]);
        g1[i] = -(mu * f1[i] + ib * f2[i]);
        g2[i] = -(mu * f1[i] - ib * f2[i]);
    }
    CVector q1 = transport_mode_solve(n, g1, mu, grid);
    CVector q2 = transport_mode_solve(-n, g2, mu, grid);
    CVector hsimp(N);
    for (int i = 0; i < N; ++i) hsimp[i] = 0.5 * (q1[i] + q2[i]);

    auto wnorm = [&](const CVector& v) {
        double m = 0;
        for (int i = 0; i < N; ++i)
            m = std::max(m, std::pow(grid[i], 2.0 * mu - 1.0) * std::abs(v[i]));
        return m;
    };
    const double scale = std::max(wnorm(hsimp), 1e-300);

    // The iterate is A + e^{-i n beta} B with smooth A = hsimp and smooth
    // carrier B; T0 of the carrier part loses its phase against e^{i n s},
    // the correction transports re-attach it.
    const OscTransport osc_up(grid, mu * n + 1.0, -double(n));
    const OscTransport osc_dn(grid, -mu * n + 1.0, -double(n));
    const double fb = 1.0 - 2.0 * mu;

    HighFreqSolution out;
    // psi = T0(A) + T0(e^{-i n beta} B) = e^{-i n beta} (chi_A + W_B); the
    // A-part is fixed across iterations.
    CVector chi_a(N);
    {
        CVector psiA = t0_mode(n, hsimp, mu, grid);
        for (int i = 0; i < N; ++i)
            chi_a[i] = psiA[i] * std::exp(Complex(0, double(n) * grid[i]));
    }
    CVector B(N, Complex(0));
    for (int it = 0; it < max_iter; ++it) {
        CVector chi(N);
        CVector wb = t0_mode(0, B, mu, grid);
        for (int i = 0; i < N; ++i) chi[i] = chi_a[i] + wb[i];
        // correction Q'' = -(gamma/2mu) d_phi-solve: carrier parts
        CVector z1 = osc_up.left(chi, fb);
        CVector z2 = osc_dn.right(chi, fb);
        CVector bnew(N);
        for (int i = 0; i < N; ++i) {
            // Q1' = -i (gamma/2mu) beta e^{-i n beta} Z1,  Q2' = +i (gamma/2mu) beta e^{-i n beta} Z2
            const Complex ig(0.0, 0.5 * gamma / mu);
            bnew[i] = -(0.5) * (-ig * grid[i] * z1[i] + ig * grid[i] * z2[i]);
        }
        CVector diff(N);
        for (int i = 0; i < N; ++i) diff[i] = bnew[i] - B[i];
        const double upd = wnorm(diff) / scale;
        out.update_norms.push_back(upd);
        B = std::move(bnew);
        if (upd < tol) {
            out.h.resize(N);
            out.psi.resize(N);
            CVector wb2 = t0_mode(0, B, mu, grid);
            CVector psiA = t0_mode(n, hsimp, mu, grid);
            for (int i = 0; i < N; ++i) {
                const Complex carrier = std::exp(Complex(0, -double(n) * grid[i]));
                out.h[i] = hsimp[i] + carrier * B[i];
                out.psi[i] = psiA[i] + carrier * wb2[i];
            }
            return out;
        }
    }
    throw NumericalError("highfreq_transport_solve: fixed point did not contract for n = " +
                         std::to_string(n));
}

}  // namespace spiral
