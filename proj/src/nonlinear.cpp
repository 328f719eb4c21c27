#include "spiral/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace spiral {

namespace {

// Collocation analysis: values[i][j] on nodes x angles -> mode field
// (coefficients in the theta = beta + phi convention, truncated to n_modes).
SpectralField analyze(const std::vector<CVector>& values, const SolverParams& p,
                      const RVector& phis, const RadialGrid& grid) {
    const int N = grid.size();
    const int nc = static_cast<int>(phis.size());
    const int kmax = p.n_modes / p.m;
    SpectralField out(grid, p.m);
    for (int k = -kmax; k <= kmax; ++k) {
        const int n = k * p.m;
        CVector c(N);
        for (int i = 0; i < N; ++i) {
            Complex acc = 0;
            for (int j = 0; j < nc; ++j)
                acc += values[i][j] * std::exp(Complex(0, -double(n) * phis[j]));
            c[i] = acc / double(nc) * std::exp(Complex(0, -double(n) * grid[i]));
        }
        out.set_mode(n, std::move(c));
    }
    return out;
}

struct Collocation {
    std::vector<CVector> n1, n2, w3;  // values on nodes x angles
};

Collocation evaluate_terms(const StreamSolution& sol, const AngularFunction* omega,
                           const SolverParams& p, const RVector& phis) {
    const auto& grid = sol.psi.grid();
    const int N = grid.size();
    const int nc = static_cast<int>(phis.size());
    StreamEval ev(sol, p);
    Collocation out;
    out.n1.assign(N, CVector(nc));
    out.n2.assign(N, CVector(nc));
    out.w3.assign(N, CVector(nc));
    const double mu = p.mu;
    std::vector<int> bad(N, 0);
    parallel_for(N, worker_count(), [&](int i) {
        const double b2m = std::pow(grid[i], 2.0 * mu);
        for (int j = 0; j < nc; ++j) {
            auto d = ev.at(i, phis[j]);
            if (!(b2m * d.psi_varphi > 0) || !(b2m * d.psi_beta < 0) ||
                !(b2m * grid[i] * d.psi_betavarphi < 0)) {
                bad[i] = 1;
                return;
            }
            const double n2v = (d.psi_betavarphi * d.psi_phi - d.psi_betaphi * d.psi_varphi) /
                               (2.0 * d.psi_beta);
            const double n1v = 2.0 * d.psi_beta * d.psi_varphi / d.psi_betavarphi -
                               d.psi_betaphi / d.psi_betavarphi * n2v;
            const double n3v =
                d.psi_betavarphi * std::pow(d.psi_varphi, -1.0 / (2.0 * mu)) / (2.0 * mu);
            out.n1[i][j] = n1v;
            out.n2[i][j] = n2v;
            out.w3[i][j] = omega ? n3v * omega->value(phis[j]).real() : n3v;
        }
    });
    for (int i = 0; i < N; ++i)
        if (bad[i])
            throw DegenerateStateError(
                "nonlinear terms: coordinate sign conditions violated at beta = " +
                std::to_string(grid[i]));
    return out;
}

}  // namespace

NonlinearTerms nonlinear_terms(const StreamSolution& sol, const SolverParams& params) {
    RVector phis = collocation_angles(params.m, params.n_modes);
    auto vals = evaluate_terms(sol, nullptr, params, phis);
    NonlinearTerms t;
    t.n1 = analyze(vals.n1, params, phis, sol.psi.grid());
    t.n2 = analyze(vals.n2, params, phis, sol.psi.grid());
    t.n3 = analyze(vals.w3, params, phis, sol.psi.grid());
    return t;
}

SpectralField residual_F(const StreamSolution& sol, const AngularFunction& omega,
                         const SolverParams& params) {
    const auto& grid = sol.psi.grid();
    const int N = grid.size();
    RVector phis = collocation_angles(params.m, params.n_modes);
    auto vals = evaluate_terms(sol, &omega, params, phis);
    SpectralField f1 = analyze(vals.n1, params, phis, grid);
    SpectralField f2 = analyze(vals.n2, params, phis, grid);
    SpectralField w3 = analyze(vals.w3, params, phis, grid);
    LogDerivative D(grid);
    SpectralField g(grid, params.m);
    for (const auto& [n, c1] : f1.modes()) {
        CVector dc1 = D.apply(c1);
        CVector c2 = f2.mode(n);
        CVector c3 = w3.mode(n);
        CVector c(N);
        for (int i = 0; i < N; ++i)
            c[i] = -dc1[i] / grid[i] + Complex(0, double(n)) * c2[i] + c3[i];
        g.set_mode(n, std::move(c));
    }
    return g;
}

bool check_dominant(const VorticityProfile& profile, int m, double eps) {
    const double p0 = profile.p0();
    const double pneq = profile.pneq_total_variation();
    if (std::abs(p0) == 0.0 && pneq > 0.0) {
        std::cerr << "check_dominant: zero-mean profile with nonzero perturbation\n";
        return false;
    }
    return pneq <= eps * std::sqrt(double(m)) * std::abs(p0);
}

NormalizedProfile normalize_profile(const VorticityProfile& profile, double mu) {
    if (profile.kind() != VorticityProfile::Kind::Density)
        throw PreconditionError("normalize_profile: measures must be mollified first");
    const auto c = derive_constants(mu);
    const double A = profile.p0();
    if (A == 0.0) throw DomainError("normalize_profile: P0 of the profile vanishes");
    const double c0 = c.gamma * std::pow(mu, -1.0 / (2.0 * mu));
    NormalizedProfile out;
    out.time_rescale = A / c0;
    const double s = std::pow(mu, 1.0 / (2.0 * mu)) * c0 / A;
    out.omega = profile.density_modes().scaled(Complex(s));
    return out;
}

namespace {

double truncation_band_norm(const SpectralField& psi, const SolverParams& p) {
    double band = 0, total = 0;
    for (const auto& [n, c] : psi.modes()) {
        double m = 0;
        for (int i = 0; i < psi.grid().size(); ++i)
            m = std::max(m, std::pow(psi.grid()[i], 2 * p.mu - 1.0) * std::abs(c[i]));
        total = std::max(total, m);
        if (std::abs(n) > p.n_modes / 2) band = std::max(band, m);
    }
    return total > 0 ? band / total : 0.0;
}

}  // namespace

std::pair<StreamSolution, SolveReport> solve_nonlinear(const VorticityProfile& profile,
                                                       const SolverParams& params,
                                                       bool full_newton) {
    profile.validate();
    SolveReport report;
    report.dominant_ok = check_dominant(profile, params.m, params.eps_dominant);
    auto norm = normalize_profile(profile, params.mu);

    StreamSolution sol = StreamSolution::radial(params);
    sol.omega = norm.omega;
    sol.time_rescale = norm.time_rescale;
    LinearizedSolver lin(params);

    for (int it = 0; it <= params.max_iter; ++it) {
        SpectralField g = residual_F(sol, norm.omega, params);
        const double r = weighted_rhs_norm(g, params);
        report.residual_history.push_back(r);
        report.iterations = it;
        if (r <= params.tol_residual) {
            report.converged = true;
            break;
        }
        if (it == params.max_iter) break;

        StreamSolution delta = lin.solve_field(g);
        if (full_newton) {
            // finite-difference Newton direction, preconditioned by the
            // frozen inverse: a few Richardson corrections of J delta = F
            const double t = 1e-6;
            for (int inner = 0; inner < 3; ++inner) {
                StreamSolution probe = sol;
                probe.psi = sol.psi - delta.psi.scaled(t);
                probe.h = sol.h - delta.h.scaled(t);
                probe.singular_coeff = sol.singular_coeff - t * delta.singular_coeff;
                SpectralField gp = residual_F(probe, norm.omega, params);
                // J delta ~ (F(sol) - F(sol - t delta)) / t
                SpectralField jd(sol.psi.grid(), params.m);
                for (const auto& [n, c] : g.modes()) {
                    CVector cp = gp.mode(n);
                    CVector d(c.size());
                    for (size_t i = 0; i < c.size(); ++i) d[i] = (c[i] - cp[i]) / t;
                    jd.set_mode(n, std::move(d));
                }
                StreamSolution corr = lin.solve_field(jd - g);
                delta.psi = delta.psi - corr.psi;
                delta.h = delta.h - corr.h;
                delta.singular_coeff -= corr.singular_coeff;
            }
        }
        sol.psi = sol.psi - delta.psi;
        sol.h = sol.h - delta.h;
        sol.singular_coeff -= delta.singular_coeff;
    }
    report.truncation_estimate = truncation_band_norm(sol.psi, params);
    // coordinate-validity scan for the report flag
    {
        StreamEval ev(sol, params);
        const auto& grid = sol.psi.grid();
        RVector phis = collocation_angles(params.m, params.n_modes);
        bool flip = false;
        for (int i = 0; i < grid.size() && !flip; ++i) {
            for (double phi : phis) {
                auto d = ev.at(i, phi);
                const double rsq = -d.psi_beta / params.mu;
                if (!(rsq > 0) || !(d.psi_betavarphi < 0)) {
                    flip = true;
                    break;
                }
            }
        }
        report.jacobian_sign_flip = flip;
    }
    return {std::move(sol), std::move(report)};
}

double residual_on_refined_grid(const StreamSolution& sol, const SolverParams& params) {
    SolverParams fine = params;
    fine.grid = params.grid.refined();
    StreamSolution up;
    up.mu = sol.mu;
    up.singular_coeff = sol.singular_coeff;
    up.time_rescale = sol.time_rescale;
    up.omega = sol.omega;
    up.psi = SpectralField(fine.grid, params.m);
    up.h = SpectralField(fine.grid, params.m);
    for (const auto& [n, c] : sol.psi.modes()) up.psi.set_mode(n, midpoint_refine(c));
    for (const auto& [n, c] : sol.h.modes()) up.h.set_mode(n, midpoint_refine(c));
    SpectralField g = residual_F(up, sol.omega, fine);
    return weighted_rhs_norm(g, fine);
}

}  // namespace spiral
