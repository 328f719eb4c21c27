#include "spiral/stream.hpp"

#include <cmath>

namespace spiral {

Complex AngularFunction::value(double angle) const {
    Complex acc = 0;
    for (const auto& [n, c] : modes_) acc += c * std::exp(Complex(0.0, n * angle));
    return acc;
}

AngularFunction AngularFunction::pneq() const {
    AngularFunction out(fold_);
    for (const auto& [n, c] : modes_)
        if (n != 0) out.set_mode(n, c);
    return out;
}

AngularFunction AngularFunction::scaled(Complex s) const {
    AngularFunction out(fold_);
    for (const auto& [n, c] : modes_) out.set_mode(n, s * c);
    return out;
}

double AngularFunction::l1_norm(int samples) const {
    double acc = 0;
    for (int j = 0; j < samples; ++j) {
        double th = 2.0 * M_PI * (j + 0.5) / samples;
        acc += std::abs(value(th).real());
    }
    return acc * 2.0 * M_PI / samples;
}

bool AngularFunction::is_m_fold(int m) const {
    double mx = 0;
    for (const auto& [n, c] : modes_) mx = std::max(mx, std::abs(c));
    for (const auto& [n, c] : modes_)
        if (n % m != 0 && std::abs(c) > 1e-12 * mx) return false;
    return true;
}

StreamSolution StreamSolution::radial(const SolverParams& params) {
    StreamSolution sol;
    sol.mu = params.mu;
    sol.psi = SpectralField(params.grid, params.m);
    sol.h = SpectralField(params.grid, params.m);
    sol.singular_coeff = 1.0 / (2.0 * params.mu - 1.0);
    sol.omega = AngularFunction(params.m);
    sol.omega.set_mode(0, Complex(params.gamma));
    return sol;
}

StreamEval::StreamEval(const StreamSolution& sol, const SolverParams& params)
    : grid_(sol.psi.grid()), mu_(sol.mu > 0 ? sol.mu : params.mu), sing_(sol.singular_coeff) {
    LogDerivative D(grid_);
    for (const auto& [n, a] : sol.psi.modes()) {
        ModeData md;
        md.n = n;
        md.a = a;
        CVector da = D.apply(a);
        md.b.resize(a.size());
        for (int i = 0; i < grid_.size(); ++i) md.b[i] = da[i] / grid_[i];
        CVector dbb = D.apply(md.b);
        md.db.resize(a.size());
        for (int i = 0; i < grid_.size(); ++i) md.db[i] = dbb[i] / grid_[i];
        modes_.push_back(std::move(md));
    }
}

template <class F>
StreamEval::Derivs StreamEval::eval(F&& coeff_at, double beta, double phi) const {
    Complex psi = 0, psi_b = 0, psi_p = 0, psi_v = 0, psi_bp = 0, psi_bv = 0;
    for (const auto& md : modes_) {
        const Complex a = coeff_at(md.a);
        const Complex b = coeff_at(md.b);
        const Complex db = coeff_at(md.db);
        const Complex in(0.0, double(md.n));
        const Complex ph = std::exp(Complex(0.0, md.n * (beta + phi)));
        psi += a * ph;
        psi_b += (b + in * a) * ph;
        psi_p += in * a * ph;
        psi_v += -b * ph;
        psi_bp += in * (b + in * a) * ph;
        psi_bv += -(db + in * b) * ph;
    }
    // singular direction s beta^{1-2mu}, closed form
    const double s2m = std::pow(beta, -2.0 * mu_);
    const Complex s = sing_;
    psi += s * beta * s2m;
    psi_b += s * (1.0 - 2.0 * mu_) * s2m;
    psi_v += s * (2.0 * mu_ - 1.0) * s2m;
    psi_bv += -s * 2.0 * mu_ * (2.0 * mu_ - 1.0) * s2m / beta;
    return {psi.real(), psi_b.real(), psi_p.real(), psi_v.real(), psi_bp.real(), psi_bv.real()};
}

StreamEval::Derivs StreamEval::at(int i, double phi) const {
    return eval([i](const CVector& c) { return c[i]; }, grid_[i], phi);
}

StreamEval::Derivs StreamEval::at_beta(double beta, double phi) const {
    const double t = std::log(beta);
    const double t0 = grid_.log_node(0);
    const double h = grid_.log_step();
    return eval([&](const CVector& c) { return interp_cubic(t0, h, c, t); }, beta, phi);
}

double h_consistency_error(const StreamSolution& sol, const SolverParams& params) {
    LogDerivative D(sol.psi.grid());
    const auto& g = sol.psi.grid();
    const double mu = params.mu;
    double worst = 0;
    for (const auto& [n, a] : sol.psi.modes()) {
        CVector da = D.apply(a);
        CVector href = sol.h.mode(n);
        double scale = 0;
        for (int i = 0; i < g.size(); ++i)
            scale = std::max(scale, std::pow(g[i], 2.0 * mu - 1.0) * std::abs(href[i]));
        if (scale == 0) scale = 1;
        for (int i = 2; i < g.size() - 2; ++i) {
            Complex h_from_psi =
                a[i] + (da[i] + Complex(0.0, n * g[i]) * a[i]) / (2.0 * mu);
            // compare in the beta^{2mu-1} weighting of the X0 norm
            double w = std::pow(g[i], 2.0 * mu - 1.0);
            worst = std::max(worst, w * std::abs(h_from_psi - href[i]) / scale);
        }
    }
    return worst;
}

bool check_sign_conditions(const StreamSolution& sol, const SolverParams& params) {
    StreamEval ev(sol, params);
    const auto& g = sol.psi.grid();
    RVector phis = collocation_angles(params.m, params.n_modes);
    for (int i = 0; i < g.size(); ++i) {
        const double b2m = std::pow(g[i], 2.0 * params.mu);
        for (double phi : phis) {
            auto d = ev.at(i, phi);
            if (!(b2m * d.psi_varphi > 0)) return false;
            if (!(b2m * d.psi_beta < 0)) return false;
            if (!(b2m * g[i] * d.psi_betavarphi < 0)) return false;
        }
    }
    return true;
}

}  // namespace spiral
