#include "spiral/physical.hpp"

#include <algorithm>
#include <cmath>

namespace spiral {

double InitialData::omega0(double r, double theta) const {
    // w0(y) = |y|^{-1/mu} w-ring(theta); the datum is gamma^2 B + B''
    double wring = 0;
    for (const auto& [n, c] : b_profile.modes()) {
        const double g2 = psi0_exponent * psi0_exponent;  // gamma^2
        wring += ((g2 - double(n) * n) * c * std::exp(Complex(0, n * theta))).real();
    }
    return std::pow(r, omega0_exponent) * wring;
}

double InitialData::psi0(double r, double theta) const {
    return std::pow(r, psi0_exponent) * b_profile.value(theta).real();
}

void InitialData::v0(double r, double theta, double& v_r, double& v_theta) const {
    // v0 = grad-perp Psi0 = -(1/r) dPsi0/dtheta e_r + dPsi0/dr e_theta
    Complex b = 0, db = 0;
    for (const auto& [n, c] : b_profile.modes()) {
        const Complex ph = std::exp(Complex(0, n * theta));
        b += c * ph;
        db += Complex(0, double(n)) * c * ph;
    }
    v_r = -std::pow(r, psi0_exponent - 1.0) * db.real();
    v_theta = psi0_exponent * std::pow(r, psi0_exponent - 1.0) * b.real();
}

InitialData initial_data(const VorticityProfile& profile, const SolverParams& params) {
    if (profile.kind() != VorticityProfile::Kind::Density)
        throw PreconditionError("initial_data: expects a density profile (mollify measures first)");
    profile.validate();
    InitialData out;
    out.psi0_exponent = 2.0 - 1.0 / params.mu;  // = gamma
    out.omega0_exponent = -1.0 / params.mu;
    out.b_profile = AngularFunction(profile.fold());
    const double g2 = params.gamma * params.gamma;
    for (const auto& [n, c] : profile.density_modes().modes()) {
        const double den = g2 - double(n) * n;
        out.b_profile.set_mode(n, c / den);
    }
    return out;
}

PhysicalField::PhysicalField(StreamSolution sol, const SolverParams& params)
    : sol_(std::move(sol)), params_(params), ev_(sol_, params_) {}

void PhysicalField::coord_forward(double beta, double phi, double& r, double& theta) const {
    auto d = ev_.at_beta(beta, phi);
    if (!(d.psi_beta < 0))
        throw DegenerateStateError("coord_forward: psi_beta >= 0 at beta = " +
                                   std::to_string(beta));
    r = std::sqrt(-d.psi_beta / params_.mu);
    theta = std::fmod(beta + phi, 2.0 * M_PI);
    if (theta < 0) theta += 2.0 * M_PI;
}

double PhysicalField::radial_beta_of_r(double r) const {
    // radial asymptotic r ~ beta^{-mu}/sqrt(mu) of the normalized branch
    return std::pow(params_.mu * r * r, -1.0 / (2.0 * params_.mu));
}

void PhysicalField::coord_inverse(double r, double theta, double& beta, double& phi) const {
    if (!(r > 0)) throw DomainError("coord_inverse: need r > 0");
    const auto& g = params_.grid;
    auto r_of = [&](double b) {
        auto d = ev_.at_beta(b, theta - b);
        if (!(d.psi_beta < 0))
            throw DegenerateStateError("coord_inverse: psi_beta >= 0 at beta = " +
                                       std::to_string(b));
        return std::sqrt(-d.psi_beta / params_.mu);
    };
    double b0 = radial_beta_of_r(r);
    double lo = std::max(g.beta_min(), b0 / 4.0), hi = std::min(g.beta_max(), b0 * 4.0);
    // r decreases in beta along fixed theta; expand the bracket geometrically
    int guard = 0;
    while (r_of(lo) < r) {
        lo /= 4.0;
        if (lo < g.beta_min() || ++guard > 60)
            throw DomainError("coord_inverse: r outside the resolvable range (large)");
        lo = std::max(lo, g.beta_min());
        if (lo == g.beta_min() && r_of(lo) < r)
            throw DomainError("coord_inverse: r outside the resolvable range (large)");
    }
    guard = 0;
    while (r_of(hi) > r) {
        hi *= 4.0;
        if (hi > g.beta_max() || ++guard > 60)
            throw DomainError("coord_inverse: r outside the resolvable range (small)");
        hi = std::min(hi, g.beta_max());
        if (hi == g.beta_max() && r_of(hi) > r)
            throw DomainError("coord_inverse: r outside the resolvable range (small)");
    }
    // bisection with secant acceleration on log beta
    double tlo = std::log(lo), thi = std::log(hi);
    double flo = r_of(lo) - r, fhi = r_of(hi) - r;
    for (int it = 0; it < 200; ++it) {
        double tm = 0.5 * (tlo + thi);
        if (std::abs(fhi - flo) > 0) {
            double ts = tlo - flo * (thi - tlo) / (fhi - flo);
            if (ts > tlo + 1e-15 && ts < thi - 1e-15) tm = ts;
        }
        double bm = std::exp(tm);
        double fm = r_of(bm) - r;
        if (std::abs(fm) < 1e-13 * r || thi - tlo < 1e-15) {
            beta = bm;
            phi = theta - bm;
            return;
        }
        if ((flo > 0) == (fm > 0)) {
            tlo = tm;
            flo = fm;
        } else {
            thi = tm;
            fhi = fm;
        }
    }
    beta = std::exp(0.5 * (tlo + thi));
    phi = theta - beta;
}

double PhysicalField::sample_vorticity(double beta, double phi) const {
    auto d = ev_.at_beta(beta, phi);
    if (!(d.psi_varphi > 0))
        throw DegenerateStateError("sample_vorticity: psi_varphi <= 0 at beta = " +
                                   std::to_string(beta));
    return std::pow(d.psi_varphi, -1.0 / (2.0 * params_.mu)) *
           sol_.omega.value(phi).real();
}

double PhysicalField::sample_stream(double beta, double phi) const {
    return ev_.at_beta(beta, phi).psi;
}

void PhysicalField::sample_velocity(double r, double theta, double& v_r, double& v_theta) const {
    double beta, phi;
    coord_inverse(r, theta, beta, phi);
    auto d = ev_.at_beta(beta, phi);
    // d_theta psi = psi_phi - (psi_betaphi / psi_betavarphi) psi_varphi
    // r d_r psi = 2 psi_beta psi_varphi / psi_betavarphi
    const double dtheta_psi = d.psi_phi - d.psi_betaphi / d.psi_betavarphi * d.psi_varphi;
    const double rdr_psi = 2.0 * d.psi_beta * d.psi_varphi / d.psi_betavarphi;
    v_r = -dtheta_psi / r;
    v_theta = rdr_psi / r;
}

PhysicalSample PhysicalField::self_similar_sample(double y1, double y2, double t) const {
    if (!(t > 0)) throw DomainError("self_similar_sample: need t > 0");
    const double mu = params_.mu;
    const double lam = sol_.time_rescale;
    // v(y, t) = lam v1(y, lam t) with v1 the normalized-branch solution
    const double t1 = lam * t;
    PhysicalSample s;
    s.y1 = y1;
    s.y2 = y2;
    s.t = t;
    const double scale = std::pow(t1, -mu);
    const double x1 = y1 * scale, x2 = y2 * scale;
    const double r = std::hypot(x1, x2);
    double theta = std::atan2(x2, x1);
    if (theta < 0) theta += 2.0 * M_PI;
    s.r = r;
    s.theta = theta;
    double beta, phi;
    coord_inverse(r, theta, beta, phi);
    double vr, vth;
    sample_velocity(r, theta, vr, vth);
    const double vfac = lam * std::pow(t1, mu - 1.0);
    const double c = std::cos(theta), sn = std::sin(theta);
    s.v1 = vfac * (vr * c - vth * sn);
    s.v2 = vfac * (vr * sn + vth * c);
    s.vorticity = lam / t1 * sample_vorticity(beta, phi);
    s.stream = lam * std::pow(t1, 2.0 * mu - 1.0) * sample_stream(beta, phi);
    return s;
}

std::vector<PhysicalField::StreamlinePoint> PhysicalField::trace_streamline(double phi0,
                                                                            double beta_min,
                                                                            double beta_max,
                                                                            int count) const {
    if (!(beta_min >= params_.grid.beta_min() && beta_max <= params_.grid.beta_max() &&
          beta_min < beta_max))
        throw PreconditionError("trace_streamline: beta range outside the grid");
    std::vector<StreamlinePoint> out;
    out.reserve(count);
    // the time rescale maps the normalized profile onto the original data:
    // r_orig = lam^mu r_normalized at unchanged theta
    const double rscale = std::pow(sol_.time_rescale, params_.mu);
    for (int k = 0; k < count; ++k) {
        const double beta =
            beta_min * std::pow(beta_max / beta_min, k / double(std::max(1, count - 1)));
        double r, theta;
        coord_forward(beta, phi0, r, theta);
        out.push_back({beta, rscale * r, beta + phi0});
    }
    return out;
}

double PhysicalField::weak_residual(const TestField& test, int samples_per_side) const {
    if (!(params_.alpha > std::max(0.0, 1.0 - params_.mu)))
        throw PreconditionError("weak_residual: needs alpha > max(0, 1 - mu)");
    const double mu = params_.mu;
    // velocity of the normalized profile at Cartesian x
    auto velocity = [&](double x1, double x2, double& v1, double& v2) {
        const double r = std::hypot(x1, x2);
        double theta = std::atan2(x2, x1);
        if (theta < 0) theta += 2.0 * M_PI;
        double vr, vth;
        sample_velocity(r, theta, vr, vth);
        const double c = std::cos(theta), s = std::sin(theta);
        v1 = vr * c - vth * s;
        v2 = vr * s + vth * c;
    };
    auto integrand = [&](double x1, double x2) {
        double w1, w2, gradeta[2], hess[3];
        test.grad(x1, x2, gradeta);
        test.hess(x1, x2, hess);
        w1 = -gradeta[1];
        w2 = gradeta[0];
        if (w1 == 0 && w2 == 0 && hess[0] == 0 && hess[1] == 0 && hess[2] == 0) return 0.0;
        double v1, v2;
        velocity(x1, x2, v1, v2);
        // grad w: dw1/dx1 = -d12 eta, dw1/dx2 = -d22 eta, dw2/dx1 = d11, dw2/dx2 = d12
        const double dw[2][2] = {{-hess[1], -hess[2]}, {hess[0], hess[1]}};
        double acc = (3.0 * mu - 1.0) * (v1 * w1 + v2 * w2);
        acc -= v1 * v1 * dw[0][0] + v1 * v2 * (dw[0][1] + dw[1][0]) + v2 * v2 * dw[1][1];
        acc += mu * (v1 * (x1 * dw[0][0] + x2 * dw[1][0]) + v2 * (x1 * dw[0][1] + x2 * dw[1][1]));
        return acc;
    };
    // tensor Gauss (4x4 per cell), cells chosen to match the sample budget
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};
    const int cells = std::max(8, samples_per_side / 4);
    const double hx = (test.x1_max - test.x1_min) / cells;
    const double hy = (test.x2_max - test.x2_min) / cells;
    double acc = 0;
    for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < cells; ++j) {
            const double cx = test.x1_min + (i + 0.5) * hx;
            const double cy = test.x2_min + (j + 0.5) * hy;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    acc += gw[a] * gw[b] * integrand(cx + 0.5 * hx * gx[a], cy + 0.5 * hy * gx[b]);
        }
    }
    return acc * hx * hy / 4.0;
}

void PhysicalField::jacobian_scan(double& mn, double& mx) const {
    const auto& g = params_.grid;
    RVector phis = collocation_angles(params_.m, params_.n_modes);
    mn = 1e300;
    mx = -1e300;
    for (int i = 0; i < g.size(); ++i) {
        for (double phi : phis) {
            auto d = ev_.at(i, phi);
            double det;
            const double rsq = -d.psi_beta / params_.mu;
            if (!(rsq > 0))
                det = 1e300;  // left the validity region: flag through the max
            else
                det = d.psi_betavarphi / (2.0 * params_.mu * std::sqrt(rsq));
            mn = std::min(mn, det);
            mx = std::max(mx, det);
        }
    }
}

}  // namespace spiral
