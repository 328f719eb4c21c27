// Coordinate maps between (beta, phi), (r, theta) and Cartesian x; samplers
// for vorticity, velocity and stream function; self-similar evolution;
// initial-data reconstruction; streamline tracing; weak-form diagnostics.
#pragma once

#include "spiral/measure_io.hpp"

namespace spiral {

struct PhysicalSample {
    double y1 = 0, y2 = 0;  // physical position
    double t = 1;
    double r = 0, theta = 0;  // profile coordinates x = t^{-mu} y
    double v1 = 0, v2 = 0;    // Cartesian velocity at (y, t)
    double vorticity = 0;
    double stream = 0;
};

struct InitialData {
    AngularFunction b_profile;  // B with gamma^2 B + B'' = w-ring
    double psi0_exponent = 0;   // 2 - 1/mu
    double omega0_exponent = 0; // -1/mu

    double omega0(double r, double theta) const;
    double psi0(double r, double theta) const;
    /// v0 = grad-perp Psi0 in polar components.
    void v0(double r, double theta, double& v_r, double& v_theta) const;
};

/// Divergence-free test field w = grad-perp eta, described by the scalar
/// potential and its derivatives up to second order on a bounding box.
struct TestField {
    std::function<double(double, double)> eta;
    std::function<void(double, double, double*)> grad;  // [d1, d2]
    std::function<void(double, double, double*)> hess;  // [d11, d12, d22]
    double x1_min, x1_max, x2_min, x2_max;
};

/// Samplers over one converged (or radial) solution in spiral coordinates.
/// Profile-level queries (coord maps, vorticity, velocity, streamlines) act
/// on the normalized profile; self_similar_sample applies the time rescale.
class PhysicalField {
  public:
    PhysicalField(StreamSolution sol, const SolverParams& params);

    const StreamSolution& solution() const { return sol_; }
    const SolverParams& params() const { return params_; }

    /// theta = beta + phi, r = (-psi_beta / mu)^{1/2}.
    void coord_forward(double beta, double phi, double& r, double& theta) const;
    /// Safeguarded bracketed inversion along fixed theta.
    void coord_inverse(double r, double theta, double& beta, double& phi) const;

    /// omega = psi_varphi^{-1/(2mu)} Omega(phi).
    double sample_vorticity(double beta, double phi) const;
    /// Polar velocity components at (r, theta) of the profile.
    void sample_velocity(double r, double theta, double& v_r, double& v_theta) const;
    /// psi at (beta, phi).
    double sample_stream(double beta, double phi) const;

    /// Full space-time sample at y (Cartesian), t > 0, including the
    /// normalization rescale v(y,t) = lam v1(y, lam t).
    PhysicalSample self_similar_sample(double y1, double y2, double t) const;

    /// Polyline (beta, r, theta) along the pseudo-streamline phi = phi0,
    /// rescaled to the original (pre-normalization) data.
    struct StreamlinePoint {
        double beta, r, theta;
    };
    std::vector<StreamlinePoint> trace_streamline(double phi0, double beta_min, double beta_max,
                                                  int count) const;

    /// Quadrature of the weak form
    ///   int (3mu-1) v.w - (v tensor v):grad w + mu v.(x.grad w) dx
    /// over the test support; samples_per_side fixes the finest tensor level.
    double weak_residual(const TestField& test, int samples_per_side = 512) const;

    /// Extrema of det a_b = psi_betavarphi / (2 mu r) over the grid.
    void jacobian_scan(double& mn, double& mx) const;

  private:
    StreamSolution sol_;
    SolverParams params_;
    StreamEval ev_;
    double radial_beta_of_r(double r) const;
};

/// B solved spectrally from gamma^2 B + B'' = w-ring (denominators never
/// vanish for m >= 2, mu > 1/2).
InitialData initial_data(const VorticityProfile& profile, const SolverParams& params);

}  // namespace spiral
