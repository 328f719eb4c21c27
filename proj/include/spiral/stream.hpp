// StreamSolution: the solved stream function psi in spiral coordinates, its
// auxiliary field H = psi + (beta/2mu) psi_beta, the symbolic beta^{1-2mu}
// direction, and the angular datum Omega.  StreamEval provides pointwise
// derivatives (grid part by shared finite-difference stencils, singular part
// in closed form).
#pragma once

#include "spiral/angular.hpp"
#include "spiral/field.hpp"

namespace spiral {

struct StreamSolution {
    SpectralField psi;              // Y0 (grid) part
    SpectralField h;                // X0 part, consistent with psi
    Complex singular_coeff = 0.0;   // coefficient of beta^{1-2mu} in psi
    double mu = 0.0;
    double time_rescale = 1.0;      // A/c0 scaling from profile normalization
    AngularFunction omega;          // Omega(phi)

    /// The radial special solution psi0 = beta^{1-2mu}/(2mu-1), Omega0 = gamma.
    static StreamSolution radial(const SolverParams& params);
};

/// Outcome of a nonlinear solve.
struct SolveReport {
    int iterations = 0;
    RVector residual_history;
    bool converged = false;
    bool dominant_ok = false;
    double truncation_estimate = 0.0;
    bool jacobian_sign_flip = false;
};

/// Derivative bundle of a stream solution at collocation points.
class StreamEval {
  public:
    StreamEval(const StreamSolution& sol, const SolverParams& params);

    struct Derivs {
        double psi, psi_beta, psi_phi, psi_varphi, psi_betaphi, psi_betavarphi;
    };
    /// All first/second derivatives entering the nonlinear terms at (node i, phi).
    Derivs at(int i, double phi) const;
    /// Same at arbitrary beta inside the grid (coefficients interpolated).
    Derivs at_beta(double beta, double phi) const;

    const RadialGrid& grid() const { return grid_; }
    double mu() const { return mu_; }

  private:
    struct ModeData {
        int n;
        CVector a;   // psi_n
        CVector b;   // d_beta psi_n
        CVector db;  // d_beta b
    };
    std::vector<ModeData> modes_;
    RadialGrid grid_;
    double mu_ = 0;
    Complex sing_ = 0;
    template <class F>
    Derivs eval(F&& coeff_at, double beta, double phi) const;
};

/// Largest relative violation of h = psi + (beta/2mu) d_beta psi over interior
/// nodes (diagnostic for the StreamSolution invariant).
double h_consistency_error(const StreamSolution& sol, const SolverParams& params);

/// Verify the coordinate-validity sign conditions
/// beta^{2mu} psi_varphi > 0, beta^{2mu} psi_beta < 0, beta^{2mu+1} psi_betavarphi < 0
/// at every grid node and collocation angle.  Returns false on any violation.
bool check_sign_conditions(const StreamSolution& sol, const SolverParams& params);

}  // namespace spiral
