// The nonlinear residual F(psi, Omega) in spiral coordinates and the
// frozen-Jacobian fixed-point solver around the radial solution.
#pragma once

#include "spiral/linearized.hpp"
#include "spiral/measure_io.hpp"

namespace spiral {

/// The quantities N1, N2, N3 with F = d_varphi N1 + d_phi N2 + N3 Omega.
struct NonlinearTerms {
    SpectralField n1, n2, n3;
};

/// Pointwise nonlinear terms of the current solution, re-analyzed into modes.
/// Throws DegenerateStateError if the sign conditions fail at a collocation
/// point.
NonlinearTerms nonlinear_terms(const StreamSolution& sol, const SolverParams& params);

/// F(psi, Omega) = d_varphi N1 + d_phi N2 + N3 Omega as a mode field.
SpectralField residual_F(const StreamSolution& sol, const AngularFunction& omega,
                         const SolverParams& params);

/// Dominant condition ||Pneq w||_{L1 or TV} <= eps m^{1/2} |P0 w|.
bool check_dominant(const VorticityProfile& profile, int m, double eps);

struct NormalizedProfile {
    AngularFunction omega;  // Omega = mu^{1/(2mu)} * (c0/A) * w
    double time_rescale;    // A / c0
};

/// Rescale the angular datum onto the solver's normalized branch
/// (P0 Omega = gamma).  Throws DomainError when P0 of the profile vanishes.
NormalizedProfile normalize_profile(const VorticityProfile& profile, double mu);

/// Frozen-Jacobian iteration psi <- psi - L^{-1} F(psi, Omega) from the radial
/// solution.  Non-convergence is reported, not thrown; leaving the coordinate
/// validity region throws DegenerateStateError.  full_newton switches to a
/// finite-difference Newton direction preconditioned by the frozen inverse.
std::pair<StreamSolution, SolveReport> solve_nonlinear(const VorticityProfile& profile,
                                                       const SolverParams& params,
                                                       bool full_newton = false);

/// Weighted residual of a solution re-evaluated on a refined grid (the
/// discretization-consistency diagnostic).
double residual_on_refined_grid(const StreamSolution& sol, const SolverParams& params);

}  // namespace spiral
