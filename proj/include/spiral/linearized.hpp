// The linearized operator L at the radial solution and its mode-by-mode
// inversion: L(psi) = (1/mu) d_varphi(beta H_varphi) + (mu/beta) H_phiphi
//                    + (gamma/2mu) psi_phi,   H = psi + (beta/2mu) psi_beta.
#pragma once

#include <memory>

#include "spiral/stream.hpp"

namespace spiral {

/// Right-hand side G = d_varphi F1 + d_phi F2 (membership in the target space).
struct RhsDecomposition {
    SpectralField f1, f2;
};

/// T0: H -> F with F(beta,phi) = 2 mu beta^{-2mu} int_0^beta s^{2mu-1} H(s,phi) ds.
SpectralField apply_T0(const SpectralField& h, double mu);
/// T0 along with the exact derivative F_beta = 2mu (H - F)/beta (per mode,
/// including the phase bookkeeping of the theta = beta + phi convention).
void apply_T0_with_deriv(const SpectralField& h, double mu, SpectralField& f,
                         SpectralField& f_beta);
/// Mode form of T0 on a single coefficient function.
CVector t0_mode(int n, const CVector& h, double mu, const RadialGrid& grid);

/// L applied to a solution (grid modes via the shared stencils, the singular
/// beta^{1-2mu} direction in closed form).
SpectralField apply_L(const StreamSolution& sol, const SolverParams& params);

/// Weighted residual diagnostic: sup over interior nodes and collocation
/// angles of beta^{2mu} |G|.
double weighted_rhs_norm(const SpectralField& g, const SolverParams& params);

struct ModeSolution {
    CVector psi, h;
    Complex singular_coeff = 0.0;  // nonzero only for n = 0
};

struct HighFreqSolution {
    CVector h;             // corrected H_n of the full linearized problem
    CVector psi;           // psi_n = T0 of the corrected H_n
    RVector update_norms;  // fixed-point update history (contraction diagnostics)
};

/// Mode-by-mode inversion of L with cached banded factorizations.
class LinearizedSolver {
  public:
    explicit LinearizedSolver(const SolverParams& params);
    ~LinearizedSolver();

    const SolverParams& params() const { return params_; }

    /// Solve one mode given the rhs pair (f1_n, f2_n).  |n| = 1 is rejected.
    ModeSolution solve_mode(int n, const CVector& f1, const CVector& f2) const;
    /// Solve one mode given g_n, the coefficient of G = d_varphi F1 + d_phi F2.
    /// For n = 0 the antiderivative of g_0 is formed internally.
    ModeSolution solve_mode_g(int n, const CVector& g) const;

    /// Assemble the full solution from a decomposition (modes at multiples of m).
    StreamSolution solve(const RhsDecomposition& rhs) const;
    /// Assemble from the rhs field G directly.
    StreamSolution solve_field(const SpectralField& g) const;

    /// Cross-validation path for |n| >= 2: transport solves of the simplified
    /// problem plus the contraction correction of the nonlocal term.
    HighFreqSolution highfreq_transport_solve(int n, const CVector& f1, const CVector& f2,
                                              int max_iter = 200, double tol = 1e-12) const;

  private:
    SolverParams params_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
    ModeSolution solve_mode_zero(const CVector& p0f1) const;
};

}  // namespace spiral
