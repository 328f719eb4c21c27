// Solver parameters: the self-similar exponent mu, fold symmetry m, Holder
// exponent alpha, derived constants, grid and tolerances.
#pragma once

#include "spiral/calculus.hpp"

namespace spiral {

/// gamma = 2 - 1/mu and alpha_mu = sqrt(4 mu^2 - 2 mu + 1) - (2 mu - 1).
/// Requires mu > 1/2.
struct DerivedConstants {
    double gamma;
    double alpha_mu;
};
DerivedConstants derive_constants(double mu);

struct SolverParams {
    double mu = 0.75;
    int m = 2;
    double alpha = 0.45;
    double gamma = 0.0;      // derived
    double alpha_mu = 0.0;   // derived
    int n_modes = 64;        // Fourier truncation (multiples of m are stored)
    RadialGrid grid{1e-3, 1e3, 2048};
    double tol_residual = 1e-10;
    int max_iter = 25;
    double eps_dominant = 0.3;

    /// Recompute gamma/alpha_mu from mu and validate all invariants.
    void finalize();
    /// alpha for "auto": min(0.5, 0.95 alpha_mu), clipped above 1 - mu.
    static double auto_alpha(double mu);
};

}  // namespace spiral
