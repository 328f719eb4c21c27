#include "spiral/params.hpp"

#include <cmath>
#include <string>

namespace spiral {

DerivedConstants derive_constants(double mu) {
    if (!(mu > 0.5))
        throw DomainError("self-similar exponent out of range: need mu > 1/2, got mu = " +
                          std::to_string(mu));
    DerivedConstants c;
    c.gamma = 2.0 - 1.0 / mu;
    c.alpha_mu = std::sqrt(4.0 * mu * mu - 2.0 * mu + 1.0) - (2.0 * mu - 1.0);
    return c;
}

double SolverParams::auto_alpha(double mu) {
    const auto c = derive_constants(mu);
    double a = std::min(0.5, 0.95 * c.alpha_mu);
    if (a <= 1.0 - mu) a = 0.5 * ((1.0 - mu) + c.alpha_mu);
    return a;
}

void SolverParams::finalize() {
    const auto c = derive_constants(mu);
    gamma = c.gamma;
    alpha_mu = c.alpha_mu;
    if (m < 2) throw DomainError("fold symmetry m must be >= 2");
    if (!(alpha > 0.0 && alpha < alpha_mu))
        throw DomainError("alpha must lie in (0, alpha_mu) = (0, " + std::to_string(alpha_mu) +
                          ")");
    if (n_modes < m) throw DomainError("n_modes must be at least m");
    if (tol_residual <= 0) throw DomainError("tol_residual must be positive");
    if (max_iter < 1) throw DomainError("max_iter must be >= 1");
    if (eps_dominant <= 0) throw DomainError("eps_dominant must be positive");
}

}  // namespace spiral
