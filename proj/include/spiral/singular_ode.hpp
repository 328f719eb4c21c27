// Machinery for the regular-singular-point ODEs behind the linearized solver:
// fundamental systems and Green solvers for x^2 y'' + x y' - q(x) y, the
// per-mode first-order transport solution formulas, indicial analysis and
// generalized hypergeometric 2F2 evaluation.
#pragma once

#include "spiral/calculus.hpp"

namespace spiral {

/// Indicial roots of the per-mode third-order operator:
/// canonical triple (2mu + n mu, 0, 2mu - n mu).
struct IndicialRoots {
    double lambda1, lambda2, lambda3;  // canonical order
    double sorted[3];                  // descending
    bool logarithmic;                  // a repeated root among the sorted triple
};
IndicialRoots indicial_roots(int n, double mu);

/// Roots (alpha1, alpha2) of t^2 - 2 n mu t + (2 mu - 1) = 0, alpha1 >= alpha2.
struct HypParams {
    double alpha1, alpha2;
};
HypParams hyp_params(int n, double mu);

/// Per-mode third-order system data (indicial roots + 2F2 parameters).
struct ModeOdeSystem {
    int n;
    double mu;
    IndicialRoots roots;
    HypParams hyp;
};
ModeOdeSystem mode_ode_system(int n, double mu);

/// Generalized hypergeometric series 2F2(a1, a2; b1, b2; z), compensated
/// long-double accumulation.  Series path only: |z| <= 48.
Complex hyp2f2(double a1, double a2, double b1, double b2, Complex z);

/// Psi_1(beta) = beta^{2mu + n mu} 2F2(a1+1, a2+1; 2mu+n mu+1, 2 n mu+1; -i n beta).
/// Requires n >= 2 and n*beta within the series-stable range.
Complex homogeneous_mode_solution(int n, double mu, double beta);
/// Large-beta modulus growth exponent 2mu - 1 + sqrt(n^2 mu^2 - 2 mu + 1).
double homogeneous_growth_exponent(int n, double mu);

/// x^2 y'' + x y' - q(x) y with piecewise potential: q = q1^2 on [0,1],
/// q2^2 on [2,inf), quintic C^2 smoothstep on [1,2].  Fundamental solutions
/// are exact power laws outside [1,2] and integrated across the transition.
class SingularOdeProblem {
  public:
    double q1() const { return q1_; }
    double q2() const { return q2_; }
    double q_of(double x) const;

    double y1(double x) const;
    double y2(double x) const;
    /// x y'(x) for the two fundamental solutions.
    double xdy1(double x) const;
    double xdy2(double x) const;

    /// Wronskian constant C with W(x) = C / x (negative by construction).
    double wronskian_c() const { return wronskian_c_; }
    /// Matching constants: y1 = C1 x^{q2} + C2 x^{-q2} (x>2),
    /// y2 = C3 x^{-q1} + C4 x^{q1} (x<1).
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    double c3() const { return c3_; }
    double c4() const { return c4_; }

    const RadialGrid& grid() const { return grid_; }
    /// Fundamental solutions sampled on the grid.
    const RVector& y1_samples() const { return y1s_; }
    const RVector& y2_samples() const { return y2s_; }
    /// x W(x) sampled on the grid (validation: constant to ~1e-6 relative).
    RVector xw_samples() const;

    friend SingularOdeProblem build_fundamental(double q1, double q2, const RadialGrid& grid);

  private:
    double q1_ = 0, q2_ = 0;
    double c1_ = 0, c2_ = 0, c3_ = 0, c4_ = 0;
    double wronskian_c_ = 0;
    RadialGrid grid_;
    RVector y1s_, y2s_;
    // dense transition samples on [1,2], uniform in log x
    RVector ty1_, tv1_, ty2_, tv2_;
    double ts_h_ = 0;
    double transition_value(const RVector& y, const RVector& v, double x, bool want_v) const;
};

SingularOdeProblem build_fundamental(double q1, double q2,
                                     const RadialGrid& grid = RadialGrid(0.01, 100.0, 2048));

struct GreenSolution {
    RVector y;              // solution on prob.grid()
    double weighted_in;     // sup <x>^alpha x^{2mu-1} |f|
    double weighted_out;    // sup <x>^alpha x^{2mu-1} |y| + sup <x>^alpha x^{2mu} |y'|
};

/// Radial data as a callable, with optional known discontinuity locations so
/// the quadrature can split cells there.
struct RadialData {
    std::function<double(double)> fn;
    RVector breaks;
};

/// Variation-of-constants solve of L y = f with the admissible branch:
/// u1 = int_x^inf y2 f / (t^2 W) dt, u2 = int_0^x y1 f / (t^2 W) dt.
/// Requires q1 - 2mu + 1 > 0 and q2 - 2mu - alpha + 1 > 0.
GreenSolution green_solve(const SingularOdeProblem& prob, const RadialData& f, double mu,
                          double alpha);
/// Sampled-data convenience overload (cubic interpolation between nodes).
GreenSolution green_solve(const SingularOdeProblem& prob, const RVector& f, double mu,
                          double alpha);

/// Weak solve of L y = x f'(x) via u1 = -(1/C) int_x^inf y2' f dt,
/// u2 = -(1/C) int_0^x y1' f dt.  Same exponent conditions.
GreenSolution green_solve_derivform(const SingularOdeProblem& prob, const RadialData& f,
                                    double mu, double alpha);
GreenSolution green_solve_derivform(const SingularOdeProblem& prob, const RVector& f, double mu,
                                    double alpha);

/// Large-beta growth exponent of |Psi_1| measured by a log-log slope fit over
/// beta in [5, 15]: oscillation-averaged anchors, basis {log b, 1, b^-2}.
double fitted_growth_exponent(int n, double mu);

/// Discrete relative residual ||L y - f|| / ||f|| over interior grid nodes.
double ode_residual(const SingularOdeProblem& prob, const RVector& y, const RVector& f);

/// Per-mode transport solve of (beta d_beta + mu n) Q = g on the grid:
/// Q(beta) = beta^{-mu n} int_0^beta s^{mu n - 1} g ds            (n >= 1)
/// Q(beta) = -beta^{-mu n} int_beta^inf s^{mu n - 1} g ds         (n <= 0)
/// Modes n in {0, +-1} require g == 0 and return zero.
CVector transport_mode_solve(int n, const CVector& g_hat, double mu, const RadialGrid& grid);

/// General-exponent form of the same solution formulas: (beta d_beta + a) Q = g
/// with the branch fixed by sign(a) (a > 0 integrates from 0, a < 0 from
/// infinity).  Analytic power-law tails use the fitted local slopes with the
/// given fallbacks.
CVector transport_exponent_solve(double a, const CVector& g, const RadialGrid& grid,
                                 double tail_fallback_lo, double tail_fallback_hi);

}  // namespace spiral
