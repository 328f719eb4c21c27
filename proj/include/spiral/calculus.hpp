// Discrete calculus on logarithmic radial grids: 4th-order differentiation,
// cumulative quadratures (plain, exponentially fitted, oscillatory) with
// analytic power-law tail corrections, cubic splines, and small helpers.
#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "spiral/errors.hpp"

namespace spiral {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;
using RVector = std::vector<double>;

/// Logarithmically spaced radial grid in beta.
class RadialGrid {
  public:
    RadialGrid() = default;
    RadialGrid(double beta_min, double beta_max, int count);

    int size() const { return static_cast<int>(nodes_.size()); }
    double operator[](int i) const { return nodes_[i]; }
    const RVector& nodes() const { return nodes_; }
    double beta_min() const { return nodes_.front(); }
    double beta_max() const { return nodes_.back(); }
    /// Uniform spacing in log beta.
    double log_step() const { return h_; }
    double log_node(int i) const { return t0_ + h_ * i; }

    /// Same range, midpoint-refined (2n-1 nodes; old nodes are kept).
    RadialGrid refined() const { return RadialGrid(beta_min(), beta_max(), 2 * size() - 1); }

    bool operator==(const RadialGrid& o) const {
        return nodes_.size() == o.nodes_.size() && h_ == o.h_ && t0_ == o.t0_;
    }

  private:
    RVector nodes_;
    double h_ = 0.0;
    double t0_ = 0.0;
};

/// 4th-order finite-difference d/dt on a uniform grid in t = log beta,
/// one-sided closures at the endpoints.  Row stencils are exposed so that
/// solvers can assemble the identical discrete operator.
class LogDerivative {
  public:
    LogDerivative() = default;
    explicit LogDerivative(const RadialGrid& grid);

    /// Stencil of row i: first column index and 5 coefficients.
    struct Row {
        int first;
        double c[5];
    };
    Row row(int i) const;
    int size() const { return n_; }

    /// y = (beta d/dbeta) f, i.e. df/dt on the log grid.
    CVector apply(const CVector& f) const;
    RVector apply(const RVector& f) const;

  private:
    int n_ = 0;
    double h_ = 0.0;
};

/// Quadrature tools on the log grid.  All cumulative rules are 4th order
/// (exact for cubics in the interpolation variable) and return one value per
/// node.  Tail corrections integrate a fitted power law analytically.
namespace quad {

/// Cumulative integral I_i = int_{t_0}^{t_i} f dt, 4th order, uniform step h.
CVector cumulative(const CVector& f, double h);
RVector cumulative(const RVector& f, double h);

/// I_i = int_{t_i}^{t_N} f dt accumulated from the right (no cancellation
/// against the total when the integrand lives at the far end).
CVector cumulative_right(const CVector& f, double h);

/// Trapezoid value of int_{t_0}^{t_N} f dt (used for totals where 2nd order suffices).
double trapezoid(const RVector& f, double h);

/// M_k(a, d) = int_0^d e^{a tau} tau^k dtau for k = 0..3, stable for any complex a.
void exp_moments(Complex a, double d, Complex out[4]);

/// R_i = e^{-a t_i} int_{t_0}^{t_i} e^{a s} f(s) ds on a uniform grid,
/// exact for f cubic per cell.  Stable for Re(a) >= 0.
CVector weighted_cum_left(Complex a, const CVector& f, double h);

/// R_i = e^{-a t_i} int_{t_i}^{t_N} e^{a s} f(s) ds.  Stable for Re(a) <= 0.
CVector weighted_cum_right(Complex a, const CVector& f, double h);

/// Oscillatory cumulative integral C_i = int_{s_0}^{s_i} e^{i n s} g(s) ds on an
/// arbitrary increasing node set (Filon: exact for g cubic per cell).
CVector filon_cum_left(double n, const RVector& s, const CVector& g);

/// As above from the right: C_i = int_{s_i}^{s_N} e^{i n s} g(s) ds.
CVector filon_cum_right(double n, const RVector& s, const CVector& g);

/// int_0^{s0} e^{i n s} g0 (s/s0)^p ds, series in (i n s0); requires Re p > -1.
Complex filon_lower_tail(double n, double s0, Complex g0, Complex p);

/// Monomial coefficients of the cubic through (x_k, f_k), k = 0..3.
void cubic_coeffs(const double x[4], const Complex f[4], Complex c[4]);

/// Fit a local power-law exponent p with f ~ f0 (s/s0)^p from two samples
/// separated by log-step h (complex log-slope).  Returns fallback when the
/// samples are too small to fit.
Complex fit_log_slope(Complex f0, Complex f1, double h, Complex fallback);

}  // namespace quad

/// Values on the midpoint-refined grid (2n-1 nodes): old values kept, new
/// midpoints filled by 6-point interpolation (O(h^6)).
CVector midpoint_refine(const CVector& f);

/// Local 4-point cubic interpolation of f (given at t0 + i h) at t.
Complex interp_cubic(double t0, double h, const CVector& f, double t);
double interp_cubic(double t0, double h, const RVector& f, double t);

/// Second-order Taylor jet in one variable: value, first and second derivative.
/// Used to manufacture closed-form solutions and their exact derivatives.
struct Jet2 {
    double v = 0, d = 0, dd = 0;
    Jet2() = default;
    Jet2(double v_, double d_, double dd_) : v(v_), d(d_), dd(dd_) {}
    static Jet2 var(double x) { return {x, 1, 0}; }
    static Jet2 cst(double c) { return {c, 0, 0}; }
};
Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 pow(const Jet2& a, double p);

/// Banded complex matrix with kl sub- and ku super-diagonals in LAPACK band
/// storage (extra kl rows for the LU fill-in).  Solves via zgbtrf/zgbtrs.
class BandedComplexLU {
  public:
    BandedComplexLU(int n, int kl, int ku);
    /// a(i, j) for |i - j| within the band; zero-initialized.
    Complex& at(int i, int j);
    /// Factorize in place; throws NumericalError on singularity.
    void factorize();
    /// Solve A x = b (after factorize); b overwritten with the solution.
    void solve(CVector& b) const;
    bool factorized() const { return factorized_; }

  private:
    int n_, kl_, ku_, ldab_;
    std::vector<Complex> ab_;
    std::vector<int> ipiv_;
    bool factorized_ = false;
};

/// Run fn(i) for i in [0, count) on up to `threads` workers (deterministic
/// output: workers write to disjoint slots).  threads <= 1 runs inline.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Worker cap: SPIRAL_EULER_THREADS if set, else 1 (deterministic default).
int worker_count();

}  // namespace spiral
