// SpectralField: a function f(beta, phi) stored as Fourier coefficients
// f_n(beta) with respect to theta = beta + phi, on a radial log grid.
// Fourier projections, m-fold symmetry checks and weighted-norm diagnostics.
#pragma once

#include <map>

#include "spiral/params.hpp"

namespace spiral {

enum class NormKind { WeightedSup, WeightedHolder, X0, Y0 };

class SpectralField {
  public:
    SpectralField() = default;
    SpectralField(RadialGrid grid, int fold) : grid_(std::move(grid)), fold_(fold) {}

    const RadialGrid& grid() const { return grid_; }
    int fold() const { return fold_; }

    bool has_mode(int n) const { return coeffs_.count(n) != 0; }
    /// Coefficient array of mode n (zero vector if absent).
    CVector mode(int n) const;
    void set_mode(int n, CVector c);
    const std::map<int, CVector>& modes() const { return coeffs_; }

    /// Pointwise synthesis at grid node i and angle phi.
    Complex value_at(int i, double phi) const;
    /// Pointwise synthesis at arbitrary beta (cubic interpolation of coefficients).
    Complex value(double beta, double phi) const;

    /// Largest coefficient magnitude over all stored modes and nodes.
    double max_abs() const;

    SpectralField operator+(const SpectralField& o) const;
    SpectralField operator-(const SpectralField& o) const;
    SpectralField scaled(Complex s) const;

    /// Pointwise product by coefficient convolution (exact for truncated data).
    SpectralField convolve_product(const SpectralField& o) const;

    /// Real fields satisfy f_{-n} = conj(f_n); enforce by mirroring n>0 modes.
    void complete_conjugates();

  private:
    RadialGrid grid_;
    int fold_ = 1;
    std::map<int, CVector> coeffs_;
};

/// P0 f: keep only the n = 0 mode (the phi-average).
SpectralField project_p0(const SpectralField& f);
/// Pneq f = f - P0 f.
SpectralField project_pneq(const SpectralField& f);

/// True iff every coefficient at a mode n with m not dividing n stays below
/// 1e-12 times the field's max coefficient magnitude.
bool check_m_fold(const SpectralField& f, int m);

/// Discrete weighted-norm diagnostics (sup over grid nodes and sampled angles).
double weighted_norm(const SpectralField& f, NormKind kind, const SolverParams& params);
/// m-fold weighted variant |P0 .| + m^{1/2} |Pneq .| of the same diagnostic.
double weighted_norm_mfold(const SpectralField& f, NormKind kind, const SolverParams& params);

/// Spectral antiderivative in phi: g with dg/dphi = f, P0 g = 0.
/// Requires P0 f = 0 (below the m-fold threshold).
SpectralField antiderivative_m(const SpectralField& f);

/// Angles used for collocation/sup sampling of an m-fold field.
RVector collocation_angles(int m, int n_modes);

}  // namespace spiral
