// Vorticity profiles (densities and atomic measures), the box-kernel
// mollifier, config/profile parsing, and solution-file persistence.
#pragma once

#include <string>
#include <utility>

#include "spiral/stream.hpp"

namespace spiral {

struct Atom {
    double theta;
    double weight;
};

/// The angular datum: either an integrable density (Fourier modes of
/// w(theta)) or an atomic measure with an optional uniform background.
class VorticityProfile {
  public:
    enum class Kind { Density, Measure };

    static VorticityProfile density(AngularFunction modes);
    static VorticityProfile measure(double p0, std::vector<Atom> atoms, int fold);

    Kind kind() const { return kind_; }
    int fold() const { return fold_; }
    /// Density profiles only: the Fourier modes of the density.
    const AngularFunction& density_modes() const;
    /// Measure profiles only.
    double background() const { return p0_; }
    const std::vector<Atom>& atoms() const { return atoms_; }

    /// P0 of the datum (mean over the torus; atoms contribute weight/2pi).
    double p0() const;
    /// Total variation (density: L1 norm; measure: as a signed measure).
    double pneq_total_variation() const;

    /// Validates m-fold symmetry (modes at multiples of m; atom set invariant
    /// under rotation by 2pi/m).  Throws ParseError on violation.
    void validate() const;

  private:
    Kind kind_ = Kind::Density;
    int fold_ = 2;
    AngularFunction density_;
    double p0_ = 0.0;
    std::vector<Atom> atoms_;
};

/// Box-kernel mollification w_N(theta) = N w((theta - 1/N, theta]) of a
/// measure profile, returned as exact Fourier modes up to n_modes.
VorticityProfile mollify(const VorticityProfile& profile, int N, int n_modes = 64);

/// Parse a config document (JSON text) into solver parameters and a profile.
struct Config {
    SolverParams params;
    VorticityProfile profile;
};
Config parse_config(const std::string& json_text);
/// Parse just the profile section.
VorticityProfile parse_profile(const std::string& json_text);

/// Apply a dotted-path override (e.g. "grid.count=4096") to a config JSON
/// document; returns the updated text.  Unknown keys raise ParseError.
std::string apply_override(const std::string& json_text, const std::string& assignment);

/// Lossless, version-tagged persistence of a solution (+ report): JSON header
/// with a base-16 payload of the mode arrays.
void write_solution(const StreamSolution& sol, const SolveReport& report,
                    const std::string& path);
std::pair<StreamSolution, SolveReport> read_solution(const std::string& path);

/// Serialize a profile back to its config-document JSON form.
std::string profile_to_json(const VorticityProfile& profile);

/// Write text atomically (write-then-rename).
void atomic_write_text(const std::string& path, const std::string& content);

/// Format a double with 17 significant digits (CSV contract).
std::string format_g17(double v);

}  // namespace spiral
