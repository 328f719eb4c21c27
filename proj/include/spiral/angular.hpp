// Angular functions on the torus (the vorticity datum omega-ring and Omega),
// stored as Fourier coefficients in e^{i n angle}.
#pragma once

#include <map>

#include "spiral/calculus.hpp"

namespace spiral {

class AngularFunction {
  public:
    AngularFunction() = default;
    explicit AngularFunction(int fold) : fold_(fold) {}

    int fold() const { return fold_; }
    bool empty() const { return modes_.empty(); }
    const std::map<int, Complex>& modes() const { return modes_; }
    Complex mode(int n) const {
        auto it = modes_.find(n);
        return it == modes_.end() ? Complex(0) : it->second;
    }
    void set_mode(int n, Complex c) { modes_[n] = c; }

    /// Pointwise value sum_n c_n e^{i n angle} (real part is the physical value).
    Complex value(double angle) const;

    Complex p0() const { return mode(0); }
    AngularFunction pneq() const;
    AngularFunction scaled(Complex s) const;

    /// L1 norm over the torus by dense sampling.
    double l1_norm(int samples = 8192) const;
    /// True iff all modes with m not dividing n are below 1e-12 * max |c_n|.
    bool is_m_fold(int m) const;

  private:
    int fold_ = 1;
    std::map<int, Complex> modes_;
};

}  // namespace spiral
