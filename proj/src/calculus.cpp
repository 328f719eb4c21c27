#include "spiral/calculus.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <thread>

namespace spiral {

RadialGrid::RadialGrid(double beta_min, double beta_max, int count) {
    if (!(beta_min > 0) || !(beta_max > beta_min))
        throw DomainError("RadialGrid: need 0 < beta_min < beta_max");
    if (count < 64) throw DomainError("RadialGrid: node count must be >= 64");
    if (!(beta_min < 1.0 && beta_max > 1.0))
        throw DomainError("RadialGrid: need beta_min < 1 < beta_max");
    t0_ = std::log(beta_min);
    const double t1 = std::log(beta_max);
    h_ = (t1 - t0_) / (count - 1);
    nodes_.resize(count);
    for (int i = 0; i < count; ++i) nodes_[i] = std::exp(t0_ + h_ * i);
    nodes_.front() = beta_min;
    nodes_.back() = beta_max;
}

LogDerivative::LogDerivative(const RadialGrid& grid) : n_(grid.size()), h_(grid.log_step()) {}

LogDerivative::Row LogDerivative::row(int i) const {
    const double s = 1.0 / (12.0 * h_);
    Row r{};
    if (i == 0) {
        r.first = 0;
        const double c[5] = {-25, 48, -36, 16, -3};
        for (int k = 0; k < 5; ++k) r.c[k] = c[k] * s;
    } else if (i == 1) {
        r.first = 0;
        const double c[5] = {-3, -10, 18, -6, 1};
        for (int k = 0; k < 5; ++k) r.c[k] = c[k] * s;
    } else if (i == n_ - 2) {
        r.first = n_ - 5;
        const double c[5] = {-1, 6, -18, 10, 3};
        for (int k = 0; k < 5; ++k) r.c[k] = c[k] * s;
    } else if (i == n_ - 1) {
        r.first = n_ - 5;
        const double c[5] = {3, -16, 36, -48, 25};
        for (int k = 0; k < 5; ++k) r.c[k] = c[k] * s;
    } else {
        r.first = i - 2;
        const double c[5] = {1, -8, 0, 8, -1};
        for (int k = 0; k < 5; ++k) r.c[k] = c[k] * s;
    }
    return r;
}

template <class V>
static V apply_impl(const LogDerivative& d, const V& f) {
    V out(f.size());
    for (int i = 0; i < static_cast<int>(f.size()); ++i) {
        auto r = d.row(i);
        typename V::value_type acc = 0;
        for (int k = 0; k < 5; ++k) acc += r.c[k] * f[r.first + k];
        out[i] = acc;
    }
    return out;
}

CVector LogDerivative::apply(const CVector& f) const { return apply_impl(*this, f); }
RVector LogDerivative::apply(const RVector& f) const { return apply_impl(*this, f); }

namespace quad {

// Cubic coefficients (monomial, local coordinate from the cell's left node,
// unit spacing) for the three stencil placements used by cumulative rules.
namespace {

struct Cubic {
    Complex c[4];
};

// Stencil nodes at {-1,0,1,2} relative to the cell start.
Cubic cubic_interior(Complex f0, Complex f1, Complex f2, Complex f3) {
    Cubic p;
    p.c[0] = f1;
    p.c[1] = -f0 / 3.0 - f1 / 2.0 + f2 - f3 / 6.0;
    p.c[2] = f0 / 2.0 - f1 + f2 / 2.0;
    p.c[3] = (-f0 + 3.0 * f1 - 3.0 * f2 + f3) / 6.0;
    return p;
}

// Stencil nodes at {0,1,2,3}.
Cubic cubic_first(Complex f0, Complex f1, Complex f2, Complex f3) {
    Cubic p;
    p.c[0] = f0;
    p.c[1] = -11.0 * f0 / 6.0 + 3.0 * f1 - 1.5 * f2 + f3 / 3.0;
    p.c[2] = f0 - 2.5 * f1 + 2.0 * f2 - 0.5 * f3;
    p.c[3] = (-f0 + 3.0 * f1 - 3.0 * f2 + f3) / 6.0;
    return p;
}

// Stencil nodes at {-2,-1,0,1}.
Cubic cubic_last(Complex f0, Complex f1, Complex f2, Complex f3) {
    Cubic p;
    p.c[0] = f2;
    p.c[1] = f0 / 6.0 - f1 + f2 / 2.0 + f3 / 3.0;
    p.c[2] = f1 / 2.0 - f2 + f3 / 2.0;
    p.c[3] = (-f0 + 3.0 * f1 - 3.0 * f2 + f3) / 6.0;
    return p;
}

// Cubic through values at arbitrary local positions (Newton form, expanded).
Cubic cubic_general(const double x[4], const Complex f[4]) {
    Complex d01 = (f[1] - f[0]) / (x[1] - x[0]);
    Complex d12 = (f[2] - f[1]) / (x[2] - x[1]);
    Complex d23 = (f[3] - f[2]) / (x[3] - x[2]);
    Complex d012 = (d12 - d01) / (x[2] - x[0]);
    Complex d123 = (d23 - d12) / (x[3] - x[1]);
    Complex d0123 = (d123 - d012) / (x[3] - x[0]);
    // P = f0 + d01 (t-x0) + d012 (t-x0)(t-x1) + d0123 (t-x0)(t-x1)(t-x2)
    Cubic p;
    const double a = x[0], b = x[1], c = x[2];
    p.c[0] = f[0] - d01 * a + d012 * (a * b) - d0123 * (a * b * c);
    p.c[1] = d01 - d012 * (a + b) + d0123 * (a * b + a * c + b * c);
    p.c[2] = d012 - d0123 * (a + b + c);
    p.c[3] = d0123;
    return p;
}

Cubic cell_cubic(const CVector& f, int i, double h) {
    const int n = static_cast<int>(f.size());
    Cubic p;
    if (i == 0)
        p = cubic_first(f[0], f[1], f[2], f[3]);
    else if (i >= n - 2)
        p = cubic_last(f[n - 4], f[n - 3], f[n - 2], f[n - 1]);
    else
        p = cubic_interior(f[i - 1], f[i], f[i + 1], f[i + 2]);
    // rescale from unit spacing to spacing h
    double s = 1.0;
    for (int k = 1; k < 4; ++k) {
        s /= h;
        p.c[k] *= s;
    }
    return p;
}

void kahan_add(Complex& sum, Complex& comp, Complex term) {
    Complex y = term - comp;
    Complex t = sum + y;
    comp = (t - sum) - y;
    sum = t;
}

}  // namespace

CVector cumulative(const CVector& f, double h) {
    const int n = static_cast<int>(f.size());
    if (n < 4) throw PreconditionError("cumulative: need at least 4 nodes");
    CVector out(n);
    out[0] = 0;
    Complex sum = 0, comp = 0;
    for (int i = 0; i + 1 < n; ++i) {
        Complex cell;
        if (i == 0)
            cell = h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0;
        else if (i == n - 2)
            cell = h * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]) / 24.0;
        else
            cell = h * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) / 24.0;
        kahan_add(sum, comp, cell);
        out[i + 1] = sum;
    }
    return out;
}

RVector cumulative(const RVector& f, double h) {
    CVector fc(f.begin(), f.end());
    CVector rc = cumulative(fc, h);
    RVector out(rc.size());
    for (size_t i = 0; i < rc.size(); ++i) out[i] = rc[i].real();
    return out;
}

CVector cumulative_right(const CVector& f, double h) {
    const int n = static_cast<int>(f.size());
    if (n < 4) throw PreconditionError("cumulative_right: need at least 4 nodes");
    CVector out(n);
    out[n - 1] = 0;
    Complex sum = 0, comp = 0;
    for (int i = n - 2; i >= 0; --i) {
        Complex cell;
        if (i == 0)
            cell = h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0;
        else if (i == n - 2)
            cell = h * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1]) / 24.0;
        else
            cell = h * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) / 24.0;
        kahan_add(sum, comp, cell);
        out[i] = sum;
    }
    return out;
}

double trapezoid(const RVector& f, double h) {
    double s = 0;
    for (size_t i = 0; i + 1 < f.size(); ++i) s += 0.5 * (f[i] + f[i + 1]);
    return s * h;
}

void exp_moments(Complex a, double d, Complex out[4]) {
    const double ad = std::abs(a) * d;
    if (a.real() * d > 600.0) throw NumericalError("exp_moments: exponential overflow");
    if (ad <= 2.0) {
        // series: M_k = sum_j a^j d^{k+j+1} / (j! (k+j+1))
        for (int k = 0; k < 4; ++k) {
            Complex term = std::pow(d, k + 1) / double(k + 1);
            Complex sum = term;
            Complex aj = 1.0;
            double fact = 1.0;
            for (int j = 1; j < 40; ++j) {
                aj *= a;
                fact *= j;
                term = aj / fact * std::pow(d, k + j + 1) / double(k + j + 1);
                sum += term;
                if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
            }
            out[k] = sum;
        }
        return;
    }
    const Complex ead = std::exp(a * d);
    out[0] = (ead - 1.0) / a;
    double dk = 1.0;
    for (int k = 1; k < 4; ++k) {
        dk *= d;
        out[k] = (dk * ead - double(k) * out[k - 1]) / a;
    }
}

CVector weighted_cum_left(Complex a, const CVector& f, double h) {
    const int n = static_cast<int>(f.size());
    if (n < 4) throw PreconditionError("weighted_cum_left: need at least 4 nodes");
    Complex M[4];
    exp_moments(a, h, M);
    const Complex eah = std::exp(-a * h);
    // N_k = e^{-a h} M_k = int_0^h e^{a(tau-h)} tau^k dtau
    Complex N[4];
    for (int k = 0; k < 4; ++k) N[k] = eah * M[k];
    CVector out(n);
    out[0] = 0;
    for (int i = 0; i + 1 < n; ++i) {
        Cubic p = cell_cubic(f, i, h);
        Complex cell = p.c[0] * N[0] + p.c[1] * N[1] + p.c[2] * N[2] + p.c[3] * N[3];
        out[i + 1] = eah * out[i] + cell;
    }
    return out;
}

CVector weighted_cum_right(Complex a, const CVector& f, double h) {
    const int n = static_cast<int>(f.size());
    if (n < 4) throw PreconditionError("weighted_cum_right: need at least 4 nodes");
    Complex M[4];
    exp_moments(a, h, M);
    const Complex eah = std::exp(a * h);
    CVector out(n);
    out[n - 1] = 0;
    for (int i = n - 2; i >= 0; --i) {
        Cubic p = cell_cubic(f, i, h);
        Complex cell = p.c[0] * M[0] + p.c[1] * M[1] + p.c[2] * M[2] + p.c[3] * M[3];
        out[i] = eah * out[i + 1] + cell;
    }
    return out;
}

namespace {

// int_{s_i}^{s_{i+1}} e^{i n s} P(s) ds with P the 4-point cubic around cell i.
Complex filon_cell(double n, const RVector& s, const CVector& g, int i) {
    const int N = static_cast<int>(s.size());
    int j0 = std::clamp(i - 1, 0, N - 4);
    double x[4];
    Complex f[4];
    for (int k = 0; k < 4; ++k) {
        x[k] = s[j0 + k] - s[i];
        f[k] = g[j0 + k];
    }
    Cubic p = cubic_general(x, f);
    Complex M[4];
    exp_moments(Complex(0.0, n), s[i + 1] - s[i], M);
    Complex val = p.c[0] * M[0] + p.c[1] * M[1] + p.c[2] * M[2] + p.c[3] * M[3];
    // carry the phase at the cell's left node
    return std::exp(Complex(0.0, n * s[i])) * val;
}

}  // namespace

CVector filon_cum_left(double n, const RVector& s, const CVector& g) {
    const int N = static_cast<int>(s.size());
    if (N < 4) throw PreconditionError("filon_cum_left: need at least 4 nodes");
    CVector out(N);
    out[0] = 0;
    Complex sum = 0, comp = 0;
    for (int i = 0; i + 1 < N; ++i) {
        kahan_add(sum, comp, filon_cell(n, s, g, i));
        out[i + 1] = sum;
    }
    return out;
}

CVector filon_cum_right(double n, const RVector& s, const CVector& g) {
    const int N = static_cast<int>(s.size());
    if (N < 4) throw PreconditionError("filon_cum_right: need at least 4 nodes");
    CVector out(N);
    out[N - 1] = 0;
    Complex sum = 0, comp = 0;
    for (int i = N - 2; i >= 0; --i) {
        kahan_add(sum, comp, filon_cell(n, s, g, i));
        out[i] = sum;
    }
    return out;
}

Complex filon_lower_tail(double n, double s0, Complex g0, Complex p) {
    if (p.real() <= -1.0) throw PreconditionError("filon_lower_tail: divergent tail (Re p <= -1)");
    Complex z(0.0, n * s0);
    Complex term = 1.0 / (p + 1.0);
    Complex sum = term;
    Complex zk = 1.0;
    double fact = 1.0;
    for (int k = 1; k < 80; ++k) {
        zk *= z;
        fact *= k;
        term = zk / fact / (p + double(k + 1));
        sum += term;
        if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
    }
    return g0 * s0 * sum;
}

void cubic_coeffs(const double x[4], const Complex f[4], Complex c[4]) {
    Cubic p = cubic_general(x, f);
    for (int k = 0; k < 4; ++k) c[k] = p.c[k];
}

Complex fit_log_slope(Complex f0, Complex f1, double h, Complex fallback) {
    const double a0 = std::abs(f0), a1 = std::abs(f1);
    if (a0 < 1e-290 || a1 < 1e-290) return fallback;
    Complex p = std::log(f1 / f0) / h;
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) return fallback;
    if (std::abs(p) > 200.0) return fallback;
    return p;
}

}  // namespace quad

CVector midpoint_refine(const CVector& f) {
    const int n = static_cast<int>(f.size());
    if (n < 6) throw PreconditionError("midpoint_refine: need at least 6 nodes");
    CVector out(2 * n - 1);
    for (int i = 0; i < n; ++i) out[2 * i] = f[i];
    for (int i = 0; i + 1 < n; ++i) {
        // 6-point interpolation at the midpoint of cell [i, i+1]
        int j0 = std::clamp(i - 2, 0, n - 6);
        double xm = i + 0.5;
        Complex acc = 0;
        for (int k = 0; k < 6; ++k) {
            double w = 1.0;
            for (int l = 0; l < 6; ++l) {
                if (l == k) continue;
                w *= (xm - (j0 + l)) / double((j0 + k) - (j0 + l));
            }
            acc += w * f[j0 + k];
        }
        out[2 * i + 1] = acc;
    }
    return out;
}

Complex interp_cubic(double t0, double h, const CVector& f, double t) {
    const int n = static_cast<int>(f.size());
    if (n < 4) throw PreconditionError("interp_cubic: need at least 4 nodes");
    double u = (t - t0) / h;
    int i = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
    int j0 = std::clamp(i - 1, 0, n - 4);
    Complex acc = 0;
    for (int k = 0; k < 4; ++k) {
        double w = 1.0;
        for (int l = 0; l < 4; ++l) {
            if (l == k) continue;
            w *= (u - (j0 + l)) / double((j0 + k) - (j0 + l));
        }
        acc += w * f[j0 + k];
    }
    return acc;
}

double interp_cubic(double t0, double h, const RVector& f, double t) {
    CVector fc(f.begin(), f.end());
    return interp_cubic(t0, h, fc, t).real();
}

Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
Jet2 operator*(const Jet2& a, const Jet2& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2 * a.d * b.d + a.v * b.dd};
}
Jet2 operator/(const Jet2& a, const Jet2& b) {
    double iv = 1.0 / b.v;
    double v = a.v * iv;
    double d = (a.d - v * b.d) * iv;
    double dd = (a.dd - 2 * d * b.d - v * b.dd) * iv;
    return {v, d, dd};
}
Jet2 pow(const Jet2& a, double p) {
    double v = std::pow(a.v, p);
    double d = p * std::pow(a.v, p - 1) * a.d;
    double dd = p * (p - 1) * std::pow(a.v, p - 2) * a.d * a.d + p * std::pow(a.v, p - 1) * a.dd;
    return {v, d, dd};
}

BandedComplexLU::BandedComplexLU(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(size_t(ldab_) * n, Complex(0)), ipiv_(n) {}

Complex& BandedComplexLU::at(int i, int j) {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || i - j > kl_ || j - i > ku_)
        throw PreconditionError("BandedComplexLU::at: index outside band");
    return ab_[size_t(j) * ldab_ + (kl_ + ku_ + i - j)];
}

void BandedComplexLU::factorize() {
    int info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_,
                              reinterpret_cast<lapack_complex_double*>(ab_.data()), ldab_,
                              ipiv_.data());
    if (info != 0)
        throw NumericalError("banded LU factorization failed (info=" + std::to_string(info) + ")");
    factorized_ = true;
}

void BandedComplexLU::solve(CVector& b) const {
    if (!factorized_) throw PreconditionError("BandedComplexLU::solve before factorize");
    int info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 1,
                              reinterpret_cast<const lapack_complex_double*>(ab_.data()), ldab_,
                              ipiv_.data(), reinterpret_cast<lapack_complex_double*>(b.data()),
                              n_);
    if (info != 0)
        throw NumericalError("banded LU solve failed (info=" + std::to_string(info) + ")");
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    threads = std::min(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& th : pool) th.join();
}

int worker_count() {
    const char* env = std::getenv("SPIRAL_EULER_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    if (v < 1) return 1;
    return v;
}

}  // namespace spiral
