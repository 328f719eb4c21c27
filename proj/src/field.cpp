#include "spiral/field.hpp"

#include <algorithm>
#include <cmath>

namespace spiral {

CVector SpectralField::mode(int n) const {
    auto it = coeffs_.find(n);
    if (it != coeffs_.end()) return it->second;
    return CVector(grid_.size(), Complex(0));
}

void SpectralField::set_mode(int n, CVector c) {
    if (static_cast<int>(c.size()) != grid_.size())
        throw PreconditionError("SpectralField::set_mode: coefficient length != grid size");
    coeffs_[n] = std::move(c);
}

Complex SpectralField::value_at(int i, double phi) const {
    const double beta = grid_[i];
    Complex acc = 0;
    for (const auto& [n, c] : coeffs_) acc += c[i] * std::exp(Complex(0.0, n * (beta + phi)));
    return acc;
}

Complex SpectralField::value(double beta, double phi) const {
    const double t = std::log(beta);
    const double t0 = grid_.log_node(0);
    Complex acc = 0;
    for (const auto& [n, c] : coeffs_) {
        Complex cn = interp_cubic(t0, grid_.log_step(), c, t);
        acc += cn * std::exp(Complex(0.0, n * (beta + phi)));
    }
    return acc;
}

double SpectralField::max_abs() const {
    double m = 0;
    for (const auto& [n, c] : coeffs_)
        for (const auto& v : c) m = std::max(m, std::abs(v));
    return m;
}

SpectralField SpectralField::operator+(const SpectralField& o) const {
    SpectralField out(grid_, fold_);
    for (const auto& [n, c] : coeffs_) out.coeffs_[n] = c;
    for (const auto& [n, c] : o.coeffs_) {
        auto it = out.coeffs_.find(n);
        if (it == out.coeffs_.end())
            out.coeffs_[n] = c;
        else
            for (size_t i = 0; i < c.size(); ++i) it->second[i] += c[i];
    }
    return out;
}

SpectralField SpectralField::operator-(const SpectralField& o) const {
    return *this + o.scaled(Complex(-1.0));
}

SpectralField SpectralField::scaled(Complex s) const {
    SpectralField out(grid_, fold_);
    for (const auto& [n, c] : coeffs_) {
        CVector v(c.size());
        for (size_t i = 0; i < c.size(); ++i) v[i] = s * c[i];
        out.coeffs_[n] = std::move(v);
    }
    return out;
}

SpectralField SpectralField::convolve_product(const SpectralField& o) const {
    SpectralField out(grid_, fold_);
    const int N = grid_.size();
    for (const auto& [n1, c1] : coeffs_) {
        for (const auto& [n2, c2] : o.coeffs_) {
            const int n = n1 + n2;
            auto it = out.coeffs_.find(n);
            if (it == out.coeffs_.end()) it = out.coeffs_.emplace(n, CVector(N, Complex(0))).first;
            for (int i = 0; i < N; ++i) it->second[i] += c1[i] * c2[i];
        }
    }
    return out;
}

void SpectralField::complete_conjugates() {
    std::map<int, CVector> add;
    for (const auto& [n, c] : coeffs_) {
        if (n <= 0 || coeffs_.count(-n)) continue;
        CVector v(c.size());
        for (size_t i = 0; i < c.size(); ++i) v[i] = std::conj(c[i]);
        add[-n] = std::move(v);
    }
    for (auto& [n, c] : add) coeffs_[n] = std::move(c);
}

SpectralField project_p0(const SpectralField& f) {
    SpectralField out(f.grid(), f.fold());
    if (f.has_mode(0)) out.set_mode(0, f.mode(0));
    return out;
}

SpectralField project_pneq(const SpectralField& f) {
    SpectralField out(f.grid(), f.fold());
    for (const auto& [n, c] : f.modes())
        if (n != 0) out.set_mode(n, c);
    return out;
}

bool check_m_fold(const SpectralField& f, int m) {
    const double thresh = 1e-12 * f.max_abs();
    for (const auto& [n, c] : f.modes()) {
        if (n % m == 0) continue;
        for (const auto& v : c)
            if (std::abs(v) > thresh) return false;
    }
    return true;
}

RVector collocation_angles(int m, int n_modes) {
    int count = std::max(64, 4 * std::max(1, n_modes / std::max(1, m)));
    RVector phi(count);
    const double period = 2.0 * M_PI / std::max(1, m);
    for (int j = 0; j < count; ++j) phi[j] = period * j / count;
    return phi;
}

namespace {

// Evaluate |w(beta) f(beta, phi)| on the grid x sampled angles.
struct WeightedSamples {
    // samples[i][j] over nodes i and angles j
    std::vector<RVector> samples;
    const RadialGrid* grid;
};

WeightedSamples sample_weighted(const SpectralField& f, const RVector& phis,
                                const std::function<double(double)>& weight) {
    WeightedSamples out;
    out.grid = &f.grid();
    const int N = f.grid().size();
    out.samples.assign(N, RVector(phis.size(), 0.0));
    for (int i = 0; i < N; ++i) {
        const double w = weight(f.grid()[i]);
        for (size_t j = 0; j < phis.size(); ++j)
            out.samples[i][j] = w * std::abs(f.value_at(i, phis[j]));
    }
    return out;
}

double sup_of(const WeightedSamples& s) {
    double m = 0;
    for (const auto& row : s.samples)
        for (double v : row) m = std::max(m, v);
    return m;
}

// Discrete C_beta^alpha seminorm: Holder quotient over adjacent node pairs.
double holder_quotient(const SpectralField& f, const RVector& phis, double alpha,
                       const std::function<double(double)>& weight) {
    const auto& g = f.grid();
    double m = 0;
    for (int i = 0; i + 1 < g.size(); ++i) {
        const double b1 = g[i + 1], b2 = g[i];
        const double scale = std::pow(b1 + b2, alpha) / std::pow(b1 - b2, alpha);
        for (size_t j = 0; j < phis.size(); ++j) {
            double d = std::abs(weight(b1) * f.value_at(i + 1, phis[j]) -
                                weight(b2) * f.value_at(i, phis[j]));
            m = std::max(m, scale * d);
        }
    }
    return m;
}

double cbeta_alpha_norm(const SpectralField& f, const RVector& phis, double alpha,
                        const std::function<double(double)>& weight) {
    auto wsup = [&](double b) { return std::pow(std::hypot(b, 1.0), alpha) * weight(b); };
    return sup_of(sample_weighted(f, phis, wsup)) + holder_quotient(f, phis, alpha, weight);
}

// H = psi + (beta / 2mu) d_beta psi, computed mode-wise with the shared stencils.
SpectralField h_of_psi(const SpectralField& psi, double mu) {
    LogDerivative D(psi.grid());
    SpectralField out(psi.grid(), psi.fold());
    const auto& g = psi.grid();
    for (const auto& [n, c] : psi.modes()) {
        CVector dc = D.apply(c);  // beta d_beta
        CVector h(c.size());
        for (int i = 0; i < g.size(); ++i)
            h[i] = c[i] + (dc[i] + Complex(0.0, n * g[i]) * c[i]) / (2.0 * mu);
        out.set_mode(n, std::move(h));
    }
    return out;
}

double x0_norm(const SpectralField& h, const RVector& phis, const SolverParams& p) {
    LogDerivative D(h.grid());
    const auto& g = h.grid();
    SpectralField hvar(g, h.fold()), hphi(g, h.fold());
    for (const auto& [n, c] : h.modes()) {
        CVector dc = D.apply(c);
        CVector var(c.size()), ph(c.size());
        for (int i = 0; i < g.size(); ++i) {
            var[i] = -dc[i] / g[i];  // d_varphi coefficient: -d_beta c_n
            ph[i] = Complex(0.0, double(n)) * c[i];
        }
        hvar.set_mode(n, std::move(var));
        hphi.set_mode(n, std::move(ph));
    }
    const double mu = p.mu;
    double nvar = cbeta_alpha_norm(hvar, phis, p.alpha,
                                   [mu](double b) { return std::pow(b, 2 * mu); });
    double nphi = cbeta_alpha_norm(hphi, phis, p.alpha,
                                   [mu](double b) { return std::pow(b, 2 * mu - 1); });
    double nh = cbeta_alpha_norm(h, phis, p.alpha,
                                 [mu](double b) { return std::pow(b, 2 * mu - 1); });
    return nvar + nphi + nh;
}

double norm_impl(const SpectralField& f, NormKind kind, const SolverParams& p,
                 const RVector& phis) {
    const double mu = p.mu;
    switch (kind) {
        case NormKind::WeightedSup: {
            auto w = [&](double b) { return std::pow(std::hypot(b, 1.0), p.alpha); };
            return sup_of(sample_weighted(f, phis, w));
        }
        case NormKind::WeightedHolder:
            return cbeta_alpha_norm(f, phis, p.alpha, [](double) { return 1.0; });
        case NormKind::X0:
            return x0_norm(f, phis, p);
        case NormKind::Y0: {
            SpectralField h = h_of_psi(f, mu);
            auto w = [mu](double b) { return std::pow(b, 2 * mu - 1); };
            return x0_norm(h, phis, p) + sup_of(sample_weighted(f, phis, w));
        }
    }
    return 0;
}

}  // namespace

double weighted_norm(const SpectralField& f, NormKind kind, const SolverParams& params) {
    RVector phis = collocation_angles(f.fold(), params.n_modes);
    return norm_impl(f, kind, params, phis);
}

double weighted_norm_mfold(const SpectralField& f, NormKind kind, const SolverParams& params) {
    RVector phis = collocation_angles(f.fold(), params.n_modes);
    double n0 = norm_impl(project_p0(f), kind, params, phis);
    double nneq = norm_impl(project_pneq(f), kind, params, phis);
    return n0 + std::sqrt(double(f.fold())) * nneq;
}

SpectralField antiderivative_m(const SpectralField& f) {
    const double thresh = 1e-12 * f.max_abs();
    if (f.has_mode(0)) {
        for (const auto& v : f.mode(0))
            if (std::abs(v) > thresh)
                throw PreconditionError("antiderivative_m: field has nonzero mean in phi");
    }
    SpectralField out(f.grid(), f.fold());
    for (const auto& [n, c] : f.modes()) {
        if (n == 0) continue;
        CVector g(c.size());
        const Complex inv = 1.0 / Complex(0.0, double(n));
        for (size_t i = 0; i < c.size(); ++i) g[i] = c[i] * inv;
        out.set_mode(n, std::move(g));
    }
    return out;
}

}  // namespace spiral
