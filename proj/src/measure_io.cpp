#include "spiral/measure_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spiral {

using nlohmann::json;

VorticityProfile VorticityProfile::density(AngularFunction modes) {
    VorticityProfile p;
    p.kind_ = Kind::Density;
    p.fold_ = modes.fold();
    p.density_ = std::move(modes);
    return p;
}

VorticityProfile VorticityProfile::measure(double p0, std::vector<Atom> atoms, int fold) {
    VorticityProfile p;
    p.kind_ = Kind::Measure;
    p.fold_ = fold;
    p.p0_ = p0;
    p.atoms_ = std::move(atoms);
    return p;
}

const AngularFunction& VorticityProfile::density_modes() const {
    if (kind_ != Kind::Density)
        throw PreconditionError("VorticityProfile: density_modes on a measure profile");
    return density_;
}

double VorticityProfile::p0() const {
    if (kind_ == Kind::Density) return density_.p0().real();
    double w = 0;
    for (const auto& a : atoms_) w += a.weight;
    return p0_ + w / (2.0 * M_PI);
}

double VorticityProfile::pneq_total_variation() const {
    if (kind_ == Kind::Density) return density_.pneq().l1_norm();
    // Pneq(nu) = -(sum w / 2pi) d theta + atoms; mutually singular parts add
    double w = 0, wa = 0;
    for (const auto& a : atoms_) {
        w += a.weight;
        wa += std::abs(a.weight);
    }
    return wa + std::abs(w);
}

namespace {

double wrap_angle(double t) {
    double w = std::fmod(t, 2.0 * M_PI);
    if (w < 0) w += 2.0 * M_PI;
    return w;
}

}  // namespace

void VorticityProfile::validate() const {
    if (fold_ < 2) throw ParseError("profile: fold symmetry m must be >= 2");
    if (kind_ == Kind::Density) {
        double mx = 0;
        for (const auto& [n, c] : density_.modes()) mx = std::max(mx, std::abs(c));
        for (const auto& [n, c] : density_.modes()) {
            if (n % fold_ != 0 && std::abs(c) > 1e-12 * mx)
                throw ParseError("profile.modes: mode " + std::to_string(n) +
                                 " is not a multiple of m");
            auto it = density_.modes().find(-n);
            Complex conj_partner = it == density_.modes().end() ? Complex(0) : it->second;
            if (std::abs(conj_partner - std::conj(c)) > 1e-12 * std::max(1.0, mx))
                throw ParseError("profile.modes: conjugate symmetry violated at mode " +
                                 std::to_string(n));
        }
        return;
    }
    // atoms invariant under rotation by 2 pi / m
    const double step = 2.0 * M_PI / fold_;
    for (const auto& a : atoms_) {
        const double target = wrap_angle(a.theta + step);
        bool found = false;
        for (const auto& b : atoms_) {
            double d = std::abs(wrap_angle(b.theta) - target);
            d = std::min(d, 2.0 * M_PI - d);
            if (d < 1e-12 && std::abs(b.weight - a.weight) <= 1e-12 * std::abs(a.weight)) {
                found = true;
                break;
            }
        }
        if (!found)
            throw ParseError("profile.atoms: atom set is not invariant under rotation by 2pi/m");
    }
}

VorticityProfile mollify(const VorticityProfile& profile, int N, int n_modes) {
    if (profile.kind() != VorticityProfile::Kind::Measure)
        throw PreconditionError("mollify: expects a measure profile");
    if (N < 1) throw PreconditionError("mollify: N must be >= 1");
    profile.validate();
    const int m = profile.fold();
    AngularFunction density(m);
    // box kernel F_N = N chi_{(0,1/N)}: w_N(theta) = N w((theta-1/N, theta])
    // modes: background contributes only to n = 0; each atom w delta_{t0}
    // becomes N w chi_{[t0, t0+1/N)} with exact Fourier coefficients.
    density.set_mode(0, Complex(profile.p0()));
    for (int n = m; n <= n_modes; n += m) {
        Complex acc = 0;
        const Complex in(0.0, double(n));
        const Complex box = double(N) * (1.0 - std::exp(-in / double(N))) / in;
        for (const auto& a : profile.atoms())
            acc += a.weight / (2.0 * M_PI) * std::exp(-in * a.theta) * box;
        density.set_mode(n, acc);
        density.set_mode(-n, std::conj(acc));
    }
    return VorticityProfile::density(std::move(density));
}

namespace {

std::string hex_of(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
    return buf;
}

double double_of_hex(const std::string& s) {
    if (s.size() != 16) throw IoError("corrupt numeric payload (hex length)");
    uint64_t bits = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else throw IoError("corrupt numeric payload (hex digit)");
        bits = bits * 16 + d;
    }
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

std::string hex_of_cvector(const CVector& c) {
    std::string out;
    out.reserve(32 * c.size());
    for (const auto& v : c) {
        out += hex_of(v.real());
        out += hex_of(v.imag());
    }
    return out;
}

CVector cvector_of_hex(const std::string& s, int count) {
    if (static_cast<int>(s.size()) != 32 * count) throw IoError("corrupt mode payload (length)");
    CVector out(count);
    for (int i = 0; i < count; ++i)
        out[i] = Complex(double_of_hex(s.substr(32 * i, 16)), double_of_hex(s.substr(32 * i + 16, 16)));
    return out;
}

double require_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ParseError("config: " + path + " must be a number");
    return j.get<double>();
}

int require_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ParseError("config: " + path + " must be an integer");
    return j.get<int>();
}

VorticityProfile profile_from_json(const json& jp, int fold) {
    if (!jp.is_object()) throw ParseError("config: profile must be an object");
    const std::string kind = jp.value("kind", "density");
    if (kind == "density") {
        AngularFunction modes(fold);
        if (jp.contains("p0")) modes.set_mode(0, require_number(jp["p0"], "profile.p0"));
        if (jp.contains("modes")) {
            if (!jp["modes"].is_array()) throw ParseError("config: profile.modes must be an array");
            int idx = 0;
            for (const auto& e : jp["modes"]) {
                const std::string at = "profile.modes[" + std::to_string(idx++) + "]";
                int n = require_int(e.at("n"), at + ".n");
                if (n == 0) throw ParseError("config: " + at + ".n must be nonzero (use p0)");
                double re = e.value("re", 0.0), im = e.value("im", 0.0);
                modes.set_mode(n, Complex(re, im));
                modes.set_mode(-n, Complex(re, -im));
            }
        }
        auto p = VorticityProfile::density(std::move(modes));
        p.validate();
        return p;
    }
    if (kind == "measure") {
        double p0 = jp.value("p0", 0.0);
        std::vector<Atom> atoms;
        if (jp.contains("atoms")) {
            if (!jp["atoms"].is_array()) throw ParseError("config: profile.atoms must be an array");
            for (const auto& e : jp["atoms"])
                atoms.push_back({require_number(e.at("theta"), "profile.atoms[].theta"),
                                 require_number(e.at("weight"), "profile.atoms[].weight")});
        }
        auto p = VorticityProfile::measure(p0, std::move(atoms), fold);
        p.validate();
        return p;
    }
    throw ParseError("config: profile.kind must be \"density\" or \"measure\"");
}

}  // namespace

Config parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("config: invalid JSON: ") + e.what());
    }
    Config cfg;
    SolverParams& p = cfg.params;
    if (!j.contains("mu")) throw ParseError("config: missing required key mu");
    if (!j.contains("m")) throw ParseError("config: missing required key m");
    p.mu = require_number(j["mu"], "mu");
    p.m = require_int(j["m"], "m");
    if (j.contains("alpha")) {
        if (j["alpha"].is_string()) {
            if (j["alpha"] != "auto") throw ParseError("config: alpha must be a number or \"auto\"");
            p.alpha = SolverParams::auto_alpha(p.mu);
        } else {
            p.alpha = require_number(j["alpha"], "alpha");
        }
    } else {
        p.alpha = SolverParams::auto_alpha(p.mu);
    }
    if (j.contains("n_modes")) p.n_modes = require_int(j["n_modes"], "n_modes");
    double bmin = 1e-3, bmax = 1e3;
    int count = 2048;
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.contains("beta_min")) bmin = require_number(g["beta_min"], "grid.beta_min");
        if (g.contains("beta_max")) bmax = require_number(g["beta_max"], "grid.beta_max");
        if (g.contains("count")) count = require_int(g["count"], "grid.count");
    }
    try {
        p.grid = RadialGrid(bmin, bmax, count);
    } catch (const DomainError& e) {
        throw ParseError(std::string("config: grid: ") + e.what());
    }
    if (j.contains("tol_residual")) p.tol_residual = require_number(j["tol_residual"], "tol_residual");
    if (j.contains("max_iter")) p.max_iter = require_int(j["max_iter"], "max_iter");
    if (j.contains("eps_dominant")) p.eps_dominant = require_number(j["eps_dominant"], "eps_dominant");
    try {
        p.finalize();
    } catch (const DomainError& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!j.contains("profile")) throw ParseError("config: missing required key profile");
    cfg.profile = profile_from_json(j["profile"], p.m);
    return cfg;
}

VorticityProfile parse_profile(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("profile: invalid JSON: ") + e.what());
    }
    if (j.contains("profile")) {
        int fold = j.value("m", 2);
        return profile_from_json(j["profile"], fold);
    }
    return profile_from_json(j, j.value("m", 2));
}

std::string apply_override(const std::string& json_text, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ParseError("override: expected key=value, got \"" + assignment + "\"");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json j = json::parse(json_text);
    // resolve the dotted path
    json* node = &j;
    std::string rest = key;
    std::string last;
    for (;;) {
        auto dot = rest.find('.');
        if (dot == std::string::npos) {
            last = rest;
            break;
        }
        std::string head = rest.substr(0, dot);
        if (!node->contains(head)) (*node)[head] = json::object();
        node = &(*node)[head];
        rest = rest.substr(dot + 1);
    }
    static const std::vector<std::string> known = {
        "mu",       "m",         "alpha",       "n_modes",  "tol_residual",
        "max_iter", "eps_dominant", "beta_min", "beta_max", "count",
        "kind",     "p0"};
    if (std::find(known.begin(), known.end(), last) == known.end())
        throw ParseError("override: unknown config key \"" + key + "\"");
    // numbers parse as numbers, everything else stays a string
    try {
        size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos == value.size()) {
            if (value.find('.') == std::string::npos &&
                value.find('e') == std::string::npos && std::floor(v) == v)
                (*node)[last] = static_cast<long long>(v);
            else
                (*node)[last] = v;
            return j.dump();
        }
    } catch (...) {
    }
    (*node)[last] = value;
    return j.dump();
}

namespace {
constexpr int kSolutionVersion = 1;
}

void write_solution(const StreamSolution& sol, const SolveReport& report,
                    const std::string& path) {
    json j;
    j["format"] = "spiral-euler-solution";
    j["version"] = kSolutionVersion;
    const auto& g = sol.psi.grid();
    j["grid"] = {{"beta_min", hex_of(g.beta_min())},
                 {"beta_max", hex_of(g.beta_max())},
                 {"count", g.size()}};
    j["mu"] = hex_of(sol.mu);
    j["fold"] = sol.psi.fold();
    j["time_rescale"] = hex_of(sol.time_rescale);
    j["singular_coeff"] = {hex_of(sol.singular_coeff.real()), hex_of(sol.singular_coeff.imag())};
    json om = json::array();
    for (const auto& [n, c] : sol.omega.modes())
        om.push_back({{"n", n}, {"re", hex_of(c.real())}, {"im", hex_of(c.imag())}});
    j["omega"] = {{"fold", sol.omega.fold()}, {"modes", om}};
    auto field_json = [&](const SpectralField& f) {
        json arr = json::array();
        for (const auto& [n, c] : f.modes()) arr.push_back({{"n", n}, {"data", hex_of_cvector(c)}});
        return arr;
    };
    j["psi_modes"] = field_json(sol.psi);
    j["h_modes"] = field_json(sol.h);
    json hist = json::array();
    for (double r : report.residual_history) hist.push_back(hex_of(r));
    j["report"] = {{"iterations", report.iterations},
                   {"converged", report.converged},
                   {"dominant_ok", report.dominant_ok},
                   {"truncation_estimate", hex_of(report.truncation_estimate)},
                   {"jacobian_sign_flip", report.jacobian_sign_flip},
                   {"residual_history", hist}};
    atomic_write_text(path, j.dump(1));
}

std::pair<StreamSolution, SolveReport> read_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_solution: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const std::exception& e) {
        throw IoError(std::string("read_solution: corrupt file: ") + e.what());
    }
    try {
        if (j.value("format", "") != "spiral-euler-solution")
            throw IoError("read_solution: not a solution file");
        const int version = j.at("version").get<int>();
        if (version > kSolutionVersion)
            throw IoError("read_solution: file version " + std::to_string(version) +
                          " is newer than supported version " +
                          std::to_string(kSolutionVersion));
        StreamSolution sol;
        const auto& jg = j.at("grid");
        RadialGrid grid(double_of_hex(jg.at("beta_min")), double_of_hex(jg.at("beta_max")),
                        jg.at("count").get<int>());
        const int fold = j.at("fold").get<int>();
        sol.mu = double_of_hex(j.at("mu"));
        sol.time_rescale = double_of_hex(j.at("time_rescale"));
        sol.singular_coeff = Complex(double_of_hex(j.at("singular_coeff")[0]),
                                     double_of_hex(j.at("singular_coeff")[1]));
        sol.omega = AngularFunction(j.at("omega").at("fold").get<int>());
        for (const auto& e : j.at("omega").at("modes"))
            sol.omega.set_mode(e.at("n").get<int>(),
                               Complex(double_of_hex(e.at("re")), double_of_hex(e.at("im"))));
        sol.psi = SpectralField(grid, fold);
        sol.h = SpectralField(grid, fold);
        for (const auto& e : j.at("psi_modes"))
            sol.psi.set_mode(e.at("n").get<int>(), cvector_of_hex(e.at("data"), grid.size()));
        for (const auto& e : j.at("h_modes"))
            sol.h.set_mode(e.at("n").get<int>(), cvector_of_hex(e.at("data"), grid.size()));
        SolveReport rep;
        const auto& jr = j.at("report");
        rep.iterations = jr.at("iterations").get<int>();
        rep.converged = jr.at("converged").get<bool>();
        rep.dominant_ok = jr.at("dominant_ok").get<bool>();
        rep.truncation_estimate = double_of_hex(jr.at("truncation_estimate"));
        rep.jacobian_sign_flip = jr.at("jacobian_sign_flip").get<bool>();
        for (const auto& e : jr.at("residual_history"))
            rep.residual_history.push_back(double_of_hex(e));
        return {std::move(sol), std::move(rep)};
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(std::string("read_solution: corrupt file: ") + e.what());
    }
}

std::string profile_to_json(const VorticityProfile& profile) {
    json j;
    j["m"] = profile.fold();
    json jp;
    if (profile.kind() == VorticityProfile::Kind::Density) {
        jp["kind"] = "density";
        const auto& modes = profile.density_modes();
        jp["p0"] = modes.p0().real();
        json arr = json::array();
        for (const auto& [n, c] : modes.modes())
            if (n > 0) arr.push_back({{"n", n}, {"re", c.real()}, {"im", c.imag()}});
        jp["modes"] = arr;
    } else {
        jp["kind"] = "measure";
        jp["p0"] = profile.background();
        json arr = json::array();
        for (const auto& a : profile.atoms())
            arr.push_back({{"theta", a.theta}, {"weight", a.weight}});
        jp["atoms"] = arr;
    }
    j["profile"] = jp;
    return j.dump(1);
}

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw IoError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("atomic rename failed for " + path);
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace spiral
