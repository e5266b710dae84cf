#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgkdv/covariance.hpp"
#include "sgkdv/dynamics.hpp"
#include "sgkdv/field.hpp"
#include "sgkdv/multipliers.hpp"

namespace sgkdv {

// ---------------------------------------------------------------------------
// Pointwise invariants of the deterministic flow.

// ||u||_{L^2}^2 via the sample sum.
inline double mass(const Field& f) {
    double s = 0.0;
    for (double u : f.samples()) s += u * u;
    return s * f.grid().dx();
}

// Samples of f on a zero-padded grid of m points (exact trigonometric
// interpolation), used wherever pointwise powers need alias-free quadrature.
inline std::vector<double> padded_samples(const Field& f, int m) {
    const Grid& g = f.grid();
    const int n = g.size();
    if (m < n) throw std::invalid_argument("padded_samples: m must be >= n");
    SpectralData in(static_cast<size_t>(m), Complex(0.0, 0.0));
    SpectralData out(static_cast<size_t>(m));
    for (int s = 0; s < n / 2; ++s) in[static_cast<size_t>(s)] = f.packed()[static_cast<size_t>(s)];
    for (int s = n / 2; s < n; ++s)
        in[static_cast<size_t>(m - n + s)] = f.packed()[static_cast<size_t>(s)];
    fft::Plans::backward(in, out);
    std::vector<double> w(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) w[static_cast<size_t>(j)] = out[static_cast<size_t>(j)].real();
    return w;
}

// Alias-free int u^power dx: exact for pad_factor * n >= (power) * n / 2.
inline double dealiased_power_integral(const Field& f, int power, int pad_factor) {
    const int m = pad_factor * f.grid().size();
    const std::vector<double> w = padded_samples(f, m);
    double s = 0.0;
    for (double v : w) {
        double p = 1.0;
        for (int e = 0; e < power; ++e) p *= v;
        s += p;
    }
    return s * f.grid().length() / m;
}

// H_k(u) = 1/2 ||u_x||_{L^2}^2 - 1/((k+1)(k+2)) int u^{k+2} dx.
inline double hamiltonian(const Field& f, int k, int pad_factor = 0) {
    if (k != 2 && k != 3) throw std::invalid_argument("hamiltonian: k must be 2 or 3");
    if (pad_factor == 0) pad_factor = min_pad_factor(k);
    const Grid& g = f.grid();
    double grad = 0.0;
    for (int s = 0; s < g.size(); ++s) {
        const double xi = (s == g.nyquist_slot()) ? 0.0 : g.xi(s);
        grad += xi * xi * std::norm(f.packed()[static_cast<size_t>(s)]);
    }
    grad *= g.length();
    const double pot = dealiased_power_integral(f, k + 2, pad_factor);
    return 0.5 * grad - pot / ((k + 1) * (k + 2));
}

// ---------------------------------------------------------------------------
// Ito drift terms.

// Trace term of the Ito formula for H_k along the noisy flow,
//   1/2 sum_j int [ |d/dx (Phi e_j)|^2 - u^k (Phi e_j)^2 ] dx.
// For Phi diagonal over the cosine/sine system this collapses to
//   1/2 sum_m phi_m^2 xi_m^2 - (1/(2L)) (sum_m phi_m^2) int u^k dx,
// because sum_j (Phi e_j)^2(x) == (1/L) sum_m phi_m^2 identically.
// hamiltonian_ito_drift_basis() below recomputes the full basis sum and is
// the oracle this reduction is verified against.
inline double hamiltonian_ito_drift(const Field& u, const CovarianceOperator& phi, int k,
                                    int pad_factor = 0) {
    if (k != 2 && k != 3) throw std::invalid_argument("hamiltonian_ito_drift: k must be 2 or 3");
    if (pad_factor == 0) pad_factor = min_pad_factor(k);
    require_same_grid(u.grid(), phi.grid(), "hamiltonian_ito_drift");
    const Grid& g = u.grid();
    double grad = 0.0, total = 0.0;
    for (int s = 0; s < g.size(); ++s) {
        const double p = phi.profile_at_slot(s);
        const double xi = g.xi(s);
        grad += p * p * xi * xi;
        total += p * p;
    }
    const double int_uk = dealiased_power_integral(u, k, pad_factor);
    return 0.5 * grad - total * int_uk / (2.0 * g.length());
}

// Cross term sum_j (u, Phi e_j)_{L^2}^2 in reduced form L sum_m phi_m^2 |c_m(u)|^2.
inline double mass_cross_term(const Field& u, const CovarianceOperator& phi) {
    require_same_grid(u.grid(), phi.grid(), "mass_cross_term");
    double s = 0.0;
    for (int i = 0; i < u.grid().size(); ++i) {
        const double p = phi.profile_at_slot(i);
        s += p * p * std::norm(u.packed()[static_cast<size_t>(i)]);
    }
    return u.grid().length() * s;
}

// Drift of ||u||^{2q} under the Ito formula applied to y -> y^q:
//   q ||u||^{2(q-1)} ||Phi||^2_{L_2^{0,0}} + 2 q (q-1) ||u||^{2(q-2)} sum_j (u, Phi e_j)^2.
inline double mass_moment_drift(const Field& u, const CovarianceOperator& phi, int q) {
    if (q < 1) throw std::invalid_argument("mass_moment_drift: q must be >= 1");
    const double m = mass(u);
    const double hs0 = phi.hs_norm(0.0);
    const double first = q * std::pow(m, q - 1) * hs0 * hs0;
    if (q == 1) return first;
    const double second = 2.0 * q * (q - 1) * std::pow(m, q - 2) * mass_cross_term(u, phi);
    return first + second;
}

// ---------------------------------------------------------------------------
// Brute-force basis oracles. These walk the explicit real orthonormal system
// { 1/sqrt(L), sqrt(2/L) cos(xi_m x), sqrt(2/L) sin(xi_m x), cos(xi_N x)/sqrt(L) }
// and apply Phi generically, with alias-free quadrature for every integral.

inline std::vector<Field> real_cons_basis(const Grid& g) {
    std::vector<Field> basis;
    basis.reserve(static_cast<size_t>(g.size()));
    const double L = g.length();
    std::vector<double> u(static_cast<size_t>(g.size()));
    for (int j = 0; j < g.size(); ++j) u[static_cast<size_t>(j)] = 1.0 / std::sqrt(L);
    basis.push_back(Field::from_samples(g, u));
    for (int m = 1; m < g.size() / 2; ++m) {
        const double xi = g.xi(g.slot(m));
        for (int j = 0; j < g.size(); ++j)
            u[static_cast<size_t>(j)] = std::sqrt(2.0 / L) * std::cos(xi * g.x(j));
        basis.push_back(Field::from_samples(g, u));
        for (int j = 0; j < g.size(); ++j)
            u[static_cast<size_t>(j)] = std::sqrt(2.0 / L) * std::sin(xi * g.x(j));
        basis.push_back(Field::from_samples(g, u));
    }
    const double xin = std::abs(g.xi(g.nyquist_slot()));
    for (int j = 0; j < g.size(); ++j)
        u[static_cast<size_t>(j)] = std::cos(xin * g.x(j)) / std::sqrt(L);
    basis.push_back(Field::from_samples(g, u));
    return basis;
}

inline double hamiltonian_ito_drift_basis(const Field& u, const CovarianceOperator& phi, int k,
                                          int pad_factor = 0) {
    if (pad_factor == 0) pad_factor = min_pad_factor(k);
    const Grid& g = u.grid();
    const int m = pad_factor * g.size();
    const std::vector<double> uw = padded_samples(u, m);
    double acc = 0.0;
    for (const Field& e : real_cons_basis(g)) {
        const Field pe = phi.apply(e);
        const Field dpe = apply_multiplier(pe, derivative_multiplier(g));
        const double grad = mass(dpe);
        const std::vector<double> pw = padded_samples(pe, m);
        double cross = 0.0;
        for (int j = 0; j < m; ++j) {
            double up = 1.0;
            for (int e2 = 0; e2 < k; ++e2) up *= uw[static_cast<size_t>(j)];
            cross += up * pw[static_cast<size_t>(j)] * pw[static_cast<size_t>(j)];
        }
        cross *= g.length() / m;
        acc += grad - cross;
    }
    return 0.5 * acc;
}

inline double mass_cross_term_basis(const Field& u, const CovarianceOperator& phi) {
    const Grid& g = u.grid();
    double acc = 0.0;
    for (const Field& e : real_cons_basis(g)) {
        const Field pe = phi.apply(e);
        double dot = 0.0;
        for (int j = 0; j < g.size(); ++j) dot += u.samples()[j] * pe.samples()[j];
        dot *= g.dx();
        acc += dot * dot;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Mixed space-time norms over a snapshot lattice.

struct TrajectoryView {
    const Grid* grid = nullptr;
    std::span<const double> times;
    std::span<const Field> fields;

    double horizon() const { return times.back(); }
    double stride() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

inline TrajectoryView make_view(const Grid& g, std::span<const double> times,
                                std::span<const Field> fields) {
    if (times.size() != fields.size() || times.empty())
        throw std::invalid_argument("TrajectoryView: empty or mismatched lattice");
    if (times.size() > 1) {
        const double dt = times[1] - times[0];
        if (!(dt > 0.0)) throw std::invalid_argument("TrajectoryView: times must increase");
        for (size_t i = 1; i < times.size(); ++i) {
            const double step = times[i] - times[i - 1];
            if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
                throw std::invalid_argument("TrajectoryView: nonuniform stride");
        }
    }
    return TrajectoryView{&g, times, fields};
}

inline TrajectoryView make_view(const Trajectory& tr) {
    if (tr.snapshots.empty()) throw std::invalid_argument("TrajectoryView: empty trajectory");
    return make_view(tr.snapshots.front().grid(), tr.times, tr.snapshots);
}

struct MixedNormSpec {
    enum class Op { none, frac, frac_dx, dx };
    double q_x = 2.0;  // outer spatial exponent
    double p_t = 2.0;  // inner temporal exponent
    Op op = Op::none;
    double gamma = 0.0;

    std::string op_label() const {
        switch (op) {
            case Op::none: return "id";
            case Op::frac: return "D^" + std::to_string(gamma);
            case Op::frac_dx: return "D^" + std::to_string(gamma) + " d/dx";
            case Op::dx: return "d/dx";
        }
        return "?";
    }
};

// L^{q_x}_x(L^{p_t}_t) of (op u) over one period and the snapshot lattice:
// trapezoid in t (max for p = inf), rectangle rule in x (max for q = inf).
inline double mixed_norm(const TrajectoryView& tr, const MixedNormSpec& spec) {
    if (tr.fields.empty()) throw std::invalid_argument("mixed_norm: empty trajectory");
    if (!(spec.q_x >= 1.0) || !(spec.p_t >= 1.0))
        throw std::invalid_argument("mixed_norm: exponents must be in [1, inf]");
    const Grid& g = *tr.grid;
    const int n = g.size();
    const size_t nt = tr.fields.size();

    SpectralMultiplier op = identity_multiplier(g);
    switch (spec.op) {
        case MixedNormSpec::Op::none: break;
        case MixedNormSpec::Op::frac: op = fractional_derivative_multiplier(g, spec.gamma); break;
        case MixedNormSpec::Op::frac_dx: op = fractional_dx_multiplier(g, spec.gamma); break;
        case MixedNormSpec::Op::dx: op = derivative_multiplier(g); break;
    }

    // vals[j * nt + i] = |(op u)(x_j, t_i)|, built column by column.
    std::vector<double> vals(static_cast<size_t>(n) * nt);
    std::vector<double> col;
    for (size_t i = 0; i < nt; ++i) {
        const Field& f = tr.fields[i];
        if (spec.op == MixedNormSpec::Op::none) {
            for (int j = 0; j < n; ++j)
                vals[static_cast<size_t>(j) * nt + i] = std::abs(f.samples()[j]);
        } else {
            SpectralData c(f.packed().begin(), f.packed().end());
            op.apply_in_place(c);
            spectral::unpack(g, c, col);
            for (int j = 0; j < n; ++j)
                vals[static_cast<size_t>(j) * nt + i] = std::abs(col[static_cast<size_t>(j)]);
        }
    }

    const bool p_inf = std::isinf(spec.p_t);
    const bool q_inf = std::isinf(spec.q_x);
    const double dt = nt > 1 ? tr.times[1] - tr.times[0] : 0.0;

    double outer = 0.0;
    for (int j = 0; j < n; ++j) {
        const double* row = &vals[static_cast<size_t>(j) * nt];
        double inner;
        if (p_inf) {
            inner = 0.0;
            for (size_t i = 0; i < nt; ++i) inner = std::max(inner, row[i]);
        } else if (nt == 1) {
            inner = 0.0;  // degenerate single-snapshot lattice has measure zero
        } else {
            double s = 0.5 * (std::pow(row[0], spec.p_t) + std::pow(row[nt - 1], spec.p_t));
            for (size_t i = 1; i + 1 < nt; ++i) s += std::pow(row[i], spec.p_t);
            inner = std::pow(s * dt, 1.0 / spec.p_t);
        }
        if (q_inf)
            outer = std::max(outer, inner);
        else
            outer += std::pow(inner, spec.q_x);
    }
    return q_inf ? outer : std::pow(outer * g.dx(), 1.0 / spec.q_x);
}

// ---------------------------------------------------------------------------
// X_k^T norms and the local-existence formulas.

struct ExistenceConstants {
    double c_k = 1.0;      // linear-part constant c_k
    double c_tilde = 1.0;  // cubic/quartic self-map constant
    double c_bar = 1.0;    // difference (contraction) constant
    double rho = 1.0;      // exponent in the (1+T)^rho prefactors, k = 3
};

struct XkComponent {
    std::string name;
    double value = 0.0;
    bool in_max = true;   // reported-only entries carry false
    double q_x = 0.0;     // outer/inner exponents of the underlying mixed norm,
    double p_t = 0.0;     // 0 for the sup-in-time components
    std::string op = "";  // pre-applied multiplier
};

struct XkNormResult {
    double value = 0.0;
    std::vector<XkComponent> components;

    const XkComponent& info(const std::string& name) const {
        for (const auto& c : components)
            if (c.name == name) return c;
        throw std::invalid_argument("XkNormResult: no component named " + name);
    }

    double component(const std::string& name) const { return info(name).value; }
};

inline XkNormResult xk_norm(const TrajectoryView& tr, int k, const ExistenceConstants& consts) {
    if (k != 2 && k != 3) throw std::invalid_argument("xk_norm: k must be 2 or 3");
    const double T = tr.horizon();
    XkNormResult r;
    const auto sup_over = [&](auto&& f) {
        double m = 0.0;
        for (const Field& u : tr.fields) m = std::max(m, f(u));
        return m;
    };
    using Op = MixedNormSpec::Op;
    const double inf = std::numeric_limits<double>::infinity();
    const auto mixed = [&](const std::string& name, MixedNormSpec spec, double prefactor = 1.0) {
        return XkComponent{name, prefactor * mixed_norm(tr, spec), true,
                           spec.q_x, spec.p_t, spec.op_label()};
    };
    if (k == 2) {
        const double mu1 = sup_over([](const Field& u) { return homogeneous_norm(u, 0.25); });
        const double mu1_inhom = sup_over([](const Field& u) { return sobolev_norm(u, 0.25); });
        r.components = {XkComponent{"mu1", mu1, true, 2.0, 0.0, "D^0.25 sup_t"},
                        mixed("mu2", {20.0, 2.5, Op::frac, 1.0}),
                        mixed("mu3", {5.0, 10.0, Op::frac, 0.25}),
                        mixed("mu4", {inf, 2.0, Op::frac_dx, 0.25}),
                        mixed("mu5", {4.0, inf, Op::none, 0.0}),
                        XkComponent{"mu1_inhomogeneous", mu1_inhom, false, 2.0, 0.0, "H^0.25 sup_t"}};
    } else {
        const double nu1 = sup_over([](const Field& u) { return sobolev_norm(u, 1.0 / 12.0); });
        const double nu1_hom = sup_over([](const Field& u) { return homogeneous_norm(u, 1.0 / 12.0); });
        const double tfac = (T > 0.0) ? std::pow(T, -1.0 / 6.0) : 0.0;
        r.components = {XkComponent{"nu1", nu1, true, 2.0, 0.0, "H^(1/12) sup_t"},
                        mixed("nu2", {42.0 / 13.0, 21.0 / 4.0, Op::none, 0.0},
                              std::pow(1.0 + T, -consts.rho)),
                        mixed("nu3", {60.0 / 13.0, 15.0, Op::none, 0.0}),
                        mixed("nu4", {10.0 / 3.0, 30.0 / 7.0, Op::none, 0.0}, tfac),
                        mixed("nu5", {10.0 / 3.0, 30.0 / 7.0, Op::frac, 1.0 / 12.0}, tfac),
                        mixed("nu6", {inf, 2.0, Op::dx, 0.0}),
                        mixed("nu7", {inf, 2.0, Op::frac_dx, 1.0 / 12.0}),
                        XkComponent{"nu1_homogeneous", nu1_hom, false, 2.0, 0.0, "D^(1/12) sup_t"}};
    }
    for (const auto& c : r.components)
        if (c.in_max) r.value = std::max(r.value, c.value);
    return r;
}

// R_k = 2 ( c_k ||u0||_{H^{sigma(k)}} + ||v||_{X_k^T} ), sigma(2) = 1/4,
// sigma(3) = 1/12.
inline double sigma_of_k(int k) {
    if (k == 2) return 0.25;
    if (k == 3) return 1.0 / 12.0;
    throw std::invalid_argument("sigma_of_k: k must be 2 or 3");
}

inline double local_radius(const Field& u0, const TrajectoryView& v_tr, int k,
                           const ExistenceConstants& consts) {
    return 2.0 * (consts.c_k * sobolev_norm(u0, sigma_of_k(k)) + xk_norm(v_tr, k, consts).value);
}

// Largest admissible horizon:
//   k = 2: both 2 Ctilde sqrt(T) R^2 <= 1 and 4 Cbar sqrt(T) R^2 <= 1, so
//          T = min( (2 Ctilde R^2)^-2, (4 Cbar R^2)^-2 );
//   k = 3: largest T with 2 Ctilde T^{1/18} (1+T)^rho R^3 <= 1 and
//          4 Cbar T^{1/18} (1+T)^rho R^2 <= 1, found by bisection.
inline double local_time(double R, int k, const ExistenceConstants& consts) {
    if (!(R > 0.0)) throw std::invalid_argument("local_time: R must be positive");
    if (k == 2) {
        const double a = 1.0 / std::pow(2.0 * consts.c_tilde * R * R, 2);
        const double b = 1.0 / std::pow(4.0 * consts.c_bar * R * R, 2);
        return std::min(a, b);
    }
    if (k != 3) throw std::invalid_argument("local_time: k must be 2 or 3");
    const auto constraint = [&](double T) {
        const double common = std::pow(T, 1.0 / 18.0) * std::pow(1.0 + T, consts.rho);
        return std::max(2.0 * consts.c_tilde * common * R * R * R,
                        4.0 * consts.c_bar * common * R * R);
    };
    double lo = 0.0, hi = 1.0;
    while (constraint(hi) <= 1.0 && hi < 1e300) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (constraint(mid) <= 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace sgkdv
