#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgkdv/covariance.hpp"
#include "sgkdv/field.hpp"
#include "sgkdv/multipliers.hpp"
#include "sgkdv/rng.hpp"

namespace sgkdv {

namespace spectral {

// Draws Phi (W(t+dt) - W(t)) directly in spectral space: the mean mode gets
// phi_0 g sqrt(dt/L), every positive mode gets phi_m (a - i b) sqrt(dt/(2L))
// with its conjugate mirror, a, b, g independent standard normals. Modes
// with phi_m = 0 consume no randomness. Consequently
// E || Phi dW ||_{L^2}^2 = dt * hs_norm(Phi, 0)^2.
inline void sample_increment(const CovarianceOperator& phi, double dt, RngStream& rng,
                             std::span<Complex> out) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be positive");
    const Grid& g = phi.grid();
    const double L = g.length();
    const double root_dt_over_L = std::sqrt(dt / L);
    const double root_dt_over_2L = std::sqrt(dt / (2.0 * L));
    for (auto& c : out) c = Complex(0.0, 0.0);
    {
        const double p0 = phi.profile_at_slot(0);
        if (p0 != 0.0) out[0] = Complex(p0 * rng.normal() * root_dt_over_L, 0.0);
    }
    for (int m = 1; m < g.size() / 2; ++m) {
        const double pm = phi.profile_at_slot(g.slot(m));
        if (pm == 0.0) continue;
        const double a = rng.normal();
        const double b = rng.normal();
        const Complex c = pm * root_dt_over_2L * Complex(a, -b);
        out[static_cast<size_t>(g.slot(m))] = c;
        out[static_cast<size_t>(g.slot(-m))] = std::conj(c);
    }
}

inline void add_increment(const CovarianceOperator& phi, double dt, RngStream& rng,
                          std::span<Complex> state, std::span<Complex> scratch) {
    sample_increment(phi, dt, rng, scratch);
    for (size_t i = 0; i < state.size(); ++i) state[i] += scratch[i];
}

}  // namespace spectral

inline Field sample_increment(const CovarianceOperator& phi, double dt, RngStream& rng) {
    SpectralData c(static_cast<size_t>(phi.grid().size()));
    spectral::sample_increment(phi, dt, rng, c);
    return Field::from_packed(phi.grid(), std::move(c));
}

// One step of the stochastic convolution v(t) = int_0^t S(t-s) Phi dW(s):
// v -> S(dt) v + Phi dW. Because |exp(i s xi^3)| = 1, the plain increment
// has the same per-mode law as the convolved one, so the conditional law of
// v(t+dt) given v(t) is reproduced with no time-discretization bias.
inline Field convolution_step(const Field& v, const CovarianceOperator& phi, double dt,
                              RngStream& rng) {
    require_same_grid(v.grid(), phi.grid(), "convolution_step");
    if (!(dt > 0.0)) throw std::invalid_argument("convolution_step: dt must be positive");
    const SpectralMultiplier airy = airy_multiplier(v.grid(), dt);
    SpectralData c(v.packed().begin(), v.packed().end());
    airy.apply_in_place(c);
    SpectralData eta(c.size());
    spectral::sample_increment(phi, dt, rng, eta);
    for (size_t i = 0; i < c.size(); ++i) c[i] += eta[i];
    return Field::from_packed(v.grid(), std::move(c));
}

// Snapshots v(t_i), t_i = i T / n_steps, starting from v(0) = 0.
inline std::vector<Field> convolution_path(const CovarianceOperator& phi, double T, int n_steps,
                                           RngStream& rng) {
    if (n_steps < 1) throw std::invalid_argument("convolution_path: n_steps must be >= 1");
    const Grid& g = phi.grid();
    const double dt = T / n_steps;
    const SpectralMultiplier airy = airy_multiplier(g, dt);
    std::vector<Field> path;
    path.reserve(static_cast<size_t>(n_steps) + 1);
    path.push_back(Field::zero(g));
    SpectralData v(static_cast<size_t>(g.size()), Complex(0.0, 0.0));
    SpectralData eta(v.size());
    for (int i = 0; i < n_steps; ++i) {
        airy.apply_in_place(v);
        spectral::add_increment(phi, dt, rng, v, eta);
        path.push_back(Field::from_packed(g, v));
    }
    return path;
}

}  // namespace sgkdv
