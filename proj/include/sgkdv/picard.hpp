#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgkdv/dynamics.hpp"
#include "sgkdv/field.hpp"
#include "sgkdv/multipliers.hpp"
#include "sgkdv/observables.hpp"

namespace sgkdv {

struct PicardReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> diffs;   // sup-lattice H^{sigma(k)} change per sweep
    std::vector<double> ratios;  // successive-difference ratios
};

struct PicardResult {
    std::vector<SpectralData> iterate;  // fixed point on the lattice, packed spectra
    PicardReport report;
};

// Stochastic convolution lattice built from explicit increments:
// v_0 = 0, v_{i+1} = S(dt) v_i + eta_i.
inline std::vector<SpectralData> convolution_lattice(const Grid& g, const NoisePath& path,
                                                     int n_steps) {
    if (static_cast<int>(path.increments.size()) < n_steps)
        throw std::invalid_argument("convolution_lattice: path too short");
    const SpectralMultiplier airy = airy_multiplier(g, path.dt);
    std::vector<SpectralData> v(static_cast<size_t>(n_steps) + 1,
                                SpectralData(static_cast<size_t>(g.size()), Complex(0.0, 0.0)));
    for (int i = 0; i < n_steps; ++i) {
        v[static_cast<size_t>(i) + 1] = v[static_cast<size_t>(i)];
        airy.apply_in_place(v[static_cast<size_t>(i) + 1]);
        const auto& eta = path.increments[static_cast<size_t>(i)];
        for (size_t j = 0; j < eta.size(); ++j) v[static_cast<size_t>(i) + 1][j] += eta[j];
    }
    return v;
}

// Successive-approximation solver for the mild equation
//   u(t) = S(t) u0 + v(t) - int_0^t S(t-s) (mu u^k u_x)(s) ds,
// iterated as whole lattice trajectories. The Duhamel integral uses the
// trapezoid rule in s; writing J_i for the integral with integrand
// N = -mu (u^{k+1})_x/(k+1) it satisfies the one-step recursion
//   J_{i+1} = S(dt) (J_i + dt/2 N_i) + dt/2 N_{i+1},
// so each sweep costs one nonlinear evaluation per lattice point. Iteration
// stops when the sup-lattice H^{sigma(k)} change drops below tol; hitting
// max_iter flags non-contraction and returns the difference history.
inline PicardResult picard_solve(const Grid& g, const Field& u0,
                                 const std::vector<SpectralData>& v_path, int k, int mu, double T,
                                 int n_steps, double tol, int max_iter, int pad_factor = 0) {
    if (n_steps < 1) throw std::invalid_argument("picard_solve: n_steps must be >= 1");
    if (static_cast<int>(v_path.size()) != n_steps + 1)
        throw std::invalid_argument("picard_solve: v_path must hold n_steps + 1 snapshots");
    if (pad_factor == 0) pad_factor = min_pad_factor(k);
    const double dt = T / n_steps;
    const double sigma = sigma_of_k(k);
    const size_t n = static_cast<size_t>(g.size());
    const size_t nt = static_cast<size_t>(n_steps) + 1;

    // Linear part S(t_i) u0 + v_i, with the group accumulated mode-wise.
    std::vector<SpectralData> base(nt, SpectralData(n));
    {
        const SpectralMultiplier airy = airy_multiplier(g, dt);
        SpectralData su0(u0.packed().begin(), u0.packed().end());
        for (size_t i = 0; i < nt; ++i) {
            for (size_t j = 0; j < n; ++j) base[i][j] = su0[j] + v_path[i][j];
            airy.apply_in_place(su0);
        }
    }

    GkdvStepper stepper(g, k, mu == 0 ? 1 : mu, dt, pad_factor);
    const int mu_eff = mu;
    const SpectralMultiplier airy_dt = airy_multiplier(g, dt);

    PicardResult out;
    out.iterate = base;
    SpectralData rhs_lo(n), rhs_hi(n), duhamel(n);

    // The integrand of the Duhamel recursion is exactly the conservative
    // right-hand side N(u) = -mu (u^{k+1})_x/(k+1); mu = 0 turns the map affine.
    const auto nonlinear = [&](const SpectralData& u, SpectralData& dst) {
        if (mu_eff == 0) {
            for (auto& c : dst) c = Complex(0.0, 0.0);
            return;
        }
        stepper.nonlinear_rhs(u, dst);
    };

    for (int it = 1; it <= max_iter; ++it) {
        double diff = 0.0;
        for (auto& c : duhamel) c = Complex(0.0, 0.0);
        nonlinear(out.iterate[0], rhs_lo);
        for (int i = 0; i < n_steps; ++i) {
            nonlinear(out.iterate[static_cast<size_t>(i) + 1], rhs_hi);
            for (size_t j = 0; j < n; ++j) duhamel[j] += 0.5 * dt * rhs_lo[j];
            airy_dt.apply_in_place(duhamel);
            for (size_t j = 0; j < n; ++j) duhamel[j] += 0.5 * dt * rhs_hi[j];
            SpectralData& u_next = out.iterate[static_cast<size_t>(i) + 1];
            SpectralData delta(n);
            for (size_t j = 0; j < n; ++j) {
                const Complex nu = base[static_cast<size_t>(i) + 1][j] + duhamel[j];
                delta[j] = nu - u_next[j];
                u_next[j] = nu;
            }
            diff = std::max(diff, spectral::sobolev_norm(g, delta, sigma));
            std::swap(rhs_lo, rhs_hi);
        }
        if (!out.report.diffs.empty() && out.report.diffs.back() > 0.0)
            out.report.ratios.push_back(diff / out.report.diffs.back());
        out.report.diffs.push_back(diff);
        out.report.iterations = it;
        if (diff < tol) {
            out.report.converged = true;
            break;
        }
    }
    return out;
}

inline PicardResult picard_solve(const Field& u0, const std::vector<Field>& v_path, int k, int mu,
                                 double T, int n_steps, double tol, int max_iter,
                                 int pad_factor = 0) {
    std::vector<SpectralData> packed;
    packed.reserve(v_path.size());
    for (const Field& f : v_path) packed.emplace_back(f.packed().begin(), f.packed().end());
    return picard_solve(u0.grid(), u0, packed, k, mu, T, n_steps, tol, max_iter, pad_factor);
}

}  // namespace sgkdv
