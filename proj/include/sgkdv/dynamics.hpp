#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgkdv/covariance.hpp"
#include "sgkdv/field.hpp"
#include "sgkdv/multipliers.hpp"
#include "sgkdv/noise.hpp"
#include "sgkdv/rng.hpp"

namespace sgkdv {

enum class Scheme { strang, exp_euler };

inline std::string scheme_name(Scheme s) {
    return s == Scheme::strang ? "strang" : "exp-euler";
}

// Smallest admissible dealiasing factor: pad_factor * n >= (k+2) * n / 2
// makes the degree-(k+1) product of nonlinear_rhs and the degree-(k+2)
// power in the Hamiltonian alias-free.
inline int min_pad_factor(int k) { return (k + 2 + 1) / 2; }

struct SimConfig {
    int k = 2;              // nonlinearity power, 2 (mKdV) or 3 (gKdV)
    int mu = 1;             // +1 focusing, -1 defocusing
    int n = 256;
    double length = 100.0;
    double dt = 1e-3;
    double T = 1.0;
    Scheme scheme = Scheme::strang;
    int pad_factor = 2;
    std::uint64_t seed = 0;
    int save_every = 1;
    double cfl_constant = 1.0;

    int n_steps() const { return std::max(1, static_cast<int>(std::llround(T / dt))); }

    void validate() const {
        if (k != 2 && k != 3)
            throw std::invalid_argument("config: only k in {2, 3} is supported, got k = " +
                                        std::to_string(k));
        if (mu != 1 && mu != -1 && mu != 0)
            throw std::invalid_argument("config: mu must be +1 or -1");
        // mu = 0 switches the nonlinearity off; only diagnostic runs use it
        // and the config file layer rejects it.
        if (n < 8 || n % 2 != 0)
            throw std::invalid_argument("config: grid.n must be even and >= 8, got " +
                                        std::to_string(n));
        if (!(length > 0.0)) throw std::invalid_argument("config: grid.length must be > 0");
        if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be > 0");
        if (!(T >= dt)) throw std::invalid_argument("config: T must be >= dt");
        if (pad_factor < min_pad_factor(k))
            throw std::invalid_argument(
                "config: pad_factor " + std::to_string(pad_factor) +
                " is below the exact-dealias threshold (k+2)/2; need >= " +
                std::to_string(min_pad_factor(k)) + " for k = " + std::to_string(k));
        if (save_every < 1) throw std::invalid_argument("config: save_every must be >= 1");
        if (n_steps() % save_every != 0)
            throw std::invalid_argument("config: save_every must divide the step count " +
                                        std::to_string(n_steps()));
    }
};

struct BlowupEvent {
    double t = 0.0;
    double linf = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Field> snapshots;
    std::optional<BlowupEvent> blowup;
    int cfl_warnings = 0;
};

// Pseudospectral right-hand sides and one-step maps for
//   du + (u_xxx + mu u^k u_x) dt = Phi dW.
// The dispersive term is handled exactly by the Airy multiplier; the
// nonlinear term is evaluated in conservative form -mu (u^{k+1})_x/(k+1) on
// a zero-padded grid of pad_factor * n points, which makes it exactly
// mass-neutral: (u, N(u))_{L^2} vanishes to rounding.
class GkdvStepper {
public:
    GkdvStepper(const Grid& g, int k, int mu, double dt, int pad_factor, double cfl_constant = 1.0)
        : grid_(&g),
          k_(k),
          mu_(mu),
          dt_(dt),
          pad_(pad_factor * g.size()),
          cfl_constant_(cfl_constant),
          airy_full_(airy_multiplier(g, dt)),
          airy_half_(airy_multiplier(g, 0.5 * dt)),
          pad_in_(static_cast<size_t>(pad_), Complex(0.0, 0.0)),
          pad_out_(static_cast<size_t>(pad_)),
          k1_(static_cast<size_t>(g.size())),
          k2_(static_cast<size_t>(g.size())),
          k3_(static_cast<size_t>(g.size())),
          k4_(static_cast<size_t>(g.size())),
          stage_(static_cast<size_t>(g.size())) {
        if (pad_factor < min_pad_factor(k))
            throw std::invalid_argument("GkdvStepper: pad_factor below the exact-dealias threshold");
        if (k != 2 && k != 3) throw std::invalid_argument("GkdvStepper: k must be 2 or 3");
    }

    const Grid& grid() const { return *grid_; }
    double dt() const { return dt_; }

    // N(u) = -mu d/dx (u^{k+1}) / (k+1), exactly dealiased. Also records the
    // max |u| seen on the fine grid for CFL and blow-up monitoring.
    void nonlinear_rhs(std::span<const Complex> u, std::span<Complex> out) {
        const int n = grid_->size();
        const int half = n / 2;
        for (auto& c : pad_in_) c = Complex(0.0, 0.0);
        for (int s = 0; s < half; ++s) pad_in_[static_cast<size_t>(s)] = u[static_cast<size_t>(s)];
        for (int s = half; s < n; ++s)
            pad_in_[static_cast<size_t>(pad_ - n + s)] = u[static_cast<size_t>(s)];
        fft::Plans::backward(pad_in_, pad_out_);
        double mx = 0.0;
        for (int j = 0; j < pad_; ++j) {
            const double w = pad_out_[static_cast<size_t>(j)].real();
            mx = std::max(mx, std::abs(w));
            double p = w;
            for (int e = 0; e < k_; ++e) p *= w;
            pad_in_[static_cast<size_t>(j)] = Complex(p, 0.0);
        }
        last_max_abs_ = mx;
        fft::Plans::forward(pad_in_, pad_out_);
        const double scale = -static_cast<double>(mu_) / ((k_ + 1) * pad_);
        for (int s = 0; s < n; ++s) {
            const int src = s < half ? s : pad_ - n + s;
            const double xi = (s == grid_->nyquist_slot()) ? 0.0 : grid_->xi(s);
            out[static_cast<size_t>(s)] =
                Complex(0.0, xi * scale) * pad_out_[static_cast<size_t>(src)];
        }
    }

    // Deterministic part of the Strang step: S(dt/2), RK4 on u' = N(u), S(dt/2).
    void strang_det(std::span<Complex> u) {
        airy_half_.apply_in_place(u);
        rk4(u);
        airy_half_.apply_in_place(u);
    }

    // Deterministic part of the exponential Euler step: S(dt)[u + dt N(u)].
    void exp_euler_det(std::span<Complex> u) {
        nonlinear_rhs(u, k1_);
        note_cfl();
        for (size_t i = 0; i < u.size(); ++i) u[i] += dt_ * k1_[i];
        airy_full_.apply_in_place(u);
    }

    void det_step(Scheme scheme, std::span<Complex> u) {
        if (scheme == Scheme::strang)
            strang_det(u);
        else
            exp_euler_det(u);
    }

    double last_max_abs() const { return last_max_abs_; }
    int cfl_warnings() const { return cfl_warnings_; }

private:
    void rk4(std::span<Complex> u) {
        const size_t n = u.size();
        nonlinear_rhs(u, k1_);
        note_cfl();
        for (size_t i = 0; i < n; ++i) stage_[i] = u[i] + 0.5 * dt_ * k1_[i];
        nonlinear_rhs(stage_, k2_);
        for (size_t i = 0; i < n; ++i) stage_[i] = u[i] + 0.5 * dt_ * k2_[i];
        nonlinear_rhs(stage_, k3_);
        for (size_t i = 0; i < n; ++i) stage_[i] = u[i] + dt_ * k3_[i];
        nonlinear_rhs(stage_, k4_);
        const double w = dt_ / 6.0;
        for (size_t i = 0; i < n; ++i)
            u[i] += w * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

    void note_cfl() {
        double pw = 1.0;
        for (int e = 0; e < k_; ++e) pw *= last_max_abs_;
        if (pw > 0.0 && dt_ > cfl_constant_ * grid_->dx() / pw) ++cfl_warnings_;
    }

    const Grid* grid_;
    int k_;
    int mu_;
    double dt_;
    int pad_;
    double cfl_constant_;
    SpectralMultiplier airy_full_;
    SpectralMultiplier airy_half_;
    SpectralData pad_in_, pad_out_;
    SpectralData k1_, k2_, k3_, k4_, stage_;
    double last_max_abs_ = 0.0;
    int cfl_warnings_ = 0;
};

inline Field nonlinear_rhs(const Field& u, int k, int mu, int pad_factor) {
    GkdvStepper stepper(u.grid(), k, mu, 1.0, pad_factor);
    SpectralData out(static_cast<size_t>(u.grid().size()));
    stepper.nonlinear_rhs(u.packed(), out);
    return Field::from_packed(u.grid(), std::move(out));
}

// Per-step noise increments on a fixed lattice, replayable and refinable.
struct NoisePath {
    double dt = 0.0;
    std::vector<SpectralData> increments;

    static NoisePath sample(const CovarianceOperator& phi, double dt, int n_steps,
                            RngStream& rng) {
        NoisePath p;
        p.dt = dt;
        p.increments.resize(static_cast<size_t>(n_steps),
                            SpectralData(static_cast<size_t>(phi.grid().size())));
        for (auto& inc : p.increments) spectral::sample_increment(phi, dt, rng, inc);
        return p;
    }

    static NoisePath zero(const Grid& g, double dt, int n_steps) {
        NoisePath p;
        p.dt = dt;
        p.increments.assign(static_cast<size_t>(n_steps),
                            SpectralData(static_cast<size_t>(g.size()), Complex(0.0, 0.0)));
        return p;
    }

    // Sum consecutive groups of `factor` increments: the same Brownian path
    // on a lattice coarsened by that factor.
    NoisePath coarsen(int factor) const {
        if (factor < 1 || increments.size() % static_cast<size_t>(factor) != 0)
            throw std::invalid_argument("NoisePath::coarsen: factor must divide the step count");
        NoisePath p;
        p.dt = dt * factor;
        p.increments.resize(increments.size() / static_cast<size_t>(factor));
        const size_t n = increments.empty() ? 0 : increments[0].size();
        for (size_t i = 0; i < p.increments.size(); ++i) {
            SpectralData acc(n, Complex(0.0, 0.0));
            for (int f = 0; f < factor; ++f) {
                const auto& src = increments[i * static_cast<size_t>(factor) + static_cast<size_t>(f)];
                for (size_t j = 0; j < n; ++j) acc[j] += src[j];
            }
            p.increments[i] = std::move(acc);
        }
        return p;
    }

    // Convolution-compatible coarsening: eta_c = sum_j S((F-1-j) dt) eta_j.
    // Isotropy of the per-mode Gaussians makes this a valid plain increment
    // for the coarse lattice, while the accumulated noise S(t-s)-composes
    // identically at every refinement level. Couplings across dt levels use
    // this so level differences isolate the deterministic O(dt) bias.
    NoisePath coarsen_exact(const Grid& g, int factor) const {
        if (factor < 1 || increments.size() % static_cast<size_t>(factor) != 0)
            throw std::invalid_argument("NoisePath::coarsen_exact: factor must divide the step count");
        NoisePath p;
        p.dt = dt * factor;
        p.increments.resize(increments.size() / static_cast<size_t>(factor));
        const size_t n = increments.empty() ? 0 : increments[0].size();
        std::vector<SpectralMultiplier> phases;
        for (int f = 0; f < factor; ++f)
            phases.push_back(airy_multiplier(g, (factor - 1 - f) * dt));
        for (size_t i = 0; i < p.increments.size(); ++i) {
            SpectralData acc(n, Complex(0.0, 0.0));
            for (int f = 0; f < factor; ++f) {
                const auto& src = increments[i * static_cast<size_t>(factor) + static_cast<size_t>(f)];
                const auto& ph = phases[static_cast<size_t>(f)].values;
                for (size_t j = 0; j < n; ++j) acc[j] += ph[j] * src[j];
            }
            p.increments[i] = std::move(acc);
        }
        return p;
    }
};

namespace detail {

template <typename NextIncrement>
Trajectory integrate_loop(const SimConfig& cfg, const Grid& g, const Field& u0,
                          NextIncrement&& next_increment) {
    cfg.validate();
    require_same_grid(g, u0.grid(), "integrate");
    const int n_steps = cfg.n_steps();
    GkdvStepper stepper(g, cfg.k, cfg.mu, cfg.dt, cfg.pad_factor, cfg.cfl_constant);

    Trajectory tr;
    tr.times.reserve(static_cast<size_t>(n_steps / cfg.save_every) + 1);
    tr.times.push_back(0.0);
    tr.snapshots.push_back(u0);

    SpectralData u(u0.packed().begin(), u0.packed().end());
    SpectralData eta(u.size());
    for (int i = 0; i < n_steps; ++i) {
        stepper.det_step(cfg.scheme, u);
        next_increment(eta);
        for (size_t j = 0; j < u.size(); ++j) u[j] += eta[j];
        const double t = (i + 1) * cfg.dt;

        const bool finite = std::isfinite(u[0].real()) && std::isfinite(u[0].imag());
        if (!finite || stepper.last_max_abs() > 1e8) {
            tr.blowup = BlowupEvent{t, stepper.last_max_abs()};
            tr.times.push_back(t);
            tr.snapshots.push_back(Field::from_packed(g, u));
            break;
        }
        if ((i + 1) % cfg.save_every == 0) {
            tr.times.push_back(t);
            tr.snapshots.push_back(Field::from_packed(g, u));
        }
    }
    tr.cfl_warnings = stepper.cfl_warnings();
    return tr;
}

}  // namespace detail

// Integrates from u0, drawing noise increments from rng; deterministic given
// (cfg, phi, u0, stream state).
inline Trajectory integrate(const SimConfig& cfg, const Grid& g, const CovarianceOperator& phi,
                            const Field& u0, RngStream& rng) {
    require_same_grid(g, phi.grid(), "integrate");
    SpectralData scratch;
    return detail::integrate_loop(cfg, g, u0, [&](SpectralData& eta) {
        if (phi.is_zero()) {
            for (auto& c : eta) c = Complex(0.0, 0.0);
            return;
        }
        spectral::sample_increment(phi, cfg.dt, rng, eta);
        (void)scratch;
    });
}

// Integrates against a precomputed noise path (cfg.dt must match path.dt).
inline Trajectory integrate_with_path(const SimConfig& cfg, const Grid& g, const Field& u0,
                                      const NoisePath& path) {
    if (std::abs(path.dt - cfg.dt) > 1e-12 * cfg.dt)
        throw std::invalid_argument("integrate_with_path: path dt does not match config dt");
    if (static_cast<int>(path.increments.size()) < cfg.n_steps())
        throw std::invalid_argument("integrate_with_path: path too short");
    size_t next = 0;
    return detail::integrate_loop(cfg, g, u0, [&](SpectralData& eta) {
        const auto& inc = path.increments[next++];
        std::copy(inc.begin(), inc.end(), eta.begin());
    });
}

}  // namespace sgkdv
