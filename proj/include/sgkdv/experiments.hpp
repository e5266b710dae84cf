#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sgkdv/ensemble.hpp"
#include "sgkdv/picard.hpp"
#include "sgkdv/stats.hpp"

namespace sgkdv {

struct CheckVerdict {
    std::string check;
    double target = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    double bias_estimate = 0.0;
    bool pass = false;
    std::vector<std::pair<std::string, double>> extra;
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
    RngStream s(master, 0xC0FFEE00ULL + tag);
    return s.next_u64();
}

// ---------------------------------------------------------------------------
// Variance of the stochastic convolution: E ||v(T)||^2_{H^sigma} = T ||Phi||^2.

inline std::vector<double> convolution_norm_sq_samples(const Grid& g,
                                                       const CovarianceOperator& phi, double sigma,
                                                       double T, int n_steps, int n_traj,
                                                       std::uint64_t master_seed, int threads) {
    std::vector<double> out(static_cast<size_t>(n_traj));
    const double dt = T / n_steps;
    parallel_for(n_traj, threads, [&](int i) {
        RngStream rng(master_seed, static_cast<std::uint64_t>(i));
        SpectralData v(static_cast<size_t>(g.size()), Complex(0.0, 0.0));
        SpectralData buf(v.size());
        const SpectralMultiplier airy = airy_multiplier(g, dt);
        for (int s = 0; s < n_steps; ++s) {
            airy.apply_in_place(v);
            spectral::add_increment(phi, dt, rng, v, buf);
        }
        const double nrm = spectral::sobolev_norm(g, v, sigma);
        out[static_cast<size_t>(i)] = nrm * nrm;
    });
    return out;
}

// One verdict per sigma; Phi is renormalized to hs_norm(sigma) = 1 when
// normalize is set, which pins the target to T itself.
inline std::vector<CheckVerdict> convolution_variance_check(
    const Grid& g, const CovarianceOperator& phi, const std::vector<double>& sigma_list, double T,
    int n_steps, int n_traj, std::uint64_t master_seed, int threads, bool normalize = true) {
    std::vector<CheckVerdict> verdicts;
    for (size_t si = 0; si < sigma_list.size(); ++si) {
        const double sigma = sigma_list[si];
        const CovarianceOperator use = normalize ? phi.normalized(sigma) : phi;
        const double target = T * use.hs_norm(sigma) * use.hs_norm(sigma);
        const auto samples = convolution_norm_sq_samples(
            g, use, sigma, T, n_steps, n_traj, derive_seed(master_seed, si), threads);
        const MeanSe m = mean_se(samples);
        CheckVerdict v;
        v.check = "conv_variance sigma=" + std::to_string(sigma);
        v.target = target;
        v.estimate = m.mean;
        v.se = m.se;
        v.pass = std::abs(m.mean - target) <= 3.0 * m.se;
        v.extra = {{"sigma", sigma}, {"n_steps", static_cast<double>(n_steps)},
                   {"n_traj", static_cast<double>(n_traj)}};
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

// The exact sampler has no time-discretization bias: the same marginal law
// must come out of 1 step and of many.
inline CheckVerdict convolution_step_independence_check(const Grid& g,
                                                        const CovarianceOperator& phi,
                                                        double sigma, double T, int steps_a,
                                                        int steps_b, int n_traj,
                                                        std::uint64_t master_seed, int threads) {
    const CovarianceOperator use = phi.normalized(sigma);
    const auto sa = convolution_norm_sq_samples(g, use, sigma, T, steps_a, n_traj,
                                                derive_seed(master_seed, 101), threads);
    const auto sb = convolution_norm_sq_samples(g, use, sigma, T, steps_b, n_traj,
                                                derive_seed(master_seed, 202), threads);
    const MeanSe ma = mean_se(sa);
    const MeanSe mb = mean_se(sb);
    CheckVerdict v;
    v.check = "conv_step_independence";
    v.target = ma.mean;
    v.estimate = mb.mean;
    v.se = std::sqrt(ma.se * ma.se + mb.se * mb.se);
    v.pass = std::abs(ma.mean - mb.mean) <= 3.0 * v.se;
    v.extra = {{"steps_a", static_cast<double>(steps_a)},
               {"steps_b", static_cast<double>(steps_b)},
               {"mean_a", ma.mean},
               {"mean_b", mb.mean}};
    return v;
}

// ---------------------------------------------------------------------------
// Ito mass balance E ||u(T)||^2 - ||u0||^2 = T ||Phi||^2_{L_2^{0,0}}.

struct MassItoReport {
    double target = 0.0;
    std::vector<double> dts;
    std::vector<MeanSe> estimates;       // per refinement level
    std::vector<double> bias_estimates;  // per level, Richardson from the D's
    std::vector<MeanSe> level_diffs;     // D_l = mean(m_{l-1} - m_l), paired
    double shrink_ratio = 0.0;           // D_1 / D_2, the bias halving factor
    double shrink_se = 0.0;
    bool pass_balance = false;
    bool pass_shrink = true;  // only evaluated with >= 3 levels
    int blowups = 0;

    std::vector<CheckVerdict> verdicts() const {
        std::vector<CheckVerdict> out;
        for (size_t l = 0; l < estimates.size(); ++l) {
            CheckVerdict v;
            v.check = "mass_ito dt=" + std::to_string(dts[l]);
            v.target = target;
            v.estimate = estimates[l].mean;
            v.se = estimates[l].se;
            v.bias_estimate = bias_estimates[l];
            v.pass = std::abs(v.estimate - target) <= 3.0 * v.se + std::abs(v.bias_estimate);
            out.push_back(std::move(v));
        }
        return out;
    }
};

// Couples every refinement level to one Brownian path per trajectory
// (coarse increments are sums of fine ones), so the level differences
// D_l isolate the O(dt) discretization bias from the Monte Carlo noise.
// First-order Richardson then gives bias(dt_l) ~= D_l for l >= 1 and
// bias(dt_0) ~= 2 D_1, and the shrink ratio D_1/D_2 measures how the bias
// halves with dt.
inline MassItoReport mass_ito_check(const SimConfig& cfg, const Grid& g,
                                    const CovarianceOperator& phi, const Field& u0, int n_traj,
                                    int levels, std::uint64_t master_seed, int threads) {
    if (levels < 2) throw std::invalid_argument("mass_ito_check: need >= 2 refinement levels");
    MassItoReport rep;
    const double hs0 = phi.hs_norm(0.0);
    rep.target = cfg.n_steps() * cfg.dt * hs0 * hs0;
    rep.dts.resize(static_cast<size_t>(levels));
    for (int l = 0; l < levels; ++l) rep.dts[static_cast<size_t>(l)] = cfg.dt / (1 << l);

    const double m0 = mass(u0);
    const int fine_factor = 1 << (levels - 1);
    const int n_fine = cfg.n_steps() * fine_factor;

    std::vector<std::vector<double>> gains(static_cast<size_t>(levels),
                                           std::vector<double>(static_cast<size_t>(n_traj)));
    std::vector<char> blown(static_cast<size_t>(n_traj), 0);
    parallel_for(n_traj, threads, [&](int i) {
        RngStream rng(master_seed, static_cast<std::uint64_t>(i));
        const NoisePath fine = NoisePath::sample(phi, cfg.dt / fine_factor, n_fine, rng);
        for (int l = 0; l < levels; ++l) {
            SimConfig run = cfg;
            run.dt = rep.dts[static_cast<size_t>(l)];
            run.scheme = Scheme::exp_euler;
            run.save_every = run.n_steps();
            const NoisePath path =
                (l == levels - 1) ? fine : fine.coarsen_exact(g, fine_factor >> l);
            Trajectory tr = integrate_with_path(run, g, u0, path);
            if (tr.blowup) {
                blown[static_cast<size_t>(i)] = 1;
                return;
            }
            gains[static_cast<size_t>(l)][static_cast<size_t>(i)] =
                mass(tr.snapshots.back()) - m0;
        }
    });

    std::vector<std::vector<double>> clean(static_cast<size_t>(levels));
    std::vector<std::vector<double>> diffs(static_cast<size_t>(levels) - 1);
    for (int i = 0; i < n_traj; ++i) {
        if (blown[static_cast<size_t>(i)]) {
            rep.blowups += 1;
            continue;
        }
        for (int l = 0; l < levels; ++l)
            clean[static_cast<size_t>(l)].push_back(gains[static_cast<size_t>(l)][static_cast<size_t>(i)]);
        for (int l = 0; l + 1 < levels; ++l)
            diffs[static_cast<size_t>(l)].push_back(
                gains[static_cast<size_t>(l)][static_cast<size_t>(i)] -
                gains[static_cast<size_t>(l) + 1][static_cast<size_t>(i)]);
    }
    for (int l = 0; l < levels; ++l)
        rep.estimates.push_back(mean_se(clean[static_cast<size_t>(l)]));
    for (auto& d : diffs) rep.level_diffs.push_back(mean_se(d));

    // First-order model bias(dt) = c dt: the paired difference of levels
    // l-1 and l estimates c dt_l directly, and bias(dt_0) = 2 D_1.
    rep.bias_estimates.assign(static_cast<size_t>(levels), 0.0);
    if (!rep.level_diffs.empty()) {
        rep.bias_estimates[0] = 2.0 * std::abs(rep.level_diffs[0].mean);
        for (int l = 1; l < levels; ++l)
            rep.bias_estimates[static_cast<size_t>(l)] =
                std::abs(rep.level_diffs[static_cast<size_t>(l) - 1].mean);
    }

    const auto& ref = rep.estimates[1];  // the dt/2 run per the check contract
    rep.pass_balance =
        std::abs(ref.mean - rep.target) <= 3.0 * ref.se + rep.bias_estimates[1];

    if (levels >= 3) {
        const MeanSe& d1 = rep.level_diffs[0];
        const MeanSe& d2 = rep.level_diffs[1];
        rep.shrink_ratio = d1.mean / d2.mean;
        // Delta-method SE of the ratio with independent-level approximation.
        rep.shrink_se = std::abs(rep.shrink_ratio) *
                        std::sqrt(std::pow(d1.se / d1.mean, 2) + std::pow(d2.se / d2.mean, 2));
        rep.pass_shrink = rep.shrink_ratio + 3.0 * rep.shrink_se >= 2.0 && rep.shrink_ratio > 1.0;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Moment balance d/dt E ||u||^{2q} vs the Ito drift, centered differences.

inline std::vector<CheckVerdict> moment_balance_check(const SimConfig& cfg, const Grid& g,
                                                      const CovarianceOperator& phi,
                                                      const Field& u0, int q, int n_traj,
                                                      std::uint64_t master_seed, int threads) {
    SimConfig run = cfg;
    run.scheme = Scheme::exp_euler;
    run.validate();
    const int n_snap = run.n_steps() / run.save_every + 1;
    const double stride = run.save_every * run.dt;

    std::vector<std::vector<double>> moment(static_cast<size_t>(n_traj));
    std::vector<std::vector<double>> drift(static_cast<size_t>(n_traj));
    std::vector<char> blown(static_cast<size_t>(n_traj), 0);
    parallel_for(n_traj, threads, [&](int i) {
        RngStream rng(master_seed, static_cast<std::uint64_t>(i));
        Trajectory tr = integrate(run, g, phi, u0, rng);
        if (tr.blowup) {
            blown[static_cast<size_t>(i)] = 1;
            return;
        }
        auto& mrow = moment[static_cast<size_t>(i)];
        auto& drow = drift[static_cast<size_t>(i)];
        mrow.resize(tr.snapshots.size());
        drow.resize(tr.snapshots.size());
        for (size_t s = 0; s < tr.snapshots.size(); ++s) {
            mrow[s] = std::pow(mass(tr.snapshots[s]), q);
            drow[s] = mass_moment_drift(tr.snapshots[s], phi, q);
        }
    });

    std::vector<CheckVerdict> verdicts;
    std::vector<double> paired;
    std::vector<double> fd_vals, drift_vals;
    for (int j = 1; j + 1 < n_snap; ++j) {
        paired.clear();
        fd_vals.clear();
        drift_vals.clear();
        for (int i = 0; i < n_traj; ++i) {
            if (blown[static_cast<size_t>(i)]) continue;
            const auto& mrow = moment[static_cast<size_t>(i)];
            const auto& drow = drift[static_cast<size_t>(i)];
            const double fd = (mrow[static_cast<size_t>(j) + 1] - mrow[static_cast<size_t>(j) - 1]) /
                              (2.0 * stride);
            fd_vals.push_back(fd);
            drift_vals.push_back(drow[static_cast<size_t>(j)]);
            paired.push_back(fd - drow[static_cast<size_t>(j)]);
        }
        const MeanSe diff = mean_se(paired);
        CheckVerdict v;
        v.check = "moment_balance q=" + std::to_string(q) + " t=" + std::to_string(j * stride);
        v.estimate = mean_se(fd_vals).mean;
        v.target = mean_se(drift_vals).mean;
        v.se = diff.se;
        v.pass = std::abs(diff.mean) <= 3.0 * diff.se;
        v.extra = {{"paired_mean", diff.mean}, {"t", j * stride}};
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

// ---------------------------------------------------------------------------
// T-scaling studies of the convolution functionals.

enum class ScalingQuantity { sup_hsigma, marginal_hsigma, mixed, xk };

struct ScalingStudyParams {
    ScalingQuantity quantity = ScalingQuantity::sup_hsigma;
    double sigma = 0.25;
    int moment_q = 1;  // E [ quantity^{2q} ] for the Sobolev functionals
    MixedNormSpec mixed_spec{};
    int k = 2;
    ExistenceConstants consts{};
    std::vector<double> horizons{0.25, 0.5, 1.0, 2.0, 4.0};
    int n_steps = 64;
    int n_traj = 1000;
    int bootstrap = 1000;
    double ratio_spread_limit = 5.0;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ScalingStudyResult {
    std::vector<double> horizons, means, ses;
    SlopeCi slope;
    std::vector<double> envelope_ratio;  // xk only
    double ratio_spread = 0.0;
    bool ratio_pass = true;
};

inline double xk_envelope(int k, double T) {
    return k == 2 ? std::sqrt(T) + T * T : T + T * T;
}

inline ScalingStudyResult lemma_scaling_study(const Grid& g, const CovarianceOperator& phi,
                                              const ScalingStudyParams& p) {
    if (p.horizons.size() < 4)
        throw std::invalid_argument("lemma_scaling_study: need at least 4 horizons");
    ScalingStudyResult res;
    res.horizons = p.horizons;
    std::vector<std::vector<double>> samples(p.horizons.size());

    for (size_t h = 0; h < p.horizons.size(); ++h) {
        const double T = p.horizons[h];
        auto& vals = samples[h];
        vals.resize(static_cast<size_t>(p.n_traj));
        const std::uint64_t sub_seed = derive_seed(p.seed, 7000 + h);
        parallel_for(p.n_traj, p.threads, [&](int i) {
            RngStream rng(sub_seed, static_cast<std::uint64_t>(i));
            double value = 0.0;
            if (p.quantity == ScalingQuantity::sup_hsigma ||
                p.quantity == ScalingQuantity::marginal_hsigma) {
                SpectralData v(static_cast<size_t>(g.size()), Complex(0.0, 0.0));
                SpectralData buf(v.size());
                const double dt = T / p.n_steps;
                const SpectralMultiplier airy = airy_multiplier(g, dt);
                double sup = 0.0;
                for (int s = 0; s < p.n_steps; ++s) {
                    airy.apply_in_place(v);
                    spectral::add_increment(phi, dt, rng, v, buf);
                    if (p.quantity == ScalingQuantity::sup_hsigma)
                        sup = std::max(sup, spectral::sobolev_norm(g, v, p.sigma));
                }
                const double nrm = p.quantity == ScalingQuantity::sup_hsigma
                                       ? sup
                                       : spectral::sobolev_norm(g, v, p.sigma);
                value = std::pow(nrm * nrm, p.moment_q);
            } else {
                auto path = convolution_path(phi, T, p.n_steps, rng);
                std::vector<double> t(path.size());
                for (size_t s = 0; s < t.size(); ++s)
                    t[s] = T * static_cast<double>(s) / p.n_steps;
                TrajectoryView view = make_view(g, t, path);
                if (p.quantity == ScalingQuantity::mixed) {
                    const double nrm = mixed_norm(view, p.mixed_spec);
                    value = nrm * nrm;
                } else {
                    const double nrm = xk_norm(view, p.k, p.consts).value;
                    value = nrm * nrm;
                }
            }
            vals[static_cast<size_t>(i)] = value;
        });
        const MeanSe m = mean_se(vals);
        res.means.push_back(m.mean);
        res.ses.push_back(m.se);
    }

    res.slope = bootstrap_loglog_slope(res.horizons, samples, p.bootstrap, derive_seed(p.seed, 99));
    if (p.quantity == ScalingQuantity::xk) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (size_t h = 0; h < res.horizons.size(); ++h) {
            const double r = res.means[h] / xk_envelope(p.k, res.horizons[h]);
            res.envelope_ratio.push_back(r);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        res.ratio_spread = hi / lo;
        res.ratio_pass = res.ratio_spread <= p.ratio_spread_limit;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Picard contraction experiment.

struct PicardStudyParams {
    int k = 2;
    int mu = 1;
    int pad_factor = 2;
    double t_max = 64.0;
    int n_steps_max = 4096;
    double tol = 1e-10;
    int max_iter = 60;
    double ratio_threshold = 0.9;
    int n_traj = 100;
    ExistenceConstants consts{};
    std::uint64_t seed = 7;
    int threads = 1;
};

struct PicardTrajectoryReport {
    double radius = 0.0;
    double t_star = 0.0;
    bool admissible = false;  // t_star <= local_time(local_radius) held on the scan
    int iterations = 0;
    bool converged = false;
    bool contracting = false;
    double max_ratio = 0.0;
    double mismatch_fine = 0.0;    // vs exp-Euler at the scan dt
    double mismatch_coarse = 0.0;  // vs exp-Euler at twice the scan dt
};

struct PicardStudyResult {
    std::vector<PicardTrajectoryReport> per_traj;
    double contraction_fraction = 0.0;
    double median_mismatch_ratio = 0.0;
    bool pass_contraction = false;
    bool pass_halving = false;
};

namespace detail {

inline double sup_l2_mismatch(const std::vector<SpectralData>& a, const Trajectory& tr,
                              const Grid& g) {
    double worst = 0.0;
    const size_t n = std::min(a.size(), tr.snapshots.size());
    SpectralData d(static_cast<size_t>(g.size()));
    for (size_t i = 0; i < n; ++i) {
        const auto pb = tr.snapshots[i].packed();
        for (size_t j = 0; j < d.size(); ++j) d[j] = a[i][j] - pb[j];
        worst = std::max(worst, std::sqrt(spectral::l2_norm_sq(g, d)));
    }
    return worst;
}

}  // namespace detail

// Per trajectory: sample v over [0, t_max], pick the largest dyadic window
// T* with T* <= local_time(local_radius(u0, v|[0,T*])), then run the Picard
// sweep on that window and compare its fixed point with the exponential
// Euler trajectory driven by the same increments, at the scan dt and at
// twice the scan dt.
inline PicardStudyResult picard_contraction_study(const Grid& g, const CovarianceOperator& phi,
                                                  const Field& u0, const PicardStudyParams& p) {
    PicardStudyResult res;
    res.per_traj.resize(static_cast<size_t>(p.n_traj));
    const double dt_fine = p.t_max / p.n_steps_max;

    parallel_for(p.n_traj, p.threads, [&](int ti) {
        PicardTrajectoryReport& rep = res.per_traj[static_cast<size_t>(ti)];
        RngStream rng(p.seed, static_cast<std::uint64_t>(ti));
        const NoisePath fine = NoisePath::sample(phi, dt_fine, p.n_steps_max, rng);
        const std::vector<SpectralData> v_packed = convolution_lattice(g, fine, p.n_steps_max);
        std::vector<Field> v_fields;
        v_fields.reserve(v_packed.size());
        for (const auto& c : v_packed) v_fields.push_back(Field::from_packed(g, c));
        std::vector<double> t_lattice(v_packed.size());
        for (size_t s = 0; s < t_lattice.size(); ++s) t_lattice[s] = dt_fine * static_cast<double>(s);

        int len = p.n_steps_max;
        for (; len >= 8; len /= 2) {
            TrajectoryView view = make_view(g, std::span(t_lattice).first(static_cast<size_t>(len) + 1),
                                            std::span(v_fields).first(static_cast<size_t>(len) + 1));
            rep.radius = local_radius(u0, view, p.k, p.consts);
            const double t_window = len * dt_fine;
            if (rep.radius == 0.0) {
                rep.admissible = true;
                break;
            }
            if (t_window <= local_time(rep.radius, p.k, p.consts)) {
                rep.admissible = true;
                break;
            }
        }
        len = std::max(len, 8);
        rep.t_star = len * dt_fine;

        // Fine-lattice Picard + exp-Euler on the same increments.
        std::vector<SpectralData> v_prefix(v_packed.begin(), v_packed.begin() + len + 1);
        PicardResult fixp =
            picard_solve(g, u0, v_prefix, p.k, p.mu, rep.t_star, len, p.tol, p.max_iter, p.pad_factor);
        rep.iterations = fixp.report.iterations;
        rep.converged = fixp.report.converged;
        rep.max_ratio = 0.0;
        for (double r : fixp.report.ratios) rep.max_ratio = std::max(rep.max_ratio, r);
        rep.contracting =
            rep.converged && (fixp.report.ratios.empty() || rep.max_ratio <= p.ratio_threshold);

        SimConfig run;
        run.k = p.k;
        run.mu = p.mu;
        run.n = g.size();
        run.length = g.length();
        run.pad_factor = p.pad_factor;
        run.scheme = Scheme::exp_euler;
        run.dt = dt_fine;
        run.T = rep.t_star;
        run.save_every = 1;
        NoisePath prefix;
        prefix.dt = dt_fine;
        prefix.increments.assign(fine.increments.begin(), fine.increments.begin() + len);
        Trajectory euler_fine = integrate_with_path(run, g, u0, prefix);
        rep.mismatch_fine = detail::sup_l2_mismatch(fixp.iterate, euler_fine, g);

        // Coarse level: same Brownian path at twice the step.
        const NoisePath coarse = prefix.coarsen_exact(g, 2);
        const std::vector<SpectralData> v_coarse = convolution_lattice(g, coarse, len / 2);
        PicardResult fixp_c = picard_solve(g, u0, v_coarse, p.k, p.mu, rep.t_star, len / 2, p.tol,
                                           p.max_iter, p.pad_factor);
        SimConfig run_c = run;
        run_c.dt = coarse.dt;
        Trajectory euler_coarse = integrate_with_path(run_c, g, u0, coarse);
        rep.mismatch_coarse = detail::sup_l2_mismatch(fixp_c.iterate, euler_coarse, g);
    });

    int contracting = 0;
    std::vector<double> ratios;
    for (const auto& rep : res.per_traj) {
        contracting += rep.contracting ? 1 : 0;
        if (rep.mismatch_fine > 0.0) ratios.push_back(rep.mismatch_coarse / rep.mismatch_fine);
    }
    res.contraction_fraction = static_cast<double>(contracting) / std::max(1, p.n_traj);
    if (!ratios.empty()) {
        std::sort(ratios.begin(), ratios.end());
        res.median_mismatch_ratio = ratios[ratios.size() / 2];
    }
    res.pass_contraction = res.contraction_fraction >= 0.95;
    res.pass_halving = res.median_mismatch_ratio >= 1.5;
    return res;
}

}  // namespace sgkdv
