#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sgkdv/covariance.hpp"
#include "sgkdv/dynamics.hpp"
#include "sgkdv/initial_data.hpp"
#include "sgkdv/observables.hpp"
#include "sgkdv/stats.hpp"

namespace sgkdv {

// Runs fn(0..n-1) on `threads` workers. Work items must not share mutable
// state; results land in preallocated slots so the outcome is independent of
// scheduling.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    const int workers = std::min(threads, n);
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Named per-snapshot observables: "mass", "hamiltonian", "l2", "linf",
// "h<sigma>" (e.g. h0.25 for the H^{1/4} norm).
inline std::function<double(const Field&)> make_observable(const std::string& name, int k,
                                                           int pad_factor) {
    if (name == "mass") return [](const Field& f) { return mass(f); };
    if (name == "hamiltonian")
        return [k, pad_factor](const Field& f) { return hamiltonian(f, k, pad_factor); };
    if (name == "l2") return [](const Field& f) { return lp_norm(f, 2.0); };
    if (name == "linf")
        return [](const Field& f) { return lp_norm(f, std::numeric_limits<double>::infinity()); };
    if (name.size() > 1 && name[0] == 'h') {
        const double sigma = std::stod(name.substr(1));
        return [sigma](const Field& f) { return sobolev_norm(f, sigma); };
    }
    throw std::invalid_argument("unknown observable '" + name + "'");
}

struct EnsembleSpec {
    SimConfig base;
    InitialDataSpec initial;
    int n_traj = 2;
    std::vector<std::string> observables{"mass"};
    std::uint64_t master_seed = 0;
};

struct BlowupCensus {
    int count = 0;
    std::vector<int> trajectory_ids;
    std::vector<double> times;
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::string> observable_names;
    // per_traj[i][t][o]; rows of blown-up trajectories stop early.
    std::vector<std::vector<std::vector<double>>> per_traj;
    // Reductions over trajectories that reached each time.
    std::vector<std::vector<double>> mean_table;  // [t][o]
    std::vector<std::vector<double>> se_table;    // [t][o]
    BlowupCensus blowups;
};

// n_traj independent trajectories; per-trajectory stream_id = trajectory
// index, reduction in index order, so the result is a pure function of the
// spec no matter how many workers run it.
inline EnsembleResult run_ensemble(const EnsembleSpec& spec, const Grid& g,
                                   const CovarianceOperator& phi, int threads = 1) {
    if (spec.n_traj < 1) throw std::invalid_argument("run_ensemble: n_traj must be >= 1");
    spec.base.validate();
    EnsembleResult res;
    res.observable_names = spec.observables;
    std::vector<std::function<double(const Field&)>> obs;
    for (const auto& name : spec.observables)
        obs.push_back(make_observable(name, spec.base.k, spec.base.pad_factor));

    const Field u0 = initial_data(spec.initial, g, spec.base.k, spec.base.mu);
    res.per_traj.resize(static_cast<size_t>(spec.n_traj));
    std::vector<char> blown(static_cast<size_t>(spec.n_traj), 0);
    std::vector<double> blow_time(static_cast<size_t>(spec.n_traj), 0.0);

    parallel_for(spec.n_traj, threads, [&](int i) {
        RngStream rng(spec.master_seed, static_cast<std::uint64_t>(i));
        Trajectory tr = integrate(spec.base, g, phi, u0, rng);
        auto& rows = res.per_traj[static_cast<size_t>(i)];
        rows.resize(tr.snapshots.size());
        for (size_t t = 0; t < tr.snapshots.size(); ++t) {
            rows[t].resize(obs.size());
            for (size_t o = 0; o < obs.size(); ++o) rows[t][o] = obs[o](tr.snapshots[t]);
        }
        if (tr.blowup) {
            blown[static_cast<size_t>(i)] = 1;
            blow_time[static_cast<size_t>(i)] = tr.blowup->t;
        }
    });

    // Lattice of the configured run (blow-ups stop early but the schedule is fixed).
    const int n_steps = spec.base.n_steps();
    for (int s = 0; s <= n_steps; s += spec.base.save_every)
        res.times.push_back(s * spec.base.dt);

    for (int i = 0; i < spec.n_traj; ++i)
        if (blown[static_cast<size_t>(i)]) {
            res.blowups.count += 1;
            res.blowups.trajectory_ids.push_back(i);
            res.blowups.times.push_back(blow_time[static_cast<size_t>(i)]);
        }

    const size_t nt = res.times.size();
    res.mean_table.assign(nt, std::vector<double>(obs.size(), 0.0));
    res.se_table.assign(nt, std::vector<double>(obs.size(), 0.0));
    std::vector<double> column;
    for (size_t t = 0; t < nt; ++t) {
        for (size_t o = 0; o < obs.size(); ++o) {
            column.clear();
            for (const auto& rows : res.per_traj)
                if (t < rows.size()) column.push_back(rows[t][o]);
            const MeanSe m = mean_se(column);
            res.mean_table[t][o] = m.mean;
            res.se_table[t][o] = m.se;
        }
    }
    return res;
}

}  // namespace sgkdv
