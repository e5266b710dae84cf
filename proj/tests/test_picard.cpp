#include <gtest/gtest.h>

#include <cmath>

#include "sgkdv/dynamics.hpp"
#include "sgkdv/initial_data.hpp"
#include "sgkdv/picard.hpp"
#include "testing_util.hpp"

using namespace sgkdv;

namespace {

double sup_l2_diff(const std::vector<SpectralData>& a, const std::vector<SpectralData>& b,
                   const Grid& g) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        SpectralData d(a[i].size());
        for (size_t j = 0; j < d.size(); ++j) d[j] = a[i][j] - b[i][j];
        m = std::max(m, std::sqrt(spectral::l2_norm_sq(g, d)));
    }
    return m;
}

}  // namespace

TEST(Picard, ZeroDataZeroNoise) {
    Grid g(32, 10.0);
    std::vector<SpectralData> v(9, SpectralData(32, Complex(0, 0)));
    PicardResult r = picard_solve(g, Field::zero(g), v, 2, 1, 0.5, 8, 1e-12, 20);
    EXPECT_TRUE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 1);
    for (const auto& u : r.iterate)
        for (const auto& c : u) EXPECT_EQ(std::abs(c), 0.0);
}

TEST(Picard, AffineMapConvergesInOneSweep) {
    Grid g(64, 20.0);
    RngStream rng(31, 2);
    Field u0 = testutil::random_field(g, rng);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 0.5, 2.0);
    const int n_steps = 16;
    const double T = 0.4;
    NoisePath path = NoisePath::sample(phi, T / n_steps, n_steps, rng);
    auto v = convolution_lattice(g, path, n_steps);

    // mu = 0 removes the nonlinearity: fixed point is S(t) u0 + v(t).
    PicardResult r = picard_solve(g, u0, v, 2, 0, T, n_steps, 1e-12, 20);
    EXPECT_TRUE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 1);

    SpectralData su0(u0.packed().begin(), u0.packed().end());
    const SpectralMultiplier airy = airy_multiplier(g, T / n_steps);
    for (int i = 0; i <= n_steps; ++i) {
        SpectralData expect(su0);
        for (size_t j = 0; j < expect.size(); ++j) expect[j] += v[static_cast<size_t>(i)][j];
        for (size_t j = 0; j < expect.size(); ++j)
            EXPECT_NEAR(std::abs(r.iterate[static_cast<size_t>(i)][j] - expect[j]), 0.0, 1e-14);
        airy.apply_in_place(su0);
    }
}

TEST(Picard, SmallDataContractionAndSolverConsistency) {
    Grid g(64, 20.0);
    Field u0 = initial_data({.kind = InitialDataSpec::Kind::gaussian,
                             .amplitude = 0.1,
                             .width = 2.0,
                             .normalize = true,
                             .norm_sigma = 0.25,
                             .norm_value = 0.1},
                            g, 2, 1);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0).normalized(1.1).scaled(1e-3);
    RngStream rng(505, 7);
    const double T = 0.5;
    const int fine_steps = 128;
    NoisePath fine = NoisePath::sample(phi, T / fine_steps, fine_steps, rng);

    double mismatch[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
        NoisePath path = lvl == 1 ? fine : fine.coarsen_exact(g, 2);
        const int ns = lvl == 1 ? fine_steps : fine_steps / 2;
        auto v = convolution_lattice(g, path, ns);
        PicardResult r = picard_solve(g, u0, v, 2, 1, T, ns, 1e-11, 40);
        ASSERT_TRUE(r.report.converged);
        for (double q : r.report.ratios) EXPECT_LE(q, 0.9);

        SimConfig cfg;
        cfg.k = 2;
        cfg.n = 64;
        cfg.length = 20.0;
        cfg.dt = T / ns;
        cfg.T = T;
        cfg.scheme = Scheme::exp_euler;
        Trajectory tr = integrate_with_path(cfg, g, u0, path);
        std::vector<SpectralData> euler;
        euler.reserve(tr.snapshots.size());
        for (const Field& f : tr.snapshots)
            euler.emplace_back(f.packed().begin(), f.packed().end());
        mismatch[lvl] = sup_l2_diff(r.iterate, euler, g);
        EXPECT_LE(mismatch[lvl], 10.0 * cfg.dt);
    }
    const double ratio = mismatch[0] / mismatch[1];
    EXPECT_GE(ratio, 1.4);
    EXPECT_LE(ratio, 3.0);
}

TEST(Picard, NonContractionSignal) {
    // Large data over a long window: the sweep map should fail to contract
    // within the iteration budget and report the difference history.
    Grid g(64, 20.0);
    Field u0 = initial_data({.kind = InitialDataSpec::Kind::gaussian, .amplitude = 4.0, .width = 1.0},
                            g, 2, 1);
    std::vector<SpectralData> v(65, SpectralData(64, Complex(0, 0)));
    PicardResult r = picard_solve(g, u0, v, 2, 1, 8.0, 64, 1e-12, 5);
    EXPECT_FALSE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 5);
    EXPECT_EQ(r.report.diffs.size(), 5u);
}
