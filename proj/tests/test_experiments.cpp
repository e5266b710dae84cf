#include <gtest/gtest.h>

#include <cmath>

#include "sgkdv/experiments.hpp"
#include "testing_util.hpp"

using namespace sgkdv;

namespace {

CovarianceOperator single_mode(const Grid& g, int m0, double a) {
    std::vector<double> table(static_cast<size_t>(g.size() / 2), 0.0);
    table[static_cast<size_t>(m0)] = a;
    return CovarianceOperator::from_table(g, table);
}

EnsembleSpec small_ensemble(int n_traj, std::uint64_t seed) {
    EnsembleSpec spec;
    spec.base.k = 2;
    spec.base.n = 64;
    spec.base.length = 20.0;
    spec.base.dt = 0.01;
    spec.base.T = 0.1;
    spec.base.save_every = 5;
    spec.initial = {.kind = InitialDataSpec::Kind::gaussian, .amplitude = 0.5, .width = 2.0};
    spec.n_traj = n_traj;
    spec.observables = {"mass", "hamiltonian", "h0.25"};
    spec.master_seed = seed;
    return spec;
}

}  // namespace

TEST(Ensemble, NoiseFreeTrajectoriesIdentical) {
    Grid g(64, 20.0);
    EnsembleSpec spec = small_ensemble(2, 11);
    EnsembleResult r = run_ensemble(spec, g, CovarianceOperator::zero(g), 2);
    ASSERT_EQ(r.per_traj.size(), 2u);
    for (size_t t = 0; t < r.per_traj[0].size(); ++t)
        for (size_t o = 0; o < r.per_traj[0][t].size(); ++o)
            EXPECT_EQ(r.per_traj[0][t][o], r.per_traj[1][t][o]);
    EXPECT_EQ(r.blowups.count, 0);
}

TEST(Ensemble, DeterministicAcrossRunsAndThreads) {
    Grid g(64, 20.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 0.3, 2.0);
    EnsembleSpec spec = small_ensemble(6, 2024);
    EnsembleResult a = run_ensemble(spec, g, phi, 1);
    EnsembleResult b = run_ensemble(spec, g, phi, 3);
    ASSERT_EQ(a.per_traj.size(), b.per_traj.size());
    for (size_t i = 0; i < a.per_traj.size(); ++i) {
        ASSERT_EQ(a.per_traj[i].size(), b.per_traj[i].size());
        for (size_t t = 0; t < a.per_traj[i].size(); ++t)
            for (size_t o = 0; o < a.per_traj[i][t].size(); ++o)
                EXPECT_EQ(a.per_traj[i][t][o], b.per_traj[i][t][o]);
    }
    for (size_t t = 0; t < a.mean_table.size(); ++t)
        for (size_t o = 0; o < a.mean_table[t].size(); ++o)
            EXPECT_EQ(a.mean_table[t][o], b.mean_table[t][o]);

    // Mean mass at t = 0 is exactly ||u0||^2.
    const Field u0 = initial_data(spec.initial, g, 2, 1);
    EXPECT_DOUBLE_EQ(a.mean_table[0][0], mass(u0));
}

TEST(Ensemble, StandardErrorShrinksWithSampleSize) {
    Grid g(32, 10.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0).normalized(0.0);
    const auto s1 = convolution_norm_sq_samples(g, phi, 0.0, 1.0, 8, 500, 31, 2);
    const auto s4 = convolution_norm_sq_samples(g, phi, 0.0, 1.0, 8, 2000, 32, 2);
    const double r = mean_se(s4).se / mean_se(s1).se;
    EXPECT_GE(r, 0.4);
    EXPECT_LE(r, 0.6);
}

TEST(ConvVarianceCheck, ZeroOperatorAndSingleMode) {
    Grid g(32, 10.0);
    // Zero operator: target 0, all samples 0, trivially PASS.
    auto z = convolution_variance_check(g, CovarianceOperator::zero(g), {0.0}, 1.0, 4, 50, 5, 1,
                                        /*normalize=*/false);
    ASSERT_EQ(z.size(), 1u);
    EXPECT_TRUE(z[0].pass);
    EXPECT_DOUBLE_EQ(z[0].target, 0.0);
    EXPECT_DOUBLE_EQ(z[0].estimate, 0.0);

    // Single-mode phi_{+-1} = 1 at sigma = 0, T = 2: target 2 modes * T = 4.
    auto s = convolution_variance_check(g, single_mode(g, 1, 1.0), {0.0}, 2.0, 8, 4000, 77, 2,
                                        /*normalize=*/false);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_DOUBLE_EQ(s[0].target, 4.0);
    EXPECT_TRUE(s[0].pass);

    // Normalized operator: target is T for every sigma.
    auto n = convolution_variance_check(g, CovarianceOperator::power_law(g, 2.0, 2.0),
                                        {0.0, 0.25, 1.0}, 1.5, 8, 4000, 99, 2);
    for (const auto& v : n) {
        EXPECT_DOUBLE_EQ(v.target, 1.5);
        EXPECT_TRUE(v.pass) << v.check;
    }
}

TEST(ConvVarianceCheck, StepCountIndependence) {
    Grid g(32, 10.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0);
    CheckVerdict v =
        convolution_step_independence_check(g, phi, 0.0, 1.0, 1, 16, 4000, 123, 2);
    EXPECT_TRUE(v.pass);
}

TEST(MassItoCheck, LinearFlowIsExact) {
    // mu = 0 disables the nonlinearity: the identity is exact in
    // distribution and the coupled bias estimate sits at zero.
    Grid g(64, 20.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0).normalized(0.0);
    SimConfig cfg;
    cfg.k = 2;
    cfg.mu = 0;  // linearized diagnostic run
    cfg.n = 64;
    cfg.length = 20.0;
    cfg.dt = 0.02;
    cfg.T = 0.2;
    MassItoReport rep = mass_ito_check(cfg, g, phi, Field::zero(g), 2000, 2, 555, 2);
    EXPECT_NEAR(rep.target, 0.2, 1e-12);
    EXPECT_TRUE(rep.pass_balance);
    // The exact coupling makes the levels agree pathwise when the
    // nonlinearity is off, so the coupled difference is pure rounding.
    EXPECT_LE(std::abs(rep.level_diffs[0].mean), 1e-12);
}

TEST(MassItoCheck, FullMkdvBalanceAndBiasShrink) {
    Grid g(64, 20.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0).normalized(0.0);
    Field u0 = initial_data({.kind = InitialDataSpec::Kind::gaussian,
                             .amplitude = 1.0,
                             .width = 2.0,
                             .normalize = true,
                             .norm_sigma = 0.0,
                             .norm_value = 1.0},
                            g, 2, 1);
    SimConfig cfg;
    cfg.k = 2;
    cfg.mu = 1;
    cfg.n = 64;
    cfg.length = 20.0;
    cfg.dt = 0.01;
    cfg.T = 0.25;
    MassItoReport rep = mass_ito_check(cfg, g, phi, u0, 400, 3, 808, 2);
    EXPECT_EQ(rep.blowups, 0);
    EXPECT_TRUE(rep.pass_balance);
    // Explicit scheme adds mass: the coupled differences are positive.
    EXPECT_GT(rep.level_diffs[0].mean, 0.0);
    EXPECT_GT(rep.level_diffs[1].mean, 0.0);
    EXPECT_GE(rep.shrink_ratio, 1.0);
    EXPECT_LE(rep.shrink_ratio, 4.0);
    auto verdicts = rep.verdicts();
    ASSERT_EQ(verdicts.size(), 3u);
    EXPECT_TRUE(verdicts[1].pass);
}

TEST(MomentBalance, SingleModeGaussianOracle) {
    // Linear flow, single-mode noise: d/dt E ||v||^4 = 16 phi^4 t, by the
    // fourth-moment identity E X^4 = 3 Var^2 for the isotropic mode pair.
    Grid g(32, 10.0);
    CovarianceOperator phi = single_mode(g, 2, 1.0);
    SimConfig cfg;
    cfg.k = 2;
    cfg.mu = 0;  // linearized diagnostic run
    cfg.n = 32;
    cfg.length = 10.0;
    cfg.dt = 0.02;
    cfg.T = 1.0;
    cfg.save_every = 10;
    auto verdicts = moment_balance_check(cfg, g, phi, Field::zero(g), 2, 4000, 4242, 2);
    ASSERT_EQ(verdicts.size(), 4u);  // interior times 0.2, 0.4, 0.6, 0.8
    for (const auto& v : verdicts) EXPECT_TRUE(v.pass) << v.check;
    for (size_t j = 0; j < verdicts.size(); ++j) {
        const double t = 0.2 * static_cast<double>(j + 1);
        EXPECT_NEAR(verdicts[j].target, 16.0 * t, 0.15 * 16.0 * t) << verdicts[j].check;
    }
}

TEST(MomentBalance, DegenerateQIsMassIdentity) {
    Grid g(32, 10.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0).normalized(0.0);
    SimConfig cfg;
    cfg.k = 2;
    cfg.mu = 0;  // linearized diagnostic run
    cfg.n = 32;
    cfg.length = 10.0;
    cfg.dt = 0.02;
    cfg.T = 0.5;
    cfg.save_every = 5;
    auto verdicts = moment_balance_check(cfg, g, phi, Field::zero(g), 1, 2000, 515, 2);
    for (const auto& v : verdicts) {
        EXPECT_TRUE(v.pass) << v.check;
        EXPECT_NEAR(v.target, 1.0, 1e-9);  // drift with q = 1 is exactly hs^2
    }
}

TEST(ScalingStudy, MarginalMomentHasUnitSlope) {
    Grid g(32, 10.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0).normalized(0.0);
    ScalingStudyParams p;
    p.quantity = ScalingQuantity::marginal_hsigma;
    p.sigma = 0.0;
    p.n_traj = 600;
    p.n_steps = 16;
    p.threads = 2;
    p.seed = 9001;
    ScalingStudyResult r = lemma_scaling_study(g, phi, p);
    EXPECT_NEAR(r.slope.slope, 1.0, 0.05);
    EXPECT_LE(r.slope.lo, 1.0);
    EXPECT_GE(r.slope.hi, 1.0);

    p.horizons = {1.0, 2.0};
    EXPECT_THROW(lemma_scaling_study(g, phi, p), std::invalid_argument);
}

TEST(ScalingStudy, SupMomentSlopeNearOne) {
    Grid g(32, 10.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0).normalized(0.25);
    ScalingStudyParams p;
    p.quantity = ScalingQuantity::sup_hsigma;
    p.sigma = 0.25;
    p.n_traj = 500;
    p.n_steps = 32;
    p.threads = 2;
    p.seed = 7007;
    ScalingStudyResult r = lemma_scaling_study(g, phi, p);
    EXPECT_GE(r.slope.slope, 0.85);
    EXPECT_LE(r.slope.slope, 1.15);
    // Nondecreasing means in T.
    for (size_t h = 1; h < r.means.size(); ++h) EXPECT_GE(r.means[h], r.means[h - 1]);
}

TEST(ScalingStudy, XkEnvelopeRatioBounded) {
    Grid g(32, 10.0);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0).normalized(1.1);
    ScalingStudyParams p;
    p.quantity = ScalingQuantity::xk;
    p.k = 2;
    p.horizons = {0.25, 0.5, 1.0, 2.0, 4.0};
    p.n_traj = 120;
    p.n_steps = 32;
    p.threads = 2;
    p.seed = 606;
    ScalingStudyResult r = lemma_scaling_study(g, phi, p);
    ASSERT_EQ(r.envelope_ratio.size(), 5u);
    for (double ratio : r.envelope_ratio) EXPECT_GT(ratio, 0.0);
    EXPECT_GT(r.ratio_spread, 1.0);
}

TEST(PicardStudy, SmallDataContracts) {
    Grid g(64, 20.0);
    CovarianceOperator phi =
        CovarianceOperator::power_law(g, 1.0, 2.0).normalized(1.1).scaled(1e-4);
    Field u0 = initial_data({.kind = InitialDataSpec::Kind::gaussian,
                             .amplitude = 1.0,
                             .width = 2.0,
                             .normalize = true,
                             .norm_sigma = 0.25,
                             .norm_value = 0.1},
                            g, 2, 1);
    PicardStudyParams p;
    p.k = 2;
    p.t_max = 8.0;
    p.n_steps_max = 512;
    p.n_traj = 6;
    p.threads = 2;
    p.seed = 1717;
    PicardStudyResult r = picard_contraction_study(g, phi, u0, p);
    EXPECT_DOUBLE_EQ(r.contraction_fraction, 1.0);
    EXPECT_GE(r.median_mismatch_ratio, 1.4);
    for (const auto& rep : r.per_traj) {
        EXPECT_TRUE(rep.converged);
        EXPECT_GT(rep.t_star, 0.0);
        EXPECT_GT(rep.radius, 0.0);
    }
}
