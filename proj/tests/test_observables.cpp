#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sgkdv/dynamics.hpp"
#include "sgkdv/initial_data.hpp"
#include "sgkdv/noise.hpp"
#include "sgkdv/observables.hpp"
#include "testing_util.hpp"

using namespace sgkdv;
using sgkdv::testutil::random_field;
using sgkdv::testutil::sampled_fn;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> lattice(double T, int n_steps) {
    std::vector<double> t(static_cast<size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i) t[static_cast<size_t>(i)] = T * i / n_steps;
    return t;
}
}  // namespace

TEST(Mass, ValuesAndAiryInvariance) {
    Grid g(64, 2.0 * kPi);
    EXPECT_DOUBLE_EQ(mass(Field::zero(g)), 0.0);
    const double xi1 = g.xi(1);
    Field f = sampled_fn(g, [xi1](double x) { return std::sin(xi1 * x); });
    EXPECT_NEAR(mass(f), kPi, 1e-12);
    Field sf = apply_multiplier(f, airy_multiplier(g, 0.9));
    EXPECT_NEAR(mass(sf), mass(f), 1e-12 * mass(f));
}

TEST(Hamiltonian, SineClosedForm) {
    Grid g(64, 2.0 * kPi);
    EXPECT_DOUBLE_EQ(hamiltonian(Field::zero(g), 2), 0.0);
    const double xi1 = g.xi(1);  // = 1
    Field f = sampled_fn(g, [xi1](double x) { return std::sin(xi1 * x); });
    // 1/2 pi xi1^2 - (1/12) * (3 pi / 4), with int sin^4 = 3 pi/4 as oracle.
    const double expect = 0.5 * kPi * xi1 * xi1 - (3.0 * kPi / 4.0) / 12.0;
    EXPECT_NEAR(hamiltonian(f, 2), expect, 1e-12);
}

TEST(Hamiltonian, DeterministicDriftSmall) {
    Grid g(256, 100.0);
    Field u0 = initial_data({.kind = InitialDataSpec::Kind::soliton, .speed = 1.0}, g, 2, 1);
    SimConfig cfg;
    cfg.k = 2;
    cfg.n = 256;
    cfg.length = 100.0;
    cfg.dt = 5e-4;
    cfg.T = 0.1;
    cfg.save_every = 200;
    RngStream rng(0, 0);
    Trajectory tr = integrate(cfg, g, CovarianceOperator::zero(g), u0, rng);
    const double h0 = hamiltonian(tr.snapshots.front(), 2);
    const double h1 = hamiltonian(tr.snapshots.back(), 2);
    EXPECT_LE(std::abs(h1 - h0) / std::abs(h0), 1e-6);
}

TEST(HamiltonianItoDrift, ClosedFormLimits) {
    Grid g(16, 7.0);
    RngStream rng(1, 2);
    Field u = random_field(g, rng);
    EXPECT_DOUBLE_EQ(hamiltonian_ito_drift(u, CovarianceOperator::zero(g), 2), 0.0);

    CovarianceOperator phi = CovarianceOperator::power_law(g, 0.8, 1.0);
    double sum = 0.0;
    for (int s = 0; s < g.size(); ++s) {
        const double p = phi.profile_at_slot(s);
        sum += p * p * g.xi(s) * g.xi(s);
    }
    EXPECT_NEAR(hamiltonian_ito_drift(Field::zero(g), phi, 2), 0.5 * sum, 1e-13 * (1.0 + sum));
}

TEST(HamiltonianItoDrift, BasisOracleOnTinyGrid) {
    Grid g(8, 5.0);
    RngStream rng(3, 4);
    for (int k : {2, 3}) {
        for (int rep = 0; rep < 3; ++rep) {
            Field u = random_field(g, rng, 0.3);
            CovarianceOperator phi = CovarianceOperator::power_law(g, 1.1, 1.0);
            const double closed = hamiltonian_ito_drift(u, phi, k);
            const double brute = hamiltonian_ito_drift_basis(u, phi, k);
            EXPECT_NEAR(closed, brute, 1e-12 * (1.0 + std::abs(brute)));
        }
    }
}

TEST(MassMomentDrift, ReductionsAndOracle) {
    Grid g(8, 5.0);
    RngStream rng(9, 9);
    Field u = random_field(g, rng);
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 1.0);

    const double hs0 = phi.hs_norm(0.0);
    EXPECT_NEAR(mass_moment_drift(u, phi, 1), hs0 * hs0, 1e-13 * hs0 * hs0);
    EXPECT_DOUBLE_EQ(mass_moment_drift(Field::zero(g), phi, 2), 0.0);
    EXPECT_THROW(mass_moment_drift(u, phi, 0), std::invalid_argument);

    for (int rep = 0; rep < 5; ++rep) {
        Field w = random_field(g, rng, 0.2);
        const double reduced = mass_cross_term(w, phi);
        const double brute = mass_cross_term_basis(w, phi);
        EXPECT_NEAR(reduced, brute, 1e-12 * (1.0 + brute));
    }
}

TEST(MixedNorm, SeparableAndDegenerateCases) {
    Grid g(64, 2.0 * kPi);
    const double xi1 = g.xi(1);
    Field f = sampled_fn(g, [xi1](double x) { return std::sin(xi1 * x); });
    const double T = 2.0;
    const int n_steps = 32;
    std::vector<Field> frames(static_cast<size_t>(n_steps) + 1, f);
    std::vector<double> t = lattice(T, n_steps);
    TrajectoryView tr = make_view(g, t, frames);

    // Constant-in-time: L^inf_x(L^2_t) = ||f||_inf sqrt(T), trapezoid exact.
    const double inf = std::numeric_limits<double>::infinity();
    const double got = mixed_norm(tr, {inf, 2.0, MixedNormSpec::Op::none, 0.0});
    EXPECT_NEAR(got, lp_norm(f, inf) * std::sqrt(T), 1e-12);

    std::vector<Field> zeros(5, Field::zero(g));
    std::vector<double> tz = lattice(1.0, 4);
    EXPECT_DOUBLE_EQ(mixed_norm(make_view(g, tz, zeros), {4.0, 2.0, MixedNormSpec::Op::none, 0.0}),
                     0.0);

    // Single snapshot: the temporal integral degenerates to zero measure.
    std::vector<Field> one(1, f);
    std::vector<double> t1{0.0};
    EXPECT_DOUBLE_EQ(mixed_norm(make_view(g, t1, one), {2.0, 2.0, MixedNormSpec::Op::none, 0.0}),
                     0.0);

    EXPECT_THROW(mixed_norm(tr, {0.5, 2.0, MixedNormSpec::Op::none, 0.0}), std::invalid_argument);
}

TEST(MixedNorm, TrapezoidRefinementOrder) {
    Grid g(64, 2.0 * kPi);
    const double xi1 = g.xi(1);
    Field base = sampled_fn(g, [xi1](double x) { return std::sin(xi1 * x); });
    const double T = 1.0;
    // u(x, t) = sin(xi1 x) sin(t): L^2_x(L^2_t) norm = sqrt(pi * int_0^T sin^2).
    const double analytic = std::sqrt(kPi * (0.5 * T - 0.25 * std::sin(2.0 * T)));
    double err[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
        const int n_steps = lvl == 0 ? 16 : 32;
        std::vector<double> t = lattice(T, n_steps);
        std::vector<Field> frames;
        frames.reserve(t.size());
        for (double ti : t) {
            SpectralData c(base.packed().begin(), base.packed().end());
            for (auto& z : c) z *= std::sin(ti);
            frames.push_back(Field::from_packed(g, std::move(c)));
        }
        const double got =
            mixed_norm(make_view(g, t, frames), {2.0, 2.0, MixedNormSpec::Op::none, 0.0});
        err[lvl] = std::abs(got - analytic);
    }
    const double order = std::log2(err[0] / err[1]);
    EXPECT_GE(order, 1.6);
    EXPECT_LE(order, 2.4);
}

TEST(XkNorm, ZeroExponentTableHomogeneityTriangle) {
    Grid g(64, 20.0);
    ExistenceConstants consts;

    std::vector<Field> zeros(9, Field::zero(g));
    std::vector<double> tz = lattice(1.0, 8);
    XkNormResult z2 = xk_norm(make_view(g, tz, zeros), 2, consts);
    EXPECT_DOUBLE_EQ(z2.value, 0.0);
    for (const auto& c : z2.components) EXPECT_DOUBLE_EQ(c.value, 0.0);

    // Exponent table straight from the norm definitions.
    EXPECT_DOUBLE_EQ(z2.info("mu2").q_x, 20.0);
    EXPECT_DOUBLE_EQ(z2.info("mu2").p_t, 2.5);
    XkNormResult z3 = xk_norm(make_view(g, tz, zeros), 3, consts);
    EXPECT_NEAR(z3.info("nu3").q_x, 60.0 / 13.0, 1e-15);
    EXPECT_DOUBLE_EQ(z3.info("nu3").p_t, 15.0);
    EXPECT_NEAR(z3.info("nu4").q_x, 10.0 / 3.0, 1e-15);
    EXPECT_NEAR(z3.info("nu4").p_t, 30.0 / 7.0, 1e-15);

    // 1-homogeneity and component-wise triangle inequality.
    RngStream rng(42, 0);
    const int n_steps = 8;
    std::vector<double> t = lattice(0.5, n_steps);
    std::vector<Field> a, b, apb, a2;
    for (int i = 0; i <= n_steps; ++i) {
        Field fa = random_field(g, rng);
        Field fb = random_field(g, rng);
        SpectralData cs(fa.packed().begin(), fa.packed().end());
        SpectralData cd(fa.packed().begin(), fa.packed().end());
        for (size_t j = 0; j < cs.size(); ++j) {
            cd[j] = 2.0 * cs[j];
            cs[j] += fb.packed()[j];
        }
        a.push_back(fa);
        b.push_back(fb);
        apb.push_back(Field::from_packed(g, std::move(cs)));
        a2.push_back(Field::from_packed(g, std::move(cd)));
    }
    for (int k : {2, 3}) {
        XkNormResult na = xk_norm(make_view(g, t, a), k, consts);
        XkNormResult nb = xk_norm(make_view(g, t, b), k, consts);
        XkNormResult nab = xk_norm(make_view(g, t, apb), k, consts);
        XkNormResult naa = xk_norm(make_view(g, t, a2), k, consts);
        for (size_t c = 0; c < na.components.size(); ++c) {
            EXPECT_NEAR(naa.components[c].value, 2.0 * na.components[c].value,
                        1e-10 * (1.0 + na.components[c].value));
            EXPECT_LE(nab.components[c].value,
                      na.components[c].value + nb.components[c].value + 1e-10);
        }
    }
}

TEST(LocalRadius, ReductionsAndWindowMonotonicity) {
    Grid g(64, 20.0);
    ExistenceConstants consts;
    consts.c_k = 1.7;

    std::vector<Field> zeros(9, Field::zero(g));
    std::vector<double> tz = lattice(1.0, 8);
    TrajectoryView zv = make_view(g, tz, zeros);
    EXPECT_DOUBLE_EQ(local_radius(Field::zero(g), zv, 2, consts), 0.0);

    RngStream rng(17, 17);
    Field u0 = random_field(g, rng);
    EXPECT_NEAR(local_radius(u0, zv, 2, consts), 2.0 * consts.c_k * sobolev_norm(u0, 0.25),
                1e-12);
    EXPECT_NEAR(local_radius(u0, zv, 3, consts),
                2.0 * consts.c_k * sobolev_norm(u0, 1.0 / 12.0), 1e-12);

    // Monotonicity of the k = 2 norm in the window length (prefix lattices).
    CovarianceOperator phi = CovarianceOperator::power_law(g, 1.0, 2.0);
    RngStream prng(23, 5);
    auto path = convolution_path(phi, 1.0, 16, prng);
    std::vector<double> t = lattice(1.0, 16);
    double prev = 0.0;
    for (size_t len : {5u, 9u, 17u}) {
        TrajectoryView v = make_view(g, std::span(t).first(len), std::span(path).first(len));
        const double r = local_radius(u0, v, 2, consts);
        EXPECT_GE(r, prev - 1e-12);
        prev = r;
    }
}

TEST(LocalTime, HandValuesAndMonotonicity) {
    ExistenceConstants consts;  // all ones
    EXPECT_NEAR(local_time(1.0, 2, consts), 1.0 / 16.0, 1e-15);
    EXPECT_THROW(local_time(0.0, 2, consts), std::invalid_argument);

    double prev = std::numeric_limits<double>::infinity();
    for (double R : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double t2 = local_time(R, 2, consts);
        EXPECT_LT(t2, prev);
        prev = t2;
    }

    // Larger constants shrink the window.
    ExistenceConstants big = consts;
    big.c_tilde = 3.0;
    big.c_bar = 3.0;
    EXPECT_LT(local_time(1.0, 2, big), local_time(1.0, 2, consts));
    EXPECT_LT(local_time(1.0, 3, big), local_time(1.0, 3, consts));

    // k = 3: returned T sits on the constraint boundary within 1e-10 slack.
    for (double R : {0.3, 1.0, 2.5}) {
        const double T3 = local_time(R, 3, consts);
        const double common = std::pow(T3, 1.0 / 18.0) * std::pow(1.0 + T3, consts.rho);
        const double cons = std::max(2.0 * consts.c_tilde * common * R * R * R,
                                     4.0 * consts.c_bar * common * R * R);
        EXPECT_LE(cons, 1.0 + 1e-10);
        EXPECT_GE(cons, 1.0 - 1e-9);
    }
}
