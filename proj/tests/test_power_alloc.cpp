/*
 * Copyright 2026 The lorajoint Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lorajoint/harness.hpp"
#include "lorajoint/power_alloc.hpp"

namespace lj = lorajoint;

namespace {

const lj::ChannelParams kChannel{};

lj::Assignment single(int m)
{
    lj::Assignment a(1, lj::uniform_quotas(1));
    a.assign(0, m);
    return a;
}

lj::FeasibilityResult verdict(bool ok)
{
    lj::FeasibilityResult r;
    r.status = ok ? lj::FeasibilityStatus::feasible : lj::FeasibilityStatus::infeasible;
    return r;
}

}  // namespace

TEST(LinearSystem, SingleDeviceAtFullBitrateIsInfeasible)
{
    const lj::Deployment dep({500.0}, kChannel);
    const auto a = single(8);
    const auto sys = lj::build_linear_system(a, dep, dep.sf(8).bitrate_bps);
    ASSERT_EQ(sys.rows.size(), 1u);
    EXPECT_DOUBLE_EQ(sys.rows[0].linear[0], 0.0);
    EXPECT_NEAR(sys.rows[0].constant, std::pow(10.0, -0.9) * dep.noise_power_term(0), 1e-18);
    EXPECT_FALSE(lj::solve(sys).feasible());
}

// With no interferers the row is exact: satisfied iff the closed-form rate reaches eta.
TEST(LinearSystem, SoleDeviceRowIsExact)
{
    const lj::Deployment dep({500.0}, kChannel);
    const double rate_cap = dep.sf(8).bitrate_bps;
    for (double eta : {1e-9, 1.0, 100.0, 2000.0, 3000.0}) {
        const auto sys = lj::build_linear_system(single(8), dep, eta);
        for (double p : {lj::kPowerFloorMw, 1e-3, 0.01, 0.1, 1.0, dep.p_max_mw()}) {
            const double rate = rate_cap * std::exp(-std::pow(10.0, -0.9) * dep.noise_power_term(0) / p);
            EXPECT_EQ(sys.rows[0].evaluate(std::vector<double>{p}) <= 0.0, rate >= eta) << eta << " " << p;
        }
    }
}

TEST(LinearSystem, RowsMatchExpansionCoefficients)
{
    const lj::Deployment dep({200.0, 300.0, 700.0}, kChannel);
    lj::Assignment a(3, lj::Quotas{3, 1, 1, 1, 1, 1});
    a.assign(0, 7);
    a.assign(1, 7);
    a.assign(2, 11);
    const double eta = 50.0;
    const auto sys = lj::build_linear_system(a, dep, eta);
    ASSERT_EQ(sys.rows.size(), 3u);
    const double co = std::pow(10.0, 0.6);
    const double shift = std::numbers::ln2 - 0.5;
    // Device 0 shares SF7: two interferers.
    EXPECT_NEAR(sys.rows[0].linear[0], std::log(eta / 5468.75) + 2.0 * shift, 1e-12);
    EXPECT_NEAR(sys.rows[0].linear[1], 0.5 * co * std::pow(200.0 / 300.0, 4), 1e-12);
    EXPECT_NEAR(sys.rows[0].linear[2], 0.5 * co * std::pow(200.0 / 700.0, 4), 1e-12);
    // Device 2 is alone on SF11.
    const double th11 = std::pow(10.0, -1.8);
    EXPECT_NEAR(sys.rows[2].linear[2], std::log(eta / dep.sf(11).bitrate_bps), 1e-12);
    EXPECT_NEAR(sys.rows[2].linear[0], th11 * std::pow(700.0 / 200.0, 4), 1e-9);
    EXPECT_NEAR(sys.rows[2].constant, th11 * dep.noise_power_term(2), 1e-18);
}

TEST(QuadraticSystem, SingleDeviceAtFullBitrateIsInfeasible)
{
    const lj::Deployment dep({500.0}, kChannel);
    const auto sys = lj::build_quadratic_system(single(8), dep, dep.sf(8).bitrate_bps);
    EXPECT_DOUBLE_EQ(sys.rows[0].quadratic[0], 0.0);
    EXPECT_GT(sys.rows[0].linear[0], 0.0);
    EXPECT_FALSE(lj::solve(sys).feasible());
}

TEST(QuadraticSystem, DroppingSquaredTermsRecoversLinearRows)
{
    const lj::Deployment dep({200.0, 450.0, 800.0}, kChannel);
    lj::Assignment a(3, lj::uniform_quotas(1));
    a.assign(0, 7);
    a.assign(1, 9);
    a.assign(2, 12);
    const double eta = 80.0;
    const auto lin = lj::build_linear_system(a, dep, eta);
    const auto quad = lj::build_quadratic_system(a, dep, eta, lj::default_thresholds(), false);
    ASSERT_TRUE(quad.domain.empty());
    for (std::size_t v = 0; v < 3; ++v) {
        // Quadratic row / p_v without the -theta^2 ratio^2 p_u^2 / 2 terms.
        EXPECT_NEAR(quad.rows[v].linear[v], lin.rows[v].constant, 1e-18);
        for (std::size_t u = 0; u < 3; ++u) {
            const double q = quad.rows[v].quadratic[v * 3 + u] + (u == v ? 0.0 : quad.rows[v].quadratic[u * 3 + v]);
            EXPECT_NEAR(q, lin.rows[v].linear[u], 1e-12 * std::max(1.0, std::abs(q)));
        }
    }
}

TEST(QuadraticSystem, SharedSfShiftAndCoefficients)
{
    const lj::Deployment dep({300.0, 300.0}, kChannel);
    lj::Assignment a(2, lj::uniform_quotas(2));
    a.assign(0, 7);
    a.assign(1, 7);
    const double eta = 100.0;
    const auto lin = lj::build_linear_system(a, dep, eta);
    const auto quad = lj::build_quadratic_system(a, dep, eta);
    const double co = std::pow(10.0, 0.6);
    EXPECT_NEAR(quad.rows[0].quadratic[0] - lin.rows[0].linear[0], -1.0 / 8.0, 1e-12);
    EXPECT_NEAR(quad.rows[0].quadratic[1], 0.75 * co, 1e-12);
    EXPECT_NEAR(quad.rows[0].quadratic[3], -co * co / 8.0, 1e-12);
    // Symmetric instance: rows mirror under index exchange.
    EXPECT_DOUBLE_EQ(quad.rows[0].quadratic[0], quad.rows[1].quadratic[3]);
    EXPECT_DOUBLE_EQ(quad.rows[0].quadratic[1], quad.rows[1].quadratic[2]);
    EXPECT_DOUBLE_EQ(quad.rows[0].quadratic[3], quad.rows[1].quadratic[0]);
    EXPECT_DOUBLE_EQ(quad.rows[0].linear[0], quad.rows[1].linear[1]);
    ASSERT_EQ(quad.domain.size(), 2u);
    EXPECT_NEAR(quad.domain[0].linear[1], co, 1e-12);
    EXPECT_NEAR(quad.domain[0].linear[0], -lj::kSharedExpansionLimit, 1e-12);
}

TEST(BisectRate, SyntheticOracleContract)
{
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const double cap = 10.0 + 6000.0 * u(gen);
        const double star = cap * u(gen);
        const double eps = 0.01 + 4.0 * u(gen);
        const auto res = lj::bisect_rate(0.0, cap, eps, [&](double eta) { return verdict(eta <= star); });
        EXPECT_GE(res.eta, star - eps);
        EXPECT_LE(res.eta, star);
        EXPECT_EQ(res.iterations, static_cast<std::size_t>(std::ceil(std::log2(cap / eps))));
        EXPECT_EQ(res.iterations, lj::expected_bisection_iterations(cap, eps));
    }
}

TEST(BisectRate, NeverFeasibleAndFailures)
{
    const auto none = lj::bisect_rate(0.0, 100.0, 1.0, [](double) { return verdict(false); });
    EXPECT_EQ(none.status, lj::BisectionStatus::no_feasible_target);
    EXPECT_EQ(none.eta, 0.0);
    const auto fail = lj::bisect_rate(0.0, 100.0, 1.0, [](double) {
        lj::FeasibilityResult r;
        r.status = lj::FeasibilityStatus::numerical_failure;
        return r;
    });
    EXPECT_EQ(fail.status, lj::BisectionStatus::solver_failure);
    EXPECT_THROW(lj::bisect_rate(0.0, 1.0, 0.0, [](double) { return verdict(true); }), lj::DomainError);
}

TEST(BisectPower, EmptyAssignmentFallsBackToFullPower)
{
    const lj::Deployment dep({300.0, 600.0}, kChannel);
    const lj::Assignment a(2, lj::uniform_quotas(1));
    const auto res = lj::bisect_power(a, dep, lj::SystemKind::linear, 1.0);
    EXPECT_TRUE(res.fallback());
    EXPECT_EQ(res.status, lj::BisectionStatus::no_feasible_target);
    EXPECT_EQ(res.power.values(), lj::PowerVector::uniform_max(dep).values());
}

TEST(BisectPower, TwoDeviceNonInferiorityAndCertificate)
{
    int non_inferior = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto dep = lj::sample_deployment(2, kChannel, s);
        const auto a = lj::solve_sf_allocation(dep, lj::uniform_quotas(1));
        const auto pmax = lj::PowerVector::uniform_max(dep);
        const auto res = lj::bisect_power(a, dep, lj::SystemKind::linear, 1.0);
        ASSERT_FALSE(res.fallback());
        // Distinct SFs: x >= ln(1 + x) makes every row conservative, so the
        // certified target never exceeds the exact rate.
        EXPECT_GE(res.true_min_rate, res.eta * (1.0 - 1e-9)) << "seed " << s;
        non_inferior += res.true_min_rate >= lj::evaluate_true_min_rate(a, pmax, dep) * (1.0 - 1e-9) ? 1 : 0;
        EXPECT_NEAR(res.slack, res.eta - res.true_min_rate, 1e-9);
        std::vector<double> x;
        for (std::size_t n : a.assigned_devices()) {
            EXPECT_GE(res.power[n], lj::kPowerFloorMw);
            EXPECT_LE(res.power[n], dep.p_max_mw());
            x.push_back(res.power[n]);
        }
        const auto sys = lj::build_linear_system(a, dep, res.eta);
        EXPECT_LE(sys.max_violation(x), lj::kLinearTolerance);
    }
    // The approximation is a lower bound, so full power can win occasionally.
    EXPECT_GE(non_inferior, 45);
}

TEST(TrueMinRate, MatchesUtilitiesAndBitrateCap)
{
    const auto dep = lj::sample_deployment(9, kChannel, 21);
    const auto st = lj::match_sf(dep, lj::Quotas{3, 1, 1, 1, 1, 1});
    const auto pmax = lj::PowerVector::uniform_max(dep);
    double min_u = 1e300;
    for (std::size_t n : st.assignment.assigned_devices())
        min_u = std::min(min_u, lj::device_utility(n, st.assignment, pmax, dep));
    EXPECT_DOUBLE_EQ(lj::evaluate_true_min_rate(st.assignment, pmax, dep), min_u);
    EXPECT_LE(min_u, lj::occupied_rate_cap(st.assignment, dep));
}

TEST(TrueMinRate, SymmetricCoSfPair)
{
    const lj::Deployment dep({1.0, 1.0}, kChannel);
    lj::Assignment a(2, lj::uniform_quotas(2));
    a.assign(0, 7);
    a.assign(1, 7);
    EXPECT_NEAR(lj::evaluate_true_min_rate(a, lj::PowerVector::uniform_max(dep), dep),
                5468.75 / (1.0 + std::pow(10.0, 0.6)), 1e-3);
    EXPECT_EQ(lj::evaluate_true_min_rate(lj::Assignment(2, lj::uniform_quotas(1)), lj::PowerVector::uniform_max(dep),
                                         dep),
              0.0);
}

TEST(JointAllocate, SingleIterationAndPowerDisabled)
{
    const auto dep = lj::sample_deployment(7, kChannel, 5);
    const lj::Quotas q{3, 1, 1, 1, 1, 1};
    const auto one = lj::joint_allocate(dep, q);
    EXPECT_EQ(one.iterations, 1u);
    ASSERT_TRUE(one.allocation.has_value());

    lj::JointOptions off;
    off.optimize_power = false;
    const auto fixed = lj::joint_allocate(dep, q, off);
    EXPECT_EQ(fixed.assignment, lj::solve_sf_allocation(dep, q));
    EXPECT_EQ(fixed.power.values(), lj::PowerVector::uniform_max(dep).values());
    EXPECT_FALSE(fixed.allocation.has_value());

    EXPECT_THROW(lj::joint_allocate(dep, q, lj::JointOptions{.max_iterations = 0}), lj::DomainError);
}

TEST(JointAllocate, MoreIterationsNeverLowerObjective)
{
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto dep = lj::sample_deployment(6, kChannel, 100 + s);
        const auto q = lj::uniform_quotas(1);
        const auto one = lj::joint_allocate(dep, q);
        const auto three = lj::joint_allocate(dep, q, lj::JointOptions{.max_iterations = 3});
        EXPECT_GE(three.objective, one.objective);
        EXPECT_DOUBLE_EQ(three.objective, lj::evaluate_true_min_rate(three.assignment, three.power, dep));
    }
}
