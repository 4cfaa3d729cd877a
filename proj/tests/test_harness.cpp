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
#include <vector>

#include <gtest/gtest.h>

#include "lorajoint/harness.hpp"

namespace lj = lorajoint;

namespace {
const lj::ChannelParams kChannel{};
}

TEST(SampleDeployment, UniformOverDisk)
{
    double sum = 0.0, sum2 = 0.0;
    std::size_t count = 0;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const auto dep = lj::sample_deployment(10, kChannel, s);
        for (double r : dep.distances()) {
            EXPECT_GT(r, 0.0);
            EXPECT_LE(r, kChannel.cell_radius_m);
            sum += r;
            sum2 += r * r;
            ++count;
        }
    }
    const double mean = sum / count;
    const double sd = std::sqrt(sum2 / count - mean * mean);
    EXPECT_NEAR(mean, 2000.0 / 3.0, 3.0 * sd / std::sqrt(static_cast<double>(count)));
}

TEST(SampleDeployment, SeedDeterminismAndPrecondition)
{
    EXPECT_EQ(lj::sample_deployment(5, kChannel, 9).distances(), lj::sample_deployment(5, kChannel, 9).distances());
    EXPECT_NE(lj::sample_deployment(5, kChannel, 9).distances(), lj::sample_deployment(5, kChannel, 10).distances());
    EXPECT_THROW(lj::sample_deployment(1, kChannel, 1), lj::DomainError);
}

TEST(Jain, KnownValues)
{
    const std::vector<double> equal{4.0, 4.0, 4.0, 4.0};
    EXPECT_DOUBLE_EQ(lj::jain_index(equal).value, 1.0);
    const std::vector<double> one{0.0, 0.0, 7.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(lj::jain_index(one).value, 1.0 / 5.0);
    const std::vector<double> ramp{1.0, 2.0, 3.0};
    EXPECT_DOUBLE_EQ(lj::jain_index(ramp).value, 36.0 / 42.0);
    EXPECT_NEAR(lj::jain_index(ramp).value, 6.0 / 7.0, 1e-15);
}

TEST(Jain, UndefinedAndInvalidInputs)
{
    const std::vector<double> zeros{0.0, 0.0};
    const auto j = lj::jain_index(zeros);
    EXPECT_TRUE(j.undefined);
    EXPECT_EQ(j.value, 0.0);
    EXPECT_THROW(lj::jain_index(std::vector<double>{}), lj::DomainError);
    EXPECT_THROW(lj::jain_index(std::vector<double>{1.0, -1.0}), lj::DomainError);
}

TEST(RunTrial, RandomBaselineMatchesDirectEvaluation)
{
    lj::ExperimentSpec spec;
    spec.quotas = lj::Quotas{1, 1, 1, 1, 1, 1};
    const std::uint64_t seed = 77;
    const auto t = lj::run_trial(spec, lj::Scheme::conv_random, 2, seed);
    const auto dep = lj::sample_deployment(2, kChannel, seed);
    const auto a = lj::random_allocation(dep, 2, seed ^ 0x9e3779b97f4a7c15ULL);
    const auto p = lj::PowerVector::uniform_max(dep);
    const double r0 = lj::short_term_rate(0, *a.sf_of(0), a, p, dep);
    const double r1 = lj::short_term_rate(1, *a.sf_of(1), a, p, dep);
    EXPECT_DOUBLE_EQ(t.min_rate, std::min(r0, r1));
    EXPECT_DOUBLE_EQ(t.mean_rate, 0.5 * (r0 + r1));
    EXPECT_DOUBLE_EQ(t.jain, (r0 + r1) * (r0 + r1) / (2.0 * (r0 * r0 + r1 * r1)));
    EXPECT_DOUBLE_EQ(t.mean_power, dep.p_max_mw());
    EXPECT_EQ(t.n_assigned, 2u);
}

// A stable matching is not max-min optimal, so a lucky random draw can beat
// it on a single deployment; on average it should not.
TEST(RunTrial, MatchingBeatsRandomOnAverage)
{
    lj::ExperimentSpec spec;
    for (std::size_t n : {2u, 6u}) {
        double prop = 0.0, rnd = 0.0;
        int wins = 0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const double a = lj::run_trial(spec, lj::Scheme::prop_sf, n, s).min_rate;
            const double b = lj::run_trial(spec, lj::Scheme::conv_random, n, s).min_rate;
            prop += a;
            rnd += b;
            wins += a >= b ? 1 : 0;
        }
        EXPECT_GT(prop, rnd) << "N = " << n;
        EXPECT_GE(wins, 150) << "N = " << n;
    }
}

TEST(RunTrial, PerTrialInvariants)
{
    lj::ExperimentSpec spec;
    spec.quotas = lj::Quotas{3, 1, 1, 1, 1, 1};
    for (lj::Scheme scheme : lj::kAllSchemes) {
        for (std::uint64_t s = 0; s < 20; ++s) {
            const std::size_t n = 2 + s % 9;
            const auto t = lj::run_trial(spec, scheme, n, s);
            const auto again = lj::run_trial(spec, scheme, n, s);
            EXPECT_EQ(t.min_rate, again.min_rate);
            EXPECT_EQ(t.mean_power, again.mean_power);
            EXPECT_LE(t.min_rate, t.mean_rate + 1e-12);
            EXPECT_LE(t.mean_power, kChannel.p_max_mw() + 1e-12);
            if (!lj::uses_power_control(scheme)) {
                EXPECT_DOUBLE_EQ(t.mean_power, kChannel.p_max_mw());
            }
            if (!t.jain_undefined) {
                EXPECT_LE(t.jain, 1.0 + 1e-12);
                EXPECT_GE(t.jain, 1.0 / static_cast<double>(t.n_assigned) - 1e-12);
            }
        }
    }
}

TEST(Summaries, MeanAndConfidenceInterval)
{
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto s = lj::summarize(xs);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.ci95, 1.96 * std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
    const std::vector<double> single{5.0};
    EXPECT_EQ(lj::summarize(single).ci95, 0.0);
}

TEST(Sweep, SingleTrialEqualsTrialMetrics)
{
    lj::ExperimentSpec spec;
    spec.trials = 1;
    spec.n_values = {5};
    spec.schemes = {lj::Scheme::prop_sf};
    const auto recs = lj::sweep(spec);
    ASSERT_EQ(recs.size(), 1u);
    const auto t = lj::run_trial(spec, lj::Scheme::prop_sf, 5, lj::trial_seed(spec.seed, 5, 0));
    EXPECT_EQ(recs[0].metric("min_rate").mean, t.min_rate);
    EXPECT_EQ(recs[0].metric("jain").mean, t.jain);
    EXPECT_EQ(recs[0].metric("min_rate").ci95, 0.0);
}

TEST(Sweep, CiShrinksWithTrials)
{
    lj::ExperimentSpec spec;
    spec.n_values = {6};
    spec.schemes = {lj::Scheme::prop_sf};
    spec.trials = 400;
    const double w1 = lj::sweep(spec)[0].metric("mean_rate").ci95;
    spec.trials = 800;
    const double w2 = lj::sweep(spec)[0].metric("mean_rate").ci95;
    EXPECT_NEAR(w1 / w2, std::sqrt(2.0), 0.25);
}

TEST(Sweep, WorkerCountDoesNotChangeResults)
{
    lj::ExperimentSpec spec;
    spec.n_values = {3, 7};
    spec.trials = 30;
    spec.schemes = {lj::Scheme::prop_sf_linear, lj::Scheme::conv_distance};
    const auto a = lj::sweep(spec, 1);
    const auto b = lj::sweep(spec, 4);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k = 0; k < lj::kMetricNames.size(); ++k) {
            EXPECT_EQ(a[i].metrics[k].mean, b[i].metrics[k].mean);
            EXPECT_EQ(a[i].metrics[k].ci95, b[i].metrics[k].ci95);
        }
    }
}

TEST(Schemes, NamesRoundTrip)
{
    for (lj::Scheme s : lj::kAllSchemes)
        EXPECT_EQ(lj::parse_scheme(lj::scheme_name(s)), s);
    EXPECT_FALSE(lj::parse_scheme("nope").has_value());
}

TEST(QuotaStudy, SingleDeviceCellsAndMonotoneRows)
{
    lj::QuotaStudyOptions opt;
    opt.trials = 1000;
    opt.max_quota = 3;
    const auto study = lj::quota_study(kChannel, opt);
    ASSERT_EQ(study.cells.size(), 3u);
    const double sf7_single = study.cells[0][0];
    EXPECT_GT(sf7_single, 482.0);
    EXPECT_LT(sf7_single, 48200.0);
    for (std::size_t m = 0; m < lj::kNumSf; ++m) {
        EXPECT_GT(study.cells[0][m], study.cells[1][m]);
        EXPECT_GT(study.cells[1][m], study.cells[2][m]);
    }
    EXPECT_THROW(lj::quota_study(kChannel, lj::QuotaStudyOptions{.trials = 10}), lj::DomainError);
}
