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

#include <array>

#include <gtest/gtest.h>

#include "lorajoint/baselines.hpp"
#include "lorajoint/harness.hpp"

namespace lj = lorajoint;

namespace {
const lj::ChannelParams kChannel{};
}

TEST(DistanceSf, RingBoundaries)
{
    const lj::Deployment dep({1.0}, kChannel);
    EXPECT_EQ(lj::distance_sf(100.0, dep), 7);
    EXPECT_EQ(lj::distance_sf(900.0, dep), 12);
    const double l9 = dep.sf(9).coverage_m;
    EXPECT_EQ(lj::distance_sf(l9, dep), 9);
    EXPECT_EQ(lj::distance_sf(std::nextafter(l9, 2000.0), dep), 10);
    EXPECT_EQ(lj::distance_sf(5000.0, dep), 12);
}

TEST(DistanceAllocation, AssignsRingSfs)
{
    const lj::Deployment dep({100.0, 900.0, 500.0}, kChannel);
    const auto a = lj::distance_allocation(dep, 3, 1);
    EXPECT_EQ(a.sf_of(0), 7);
    EXPECT_EQ(a.sf_of(1), 12);
    EXPECT_EQ(a.sf_of(2), 8);
}

TEST(Baselines, AssignMinOfCountAndN)
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto dep = lj::sample_deployment(2 + s % 12, kChannel, s);
        for (std::size_t count : {2u, 6u, 8u}) {
            const std::size_t expect = std::min(count, dep.size());
            EXPECT_EQ(lj::random_allocation(dep, count, s).num_assigned(), expect);
            EXPECT_EQ(lj::distance_allocation(dep, count, s).num_assigned(), expect);
        }
    }
}

TEST(Baselines, DeterministicPerSeed)
{
    const auto dep = lj::sample_deployment(12, kChannel, 3);
    EXPECT_EQ(lj::random_allocation(dep, 6, 42), lj::random_allocation(dep, 6, 42));
    EXPECT_EQ(lj::distance_allocation(dep, 6, 42), lj::distance_allocation(dep, 6, 42));
    EXPECT_NE(lj::random_allocation(dep, 6, 42), lj::random_allocation(dep, 6, 43));
}

TEST(RandomAllocation, SfDrawsAreUniform)
{
    // Chi-square goodness of fit over 6 SFs; 5 degrees of freedom, 99.9% point 20.52.
    const lj::Deployment dep(std::vector<double>(6, 300.0), kChannel);
    std::array<double, lj::kNumSf> counts{};
    const int draws = 3000;
    for (int s = 0; s < draws; ++s) {
        const auto a = lj::random_allocation(dep, 6, static_cast<std::uint64_t>(s));
        for (std::size_t n = 0; n < 6; ++n)
            counts[lj::sf_index(*a.sf_of(n))] += 1.0;
    }
    const double expected = draws * 6.0 / lj::kNumSf;
    double chi2 = 0.0;
    for (double c : counts)
        chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 20.52);
}
