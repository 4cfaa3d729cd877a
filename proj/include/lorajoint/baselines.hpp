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

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "lorajoint/assignment.hpp"
#include "lorajoint/core_model.hpp"

namespace lorajoint {

namespace detail {

/// min(count, N) distinct device indices drawn uniformly, in draw order.
inline std::vector<std::size_t> draw_devices(std::size_t num_devices, std::size_t count, std::mt19937_64& gen)
{
    std::vector<std::size_t> idx(num_devices);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t k = std::min(count, num_devices);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, num_devices - 1);
        std::swap(idx[i], idx[pick(gen)]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace detail

/// SF whose ring (l_{m-1}, l_m] holds distance r. Distances past the last
/// radius fall back to the largest SF.
inline int distance_sf(double r, const Deployment& dep)
{
    for (int m = kMinSf; m <= kMaxSf; ++m) {
        if (r <= dep.sf(m).coverage_m)
            return m;
    }
    return kMaxSf;
}

/// Picks `count` devices at random and gives each a uniformly random SF,
/// ignoring quotas and coverage. Power stays at P_max.
inline Assignment random_allocation(const Deployment& dep, std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    Assignment a(dep.size(), kUnlimitedQuotas);
    std::uniform_int_distribution<int> sf_pick(kMinSf, kMaxSf);
    for (std::size_t n : detail::draw_devices(dep.size(), count, gen))
        a.assign(n, sf_pick(gen));
    return a;
}

/// Picks `count` devices at random and gives each the SF of its distance
/// ring.
inline Assignment distance_allocation(const Deployment& dep, std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    Assignment a(dep.size(), kUnlimitedQuotas);
    for (std::size_t n : detail::draw_devices(dep.size(), count, gen))
        a.assign(n, distance_sf(dep.distance(n), dep));
    return a;
}

}  // namespace lorajoint
