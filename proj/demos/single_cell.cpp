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

// Allocates SFs and powers for one random cell and prints the outcome.
//
//   lorajoint_demo [N] [seed]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "lorajoint/lorajoint.hpp"

int main(int argc, char** argv)
{
    const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 8;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 7;
    if (n < 2) {
        std::fprintf(stderr, "N must be at least 2\n");
        return 2;
    }

    const lorajoint::ChannelParams channel;
    const auto dep = lorajoint::sample_deployment(n, channel, seed);
    const lorajoint::Quotas quotas{3, 1, 1, 1, 1, 1};

    lorajoint::JointOptions opt;
    opt.kind = lorajoint::SystemKind::linear;
    const auto res = lorajoint::joint_allocate(dep, quotas, opt);
    const auto full = lorajoint::PowerVector::uniform_max(dep);

    std::printf("%zu devices, seed %llu, %zu swaps during refinement\n\n", n,
                static_cast<unsigned long long>(seed), res.match.swap_count);
    std::printf("%6s %10s %4s %10s %14s %14s\n", "device", "dist_m", "SF", "power_dBm", "rate_pmax_bps",
                "rate_opt_bps");
    for (std::size_t i = 0; i < n; ++i) {
        const auto m = res.assignment.sf_of(i);
        if (!m) {
            std::printf("%6zu %10.1f %4s\n", i, dep.distance(i), "-");
            continue;
        }
        std::printf("%6zu %10.1f %4d %10.2f %14.2f %14.2f\n", i, dep.distance(i), *m,
                    lorajoint::mw_to_dbm(res.power[i]),
                    lorajoint::short_term_rate(i, *m, res.assignment, full, dep),
                    lorajoint::short_term_rate(i, *m, res.assignment, res.power, dep));
    }
    std::printf("\nmin rate at P_max:     %.2f bit/s\n", lorajoint::evaluate_true_min_rate(res.assignment, full, dep));
    std::printf("min rate at optimized: %.2f bit/s\n", res.objective);
    if (res.allocation)
        std::printf("mean power: %.2f%% of P_max\n",
                    100.0 * res.power.mean_over(res.assignment.assigned_devices()) / dep.p_max_mw());
    return 0;
}
