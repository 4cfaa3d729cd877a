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
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "lorajoint/assignment.hpp"
#include "lorajoint/capture.hpp"
#include "lorajoint/core_model.hpp"

namespace lorajoint {

/// Device-side and SF-side preference lists.
struct PreferenceLists {
    /// Usable SFs per device, most preferred (smallest coverage) first.
    std::vector<std::vector<int>> device_prefs;
    /// Candidate devices per SF: ring members first, then by distance.
    PerSf<std::vector<std::size_t>> sf_prefs{};
};

inline PreferenceLists build_preferences(const Deployment& dep)
{
    PreferenceLists prefs;
    prefs.device_prefs.resize(dep.size());
    for (std::size_t n = 0; n < dep.size(); ++n) {
        for (int m = kMinSf; m <= kMaxSf; ++m) {
            if (dep.distance(n) <= dep.sf(m).coverage_m)
                prefs.device_prefs[n].push_back(m);
        }
    }
    for (int m = kMinSf; m <= kMaxSf; ++m) {
        auto& list = prefs.sf_prefs[sf_index(m)];
        for (std::size_t n = 0; n < dep.size(); ++n) {
            if (dep.distance(n) <= dep.sf(m).coverage_m)
                list.push_back(n);
        }
        std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
            const bool ra = dep.in_ring(a, m);
            const bool rb = dep.in_ring(b, m);
            if (ra != rb)
                return ra;
            return dep.distance(a) < dep.distance(b);
        });
    }
    return prefs;
}

/// Utility of an assigned device: its short-term average rate.
inline double device_utility(std::size_t n, const Assignment& a, const PowerVector& p, const Deployment& dep)
{
    const auto m = a.sf_of(n);
    if (!m)
        throw DomainError("device_utility: device is not assigned");
    return short_term_rate(n, *m, a, p, dep);
}

/// Utility of an SF: the smallest device utility among its members.
inline double sf_utility(int m, const Assignment& a, const PowerVector& p, const Deployment& dep)
{
    if (a.count(m) == 0)
        throw DomainError("sf_utility: SF has no members");
    double u = std::numeric_limits<double>::infinity();
    for (std::size_t n : a.members(m))
        u = std::min(u, device_utility(n, a, p, dep));
    return u;
}

/// Upper bound on the number of accepted swaps during refinement.
inline long swap_bound(const Quotas& q)
{
    const long total = total_quota(q);
    long bound = 0;
    for (int v : q)
        bound += static_cast<long>(v) * (total - v);
    return bound;
}

struct OperationCount {
    std::size_t requests = 0;     // proposals issued during initial matching
    std::size_t evaluations = 0;  // candidate moves examined during refinement

    std::size_t total() const { return requests + evaluations; }
};

/// One accepted relocation (partner empty) or exchange.
struct SwapEvent {
    std::size_t iteration = 0;
    std::size_t device = 0;
    int from_sf = 0;
    std::optional<std::size_t> partner;
    int to_sf = 0;
    double device_gain = 0.0;
    double partner_gain = 0.0;
};

using SwapTrace = std::function<void(const SwapEvent&)>;

struct MatchState {
    Assignment assignment;
    std::vector<std::size_t> unmatched;
    std::size_t swap_count = 0;
    std::size_t sweeps = 0;
    bool converged = true;
    OperationCount ops;
    std::vector<double> device_utility_cache;
    PerSf<std::optional<double>> sf_utility_cache{};
};

namespace detail {

inline constexpr double kUtilityRelTol = 1e-12;

inline void refresh_cache(MatchState& s, const Deployment& dep)
{
    const PowerVector pmax = PowerVector::uniform_max(dep);
    s.device_utility_cache.assign(dep.size(), 0.0);
    for (std::size_t n : s.assignment.assigned_devices())
        s.device_utility_cache[n] = device_utility(n, s.assignment, pmax, dep);
    for (int m = kMinSf; m <= kMaxSf; ++m) {
        auto& slot = s.sf_utility_cache[sf_index(m)];
        slot.reset();
        for (std::size_t n : s.assignment.members(m))
            slot = std::min(slot.value_or(std::numeric_limits<double>::infinity()), s.device_utility_cache[n]);
    }
}

inline std::vector<std::size_t> unassigned_of(const Assignment& a)
{
    std::vector<std::size_t> out;
    for (std::size_t n = 0; n < a.num_devices(); ++n) {
        if (!a.is_assigned(n))
            out.push_back(n);
    }
    return out;
}

/// Utility of SF m under assignment a at full power, or nothing if empty.
inline std::optional<double> sf_utility_opt(int m, const Assignment& a, const PowerVector& p, const Deployment& dep)
{
    if (a.count(m) == 0)
        return std::nullopt;
    return sf_utility(m, a, p, dep);
}

struct PlayerChange {
    std::optional<double> before;
    std::optional<double> after;

    bool decreased() const
    {
        return before && after && *after < *before * (1.0 - kUtilityRelTol);
    }
    bool strictly_improved() const
    {
        return before && after && *after > *before * (1.0 + kUtilityRelTol);
    }
};

/// Candidate move of device i (on SF j) to SF l, exchanging places with k
/// when l is occupied.
struct Candidate {
    std::size_t device = 0;
    int from_sf = 0;
    std::optional<std::size_t> partner;
    int to_sf = 0;
};

struct CandidateOutcome {
    bool blocking = false;
    Assignment after;
    double device_gain = 0.0;
    double partner_gain = 0.0;
};

/// Applies the swap-acceptance rule: no affected player (the two devices and
/// the two SFs) loses utility and at least one strictly gains. A relocation
/// to an empty SF must strictly improve the moving device.
inline CandidateOutcome evaluate_candidate(const Candidate& c, const Assignment& a, const Deployment& dep)
{
    const PowerVector pmax = PowerVector::uniform_max(dep);
    CandidateOutcome out{false, a, 0.0, 0.0};
    if (c.partner)
        out.after.exchange(c.device, *c.partner);
    else
        out.after.move(c.device, c.to_sf);

    PlayerChange dev{device_utility(c.device, a, pmax, dep), device_utility(c.device, out.after, pmax, dep)};
    PlayerChange from{sf_utility_opt(c.from_sf, a, pmax, dep), sf_utility_opt(c.from_sf, out.after, pmax, dep)};
    PlayerChange to{sf_utility_opt(c.to_sf, a, pmax, dep), sf_utility_opt(c.to_sf, out.after, pmax, dep)};
    out.device_gain = *dev.after - *dev.before;

    if (!c.partner) {
        out.blocking = dev.strictly_improved() && !from.decreased() && !to.decreased();
        return out;
    }
    PlayerChange partner{device_utility(*c.partner, a, pmax, dep),
                         device_utility(*c.partner, out.after, pmax, dep)};
    out.partner_gain = *partner.after - *partner.before;
    const bool any_loss = dev.decreased() || partner.decreased() || from.decreased() || to.decreased();
    const bool any_gain = dev.strictly_improved() || partner.strictly_improved() || from.strictly_improved()
                          || to.strictly_improved();
    out.blocking = !any_loss && any_gain;
    return out;
}

}  // namespace detail

/// Deferred-acceptance rounds: every unmatched device proposes to its next
/// preferred SF, and each SF keeps its most preferred proposers up to quota.
inline MatchState initial_matching(const PreferenceLists& prefs, const Deployment& dep, const Quotas& quotas)
{
    MatchState s;
    s.assignment = Assignment(dep.size(), quotas);

    PerSf<std::vector<std::size_t>> rank{};
    for (std::size_t k = 0; k < kNumSf; ++k) {
        rank[k].assign(dep.size(), std::numeric_limits<std::size_t>::max());
        for (std::size_t pos = 0; pos < prefs.sf_prefs[k].size(); ++pos)
            rank[k][prefs.sf_prefs[k][pos]] = pos;
    }

    std::vector<std::size_t> next_choice(dep.size(), 0);
    std::vector<std::size_t> unmatched(dep.size());
    std::iota(unmatched.begin(), unmatched.end(), std::size_t{0});

    while (!unmatched.empty()) {
        PerSf<std::vector<std::size_t>> requests{};
        std::vector<std::size_t> still_waiting;
        for (std::size_t i : unmatched) {
            const auto& list = prefs.device_prefs[i];
            if (next_choice[i] >= list.size())
                continue;  // exhausted: leaves the unmatched list for good
            const int a = list[next_choice[i]++];
            requests[sf_index(a)].push_back(i);
            still_waiting.push_back(i);
            ++s.ops.requests;
        }
        for (int j = kMinSf; j <= kMaxSf; ++j) {
            auto& req = requests[sf_index(j)];
            if (req.empty() || s.assignment.full(j))
                continue;
            std::stable_sort(req.begin(), req.end(), [&](std::size_t x, std::size_t y) {
                return rank[sf_index(j)][x] < rank[sf_index(j)][y];
            });
            const auto room = static_cast<std::size_t>(s.assignment.quota(j)) - s.assignment.count(j);
            const std::size_t accept = std::min(room, req.size());
            for (std::size_t t = 0; t < accept; ++t)
                s.assignment.assign(req[t], j);
        }
        unmatched.clear();
        for (std::size_t i : still_waiting) {
            if (!s.assignment.is_assigned(i))
                unmatched.push_back(i);
        }
    }
    s.unmatched = detail::unassigned_of(s.assignment);
    detail::refresh_cache(s, dep);
    return s;
}

/// Swaps matched pairs until no blocking pair remains. Sweeps SFs in
/// ascending order and members in the order they joined.
inline MatchState refine_matching(MatchState state, const Deployment& dep, const SwapTrace& trace = {},
                                  std::size_t max_sweeps = 100000)
{
    detail::refresh_cache(state, dep);
    bool change = true;
    state.converged = false;
    while (change) {
        if (state.sweeps >= max_sweeps)
            return state;
        change = false;
        ++state.sweeps;
        for (int j = kMinSf; j <= kMaxSf; ++j) {
            const std::vector<std::size_t> snapshot = state.assignment.members(j);
            for (std::size_t i : snapshot) {
                if (state.assignment.sf_of(i) != j)
                    continue;
                bool moved = false;
                for (int l = kMinSf; l <= kMaxSf && !moved; ++l) {
                    if (l == j)
                        continue;
                    std::vector<std::optional<std::size_t>> partners;
                    if (state.assignment.count(l) == 0)
                        partners.push_back(std::nullopt);
                    else
                        partners.assign(state.assignment.members(l).begin(), state.assignment.members(l).end());
                    for (const auto& k : partners) {
                        ++state.ops.evaluations;
                        const detail::Candidate cand{i, j, k, l};
                        auto outcome = detail::evaluate_candidate(cand, state.assignment, dep);
                        if (!outcome.blocking)
                            continue;
                        state.assignment = std::move(outcome.after);
                        ++state.swap_count;
                        change = true;
                        moved = true;
                        detail::refresh_cache(state, dep);
                        if (trace)
                            trace(SwapEvent{state.sweeps, i, j, k, l, outcome.device_gain, outcome.partner_gain});
                        break;
                    }
                }
            }
        }
    }
    state.converged = true;
    state.unmatched = detail::unassigned_of(state.assignment);
    return state;
}

struct StabilityReport {
    bool stable = true;
    std::optional<std::size_t> device;
    int from_sf = 0;
    std::optional<std::size_t> partner;
    int to_sf = 0;
};

/// Exhaustively checks every relocation and exchange for a blocking pair.
inline StabilityReport verify_stability(const Assignment& a, const Deployment& dep)
{
    for (int j = kMinSf; j <= kMaxSf; ++j) {
        for (std::size_t i : a.members(j)) {
            for (int l = kMinSf; l <= kMaxSf; ++l) {
                if (l == j)
                    continue;
                std::vector<std::optional<std::size_t>> partners;
                if (a.count(l) == 0)
                    partners.push_back(std::nullopt);
                else
                    partners.assign(a.members(l).begin(), a.members(l).end());
                for (const auto& k : partners) {
                    if (detail::evaluate_candidate({i, j, k, l}, a, dep).blocking)
                        return StabilityReport{false, i, j, k, l};
                }
            }
        }
    }
    return {};
}

inline StabilityReport verify_stability(const MatchState& s, const Deployment& dep)
{
    return verify_stability(s.assignment, dep);
}

/// True when the cached utilities equal a from-scratch recomputation.
inline bool cache_consistent(const MatchState& s, const Deployment& dep)
{
    MatchState fresh = s;
    detail::refresh_cache(fresh, dep);
    return fresh.device_utility_cache == s.device_utility_cache && fresh.sf_utility_cache == s.sf_utility_cache;
}

inline MatchState match_sf(const Deployment& dep, const Quotas& quotas, const SwapTrace& trace = {})
{
    return refine_matching(initial_matching(build_preferences(dep), dep, quotas), dep, trace);
}

/// SF assignment at full power: initial matching followed by refinement.
inline Assignment solve_sf_allocation(const Deployment& dep, const Quotas& quotas)
{
    return match_sf(dep, quotas).assignment;
}

}  // namespace lorajoint
