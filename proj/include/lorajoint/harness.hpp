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
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lorajoint/assignment.hpp"
#include "lorajoint/baselines.hpp"
#include "lorajoint/capture.hpp"
#include "lorajoint/core_model.hpp"
#include "lorajoint/matching.hpp"
#include "lorajoint/power_alloc.hpp"

namespace lorajoint {

enum class Scheme { prop_initial, prop_sf, prop_sf_linear, prop_sf_quadratic, conv_random, conv_distance };

inline constexpr std::array<Scheme, 6> kAllSchemes = {Scheme::prop_initial,      Scheme::prop_sf,
                                                      Scheme::prop_sf_linear,    Scheme::prop_sf_quadratic,
                                                      Scheme::conv_random,       Scheme::conv_distance};

inline std::string_view scheme_name(Scheme s)
{
    switch (s) {
    case Scheme::prop_initial: return "prop_initial";
    case Scheme::prop_sf: return "prop_sf";
    case Scheme::prop_sf_linear: return "prop_sf_linear";
    case Scheme::prop_sf_quadratic: return "prop_sf_quadratic";
    case Scheme::conv_random: return "conv_random";
    case Scheme::conv_distance: return "conv_distance";
    }
    return "unknown";
}

inline std::optional<Scheme> parse_scheme(std::string_view name)
{
    for (Scheme s : kAllSchemes) {
        if (scheme_name(s) == name)
            return s;
    }
    return std::nullopt;
}

inline bool uses_power_control(Scheme s) { return s == Scheme::prop_sf_linear || s == Scheme::prop_sf_quadratic; }

struct ExperimentSpec {
    std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
    std::vector<std::size_t> n_values = [] {
        std::vector<std::size_t> v;
        for (std::size_t n = 2; n <= 20; ++n)
            v.push_back(n);
        return v;
    }();
    std::size_t trials = 1000;
    Quotas quotas = uniform_quotas(1);
    std::uint64_t seed = 1;
    ChannelParams channel{};
    double epsilon = 1.0;
    std::size_t joint_iterations = 1;

    void validate() const
    {
        channel.validate();
        if (trials < 1)
            throw DomainError("trials must be at least 1");
        if (schemes.empty())
            throw DomainError("no scheme selected");
        if (n_values.empty())
            throw DomainError("empty N sweep");
        for (std::size_t n : n_values) {
            if (n < 2)
                throw DomainError("N must be at least 2");
        }
        for (int q : quotas) {
            if (q < 1)
                throw DomainError("SF quota must be at least 1");
        }
        if (!(epsilon > 0.0))
            throw DomainError("epsilon must be positive");
        if (joint_iterations < 1)
            throw DomainError("joint iterations must be at least 1");
    }
};

/// Per-trial seed derived from (base seed, N, trial index). Independent of
/// the scheme so all schemes see the same deployments.
inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t n, std::size_t trial)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(trial),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(trial) >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// N devices uniform over the disk of radius R.
inline Deployment sample_deployment(std::size_t n, const ChannelParams& ch, std::uint64_t seed)
{
    if (n < 2)
        throw DomainError("sample_deployment: N must be at least 2");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> r(n);
    for (double& v : r)
        v = ch.cell_radius_m * std::sqrt(1.0 - unit(gen));  // u in (0, 1]
    return Deployment(std::move(r), ch);
}

struct JainResult {
    double value = 0.0;
    bool undefined = false;
};

/// (sum u)^2 / (N sum u^2). All-zero input has no defined value and is
/// reported as 0 with the flag set.
inline JainResult jain_index(std::span<const double> u)
{
    if (u.empty())
        throw DomainError("jain_index: empty input");
    double sum = 0.0;
    double sq = 0.0;
    for (double v : u) {
        if (v < 0.0 || !std::isfinite(v))
            throw DomainError("jain_index: utilities must be finite and non-negative");
        sum += v;
        sq += v * v;
    }
    if (sq == 0.0)
        return {0.0, true};
    return {sum * sum / (static_cast<double>(u.size()) * sq), false};
}

struct TrialMetrics {
    double min_rate = 0.0;
    double mean_rate = 0.0;
    double jain = 0.0;
    double mean_power = 0.0;
    std::size_t c5_violations = 0;
    std::size_t swap_count = 0;
    std::size_t n_assigned = 0;
    bool jain_undefined = false;
    bool power_fallback = false;
    bool solver_failure = false;
    double eta = 0.0;
    double slack = 0.0;
};

/// Empty SFs when there are more devices than SFs.
inline std::size_t c5_violations(const Assignment& a)
{
    if (a.num_devices() <= static_cast<std::size_t>(kNumSf))
        return 0;
    std::size_t empty = 0;
    for (int m = kMinSf; m <= kMaxSf; ++m)
        empty += a.count(m) == 0 ? 1 : 0;
    return empty;
}

inline TrialMetrics metrics_for(const Assignment& a, const PowerVector& p, const Deployment& dep)
{
    TrialMetrics t;
    const auto devices = a.assigned_devices();
    t.n_assigned = devices.size();
    t.c5_violations = c5_violations(a);
    if (devices.empty()) {
        t.jain_undefined = true;
        return t;
    }
    std::vector<double> u;
    u.reserve(devices.size());
    for (std::size_t n : devices)
        u.push_back(short_term_rate(n, *a.sf_of(n), a, p, dep));
    t.min_rate = *std::min_element(u.begin(), u.end());
    double sum = 0.0;
    for (double v : u)
        sum += v;
    t.mean_rate = sum / static_cast<double>(u.size());
    const auto j = jain_index(u);
    t.jain = j.value;
    t.jain_undefined = j.undefined;
    t.mean_power = p.mean_over(devices);
    return t;
}

/// Runs one scheme on the deployment drawn for `seed`.
inline TrialMetrics run_trial(const ExperimentSpec& spec, Scheme scheme, std::size_t n, std::uint64_t seed)
{
    const Deployment dep = sample_deployment(n, spec.channel, seed);
    // Separate stream for the baselines' device draw.
    const std::uint64_t pick_seed = seed ^ 0x9e3779b97f4a7c15ULL;
    const std::size_t count = static_cast<std::size_t>(std::min<long>(total_quota(spec.quotas), static_cast<long>(n)));
    const PowerVector pmax = PowerVector::uniform_max(dep);

    switch (scheme) {
    case Scheme::conv_random:
        return metrics_for(random_allocation(dep, count, pick_seed), pmax, dep);
    case Scheme::conv_distance:
        return metrics_for(distance_allocation(dep, count, pick_seed), pmax, dep);
    case Scheme::prop_initial: {
        const auto st = initial_matching(build_preferences(dep), dep, spec.quotas);
        return metrics_for(st.assignment, pmax, dep);
    }
    case Scheme::prop_sf: {
        const auto st = match_sf(dep, spec.quotas);
        auto t = metrics_for(st.assignment, pmax, dep);
        t.swap_count = st.swap_count;
        return t;
    }
    case Scheme::prop_sf_linear:
    case Scheme::prop_sf_quadratic: {
        JointOptions opt;
        opt.kind = scheme == Scheme::prop_sf_linear ? SystemKind::linear : SystemKind::quadratic;
        opt.epsilon = spec.epsilon;
        opt.max_iterations = spec.joint_iterations;
        const auto res = joint_allocate(dep, spec.quotas, opt);
        auto t = metrics_for(res.assignment, res.power, dep);
        t.swap_count = res.match.swap_count;
        if (res.allocation) {
            t.power_fallback = res.allocation->fallback();
            t.solver_failure = res.allocation->status == BisectionStatus::solver_failure;
            t.eta = res.allocation->eta;
            t.slack = res.allocation->slack;
        }
        return t;
    }
    }
    throw DomainError("run_trial: unknown scheme");
}

/// Evaluates job(i) for i in [0, count) on up to `workers` threads. Results
/// land at their own index, so the output does not depend on scheduling.
template <typename T, typename Job>
std::vector<T> parallel_map(std::size_t count, std::size_t workers, Job&& job)
{
    std::vector<T> out(count);
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i)
            out[i] = job(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++)
                    out[i] = job(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors) {
        if (e)
            std::rethrow_exception(e);
    }
    return out;
}

/// All trials of one (scheme, N) cell, indexed by trial.
inline std::vector<TrialMetrics> run_trials(const ExperimentSpec& spec, Scheme scheme, std::size_t n,
                                            std::size_t workers = 1)
{
    return parallel_map<TrialMetrics>(spec.trials, workers, [&](std::size_t t) {
        return run_trial(spec, scheme, n, trial_seed(spec.seed, n, t));
    });
}

/// Mean with a normal-approximation 95% confidence half-width.
struct Summary {
    double mean = 0.0;
    double ci95 = 0.0;
};

inline Summary summarize(std::span<const double> xs)
{
    Summary s;
    if (xs.empty())
        return s;
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs)
            ss += (x - s.mean) * (x - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return s;
}

inline constexpr std::array<std::string_view, 8> kMetricNames = {
    "min_rate", "mean_rate", "jain", "mean_power", "c5_violations", "swap_count", "n_assigned", "slack"};

inline double metric_value(const TrialMetrics& t, std::string_view metric)
{
    if (metric == "min_rate") return t.min_rate;
    if (metric == "mean_rate") return t.mean_rate;
    if (metric == "jain") return t.jain;
    if (metric == "mean_power") return t.mean_power;
    if (metric == "c5_violations") return static_cast<double>(t.c5_violations);
    if (metric == "swap_count") return static_cast<double>(t.swap_count);
    if (metric == "n_assigned") return static_cast<double>(t.n_assigned);
    if (metric == "slack") return t.slack;
    throw DomainError("unknown metric");
}

struct SweepRecord {
    Scheme scheme = Scheme::prop_sf;
    std::size_t n = 0;
    std::size_t trials = 0;
    std::array<Summary, kMetricNames.size()> metrics{};
    std::size_t jain_undefined = 0;
    std::size_t power_fallbacks = 0;
    std::size_t solver_failures = 0;

    const Summary& metric(std::string_view name) const
    {
        for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
            if (kMetricNames[k] == name)
                return metrics[k];
        }
        throw DomainError("unknown metric");
    }
};

inline SweepRecord aggregate(Scheme scheme, std::size_t n, std::span<const TrialMetrics> trials)
{
    SweepRecord rec;
    rec.scheme = scheme;
    rec.n = n;
    rec.trials = trials.size();
    std::vector<double> xs(trials.size());
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
        for (std::size_t t = 0; t < trials.size(); ++t)
            xs[t] = metric_value(trials[t], kMetricNames[k]);
        rec.metrics[k] = summarize(xs);
    }
    for (const auto& t : trials) {
        rec.jain_undefined += t.jain_undefined ? 1 : 0;
        rec.power_fallbacks += t.power_fallback ? 1 : 0;
        rec.solver_failures += t.solver_failure ? 1 : 0;
    }
    return rec;
}

using SweepProgress = std::function<void(const SweepRecord&)>;

/// Records ordered by scheme, then N.
inline std::vector<SweepRecord> sweep(const ExperimentSpec& spec, std::size_t workers = 1,
                                      const SweepProgress& progress = {})
{
    spec.validate();
    std::vector<SweepRecord> out;
    for (Scheme s : spec.schemes) {
        for (std::size_t n : spec.n_values) {
            const auto trials = run_trials(spec, s, n, workers);
            out.push_back(aggregate(s, n, trials));
            if (progress)
                progress(out.back());
        }
    }
    return out;
}

struct QuotaStudyOptions {
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    int max_quota = 5;
    /// Target minimal rate in bit/s used to select quotas.
    double target_bps = 1.0;
    std::size_t workers = 1;
};

struct QuotaStudy {
    /// cells[k-1][sf_index(m)]: mean over trials of the smallest rate among
    /// k devices sharing SF m.
    std::vector<PerSf<double>> cells;
    Quotas selected{};
    std::size_t trials = 0;
};

/// k devices at radii drawn uniformly over SF m's ring (capped at R), alone
/// in the network at full power. Returns the smallest device rate.
inline double quota_cell_trial(const ChannelParams& ch, int m, int k, std::uint64_t seed)
{
    const Deployment probe({ch.cell_radius_m}, ch);
    const double lo = probe.ring_inner(m);
    const double hi = std::min(probe.sf(m).coverage_m, ch.cell_radius_m);
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> r(static_cast<std::size_t>(k));
    for (double& v : r)
        v = lo + (hi - lo) * (1.0 - unit(gen));  // (lo, hi]
    const Deployment dep(std::move(r), ch);
    Assignment a(dep.size(), kUnlimitedQuotas);
    for (std::size_t n = 0; n < dep.size(); ++n)
        a.assign(n, m);
    return sf_utility(m, a, PowerVector::uniform_max(dep), dep);
}

inline double quota_cell(const ChannelParams& ch, int m, int k, std::size_t trials, std::uint64_t seed,
                         std::size_t workers = 1)
{
    const auto vals = parallel_map<double>(trials, workers, [&](std::size_t t) {
        return quota_cell_trial(ch, m, k, trial_seed(seed, static_cast<std::size_t>(16 * m + k), t));
    });
    double sum = 0.0;
    for (double v : vals)
        sum += v;
    return sum / static_cast<double>(trials);
}

/// Per-SF minimal rate for quotas 1..max_quota, and the largest quota per SF
/// whose value still meets the target (at least 1).
inline QuotaStudy quota_study(const ChannelParams& ch, const QuotaStudyOptions& opt = {})
{
    ch.validate();
    if (opt.trials < 1000)
        throw DomainError("quota_study: at least 1000 trials required");
    if (opt.max_quota < 1)
        throw DomainError("quota_study: max quota must be at least 1");
    QuotaStudy out;
    out.trials = opt.trials;
    out.selected.fill(1);
    for (int k = 1; k <= opt.max_quota; ++k) {
        PerSf<double> row{};
        for (int m = kMinSf; m <= kMaxSf; ++m) {
            row[sf_index(m)] = quota_cell(ch, m, k, opt.trials, opt.seed, opt.workers);
            if (k > 1 && row[sf_index(m)] >= opt.target_bps && out.selected[sf_index(m)] == k - 1)
                out.selected[sf_index(m)] = k;
        }
        out.cells.push_back(row);
    }
    return out;
}

}  // namespace lorajoint
