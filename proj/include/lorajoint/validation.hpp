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
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lorajoint/capture.hpp"
#include "lorajoint/harness.hpp"
#include "lorajoint/matching.hpp"
#include "lorajoint/power_alloc.hpp"

namespace lorajoint {

/// Random capture scenario: deployment, assignment, powers, and the device
/// under test.
struct CaptureCase {
    Deployment dep;
    Assignment assignment;
    PowerVector power;
    std::size_t device = 0;
};

/// 2..max_n devices uniform over the cell, every device on a uniform SF,
/// powers log-uniform between P_max/100 and P_max.
inline CaptureCase random_capture_case(std::size_t max_n, const ChannelParams& ch, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> n_pick(2, std::max<std::size_t>(2, max_n));
    const std::size_t n = n_pick(gen);
    Deployment dep = sample_deployment(n, ch, gen());
    Assignment a(n, kUnlimitedQuotas);
    std::uniform_int_distribution<int> sf_pick(kMinSf, kMaxSf);
    for (std::size_t i = 0; i < n; ++i)
        a.assign(i, sf_pick(gen));
    PowerVector p = PowerVector::uniform_max(dep);
    std::uniform_real_distribution<double> db(-20.0, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        p.set(i, dep.p_max_mw() * db_to_linear(db(gen)));
    std::uniform_int_distribution<std::size_t> dev(0, n - 1);
    const std::size_t target = dev(gen);
    return CaptureCase{std::move(dep), std::move(a), std::move(p), target};
}

struct SuiteReport {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    bool passed = false;
    std::string detail;
};

struct ValidationOptions {
    std::uint64_t seed = 1;
    std::size_t capture_cases = 50;
    std::size_t capture_samples = 200000;
    /// Fraction of capture cases that must agree within 3 standard errors.
    double capture_pass_fraction = 0.99;
    /// Test hook: the closed form is multiplied by this before comparison.
    double capture_perturbation = 1.0;
    std::size_t stability_cases = 100;
    std::size_t bisection_cases = 100;
    ChannelParams channel{};
};

/// Standard error used to compare a closed form against a Monte Carlo
/// estimate. Floored at one sample so exact zeros and ones are comparable.
inline double capture_comparison_se(double closed_form, const McEstimate& mc)
{
    const double s = static_cast<double>(mc.samples);
    const double p = std::clamp(closed_form, 0.0, 1.0);
    return std::max({mc.std_error, std::sqrt(p * (1.0 - p) / s), 1.0 / s});
}

inline SuiteReport validate_capture(const ValidationOptions& opt)
{
    SuiteReport r;
    r.name = "capture";
    for (std::size_t c = 0; c < opt.capture_cases; ++c) {
        const auto cc = random_capture_case(8, opt.channel, trial_seed(opt.seed, 1, c));
        const int m = *cc.assignment.sf_of(cc.device);
        const double closed = opt.capture_perturbation * p_cap(cc.device, m, cc.assignment, cc.power, cc.dep);
        const auto mc = mc_capture_oracle(cc.device, m, cc.assignment, cc.power, cc.dep,
                                          threshold_kind_for(m, cc.assignment), opt.capture_samples,
                                          trial_seed(opt.seed, 2, c));
        ++r.cases;
        if (std::abs(closed - mc.probability) > 3.0 * capture_comparison_se(closed, mc))
            ++r.failures;
    }
    const double agree = 1.0 - static_cast<double>(r.failures) / static_cast<double>(std::max<std::size_t>(1, r.cases));
    r.passed = r.cases > 0 && agree >= opt.capture_pass_fraction;
    r.detail = std::to_string(r.cases - r.failures) + "/" + std::to_string(r.cases) + " within 3 SE";
    return r;
}

inline SuiteReport validate_stability(const ValidationOptions& opt)
{
    SuiteReport r;
    r.name = "stability";
    const std::array<Quotas, 2> scenarios = {uniform_quotas(1), Quotas{3, 1, 1, 1, 1, 1}};
    std::mt19937_64 gen(opt.seed);
    std::uniform_int_distribution<std::size_t> n_pick(2, 12);
    for (std::size_t c = 0; c < opt.stability_cases; ++c) {
        const Quotas& q = scenarios[c % scenarios.size()];
        const auto dep = sample_deployment(n_pick(gen), opt.channel, trial_seed(opt.seed, 3, c));
        const auto st = match_sf(dep, q);
        ++r.cases;
        const bool ok = static_cast<long>(st.swap_count) <= swap_bound(q) && verify_stability(st, dep).stable
                        && st.assignment.consistent();
        if (!ok)
            ++r.failures;
    }
    r.passed = r.cases > 0 && r.failures == 0;
    r.detail = std::to_string(r.cases - r.failures) + "/" + std::to_string(r.cases) + " stable within swap bound";
    return r;
}

inline SuiteReport validate_bisection(const ValidationOptions& opt)
{
    SuiteReport r;
    r.name = "bisection";
    std::mt19937_64 gen(opt.seed ^ 0xb15ec7ULL);
    std::uniform_real_distribution<double> cap_pick(10.0, 6000.0);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    std::uniform_real_distribution<double> eps_pick(0.01, 5.0);
    for (std::size_t c = 0; c < opt.bisection_cases; ++c) {
        const double cap = cap_pick(gen);
        const double star = cap * frac(gen);
        const double eps = eps_pick(gen);
        const auto res = bisect_rate(0.0, cap, eps, [&](double eta) {
            FeasibilityResult fr;
            fr.status = eta <= star ? FeasibilityStatus::feasible : FeasibilityStatus::infeasible;
            return fr;
        });
        ++r.cases;
        // A target below the first probe never becomes feasible; the
        // returned bracket must still hold it.
        const bool ok = res.eta >= star - eps && res.eta <= star && res.eta_max - res.eta_min < eps
                        && res.iterations == expected_bisection_iterations(cap, eps);
        if (!ok)
            ++r.failures;
    }
    r.passed = r.cases > 0 && r.failures == 0;
    r.detail = std::to_string(r.cases - r.failures) + "/" + std::to_string(r.cases) + " within [eta* - eps, eta*]";
    return r;
}

inline std::vector<SuiteReport> run_validation(const ValidationOptions& opt = {})
{
    return {validate_capture(opt), validate_stability(opt), validate_bisection(opt)};
}

}  // namespace lorajoint
