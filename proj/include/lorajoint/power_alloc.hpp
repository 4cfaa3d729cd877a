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

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "lorajoint/assignment.hpp"
#include "lorajoint/capture.hpp"
#include "lorajoint/feasibility.hpp"
#include "lorajoint/matching.hpp"

namespace lorajoint {

namespace detail {

inline std::vector<std::size_t> variable_map(const Assignment& a, const std::vector<std::size_t>& devices)
{
    std::vector<std::size_t> var_of(a.num_devices(), std::numeric_limits<std::size_t>::max());
    for (std::size_t v = 0; v < devices.size(); ++v)
        var_of[devices[v]] = v;
    return var_of;
}

inline ConstraintSystem empty_system(SystemKind kind, const Assignment& a, const Deployment& dep, double eta)
{
    if (!(eta > 0.0))
        throw DomainError("rate target must be positive");
    ConstraintSystem sys;
    sys.kind = kind;
    sys.devices = a.assigned_devices();
    sys.bounds.lower.assign(sys.devices.size(), kPowerFloorMw);
    sys.bounds.upper.assign(sys.devices.size(), dep.p_max_mw());
    return sys;
}

}  // namespace detail

/// Linearized rate constraints for target eta: one row per assigned device.
/// Sole devices use the first-order expansion of ln(1+x); devices sharing an
/// SF use the tangent of the log term taken where its argument equals one.
inline ConstraintSystem build_linear_system(const Assignment& a, const Deployment& dep, double eta,
                                            const CaptureThresholds& th = default_thresholds())
{
    ConstraintSystem sys = detail::empty_system(SystemKind::linear, a, dep, eta);
    const std::size_t nv = sys.devices.size();
    const auto var_of = detail::variable_map(a, sys.devices);
    const double shift = std::numbers::ln2 - 0.5;

    for (std::size_t v = 0; v < nv; ++v) {
        const std::size_t n = sys.devices[v];
        const int m = *a.sf_of(n);
        ConstraintRow row;
        row.linear.assign(nv, 0.0);
        row.linear[v] = std::log(eta / dep.sf(m).bitrate_bps);
        if (a.count(m) == 1) {
            const double theta = th.inter(m);
            row.constant = theta * dep.noise_power_term(n);
            for (std::size_t i : sys.devices) {
                if (i != n)
                    row.linear[var_of[i]] += theta * dep.distance_ratio_pow(n, i);
            }
        } else {
            const double theta = th.theta_co;
            row.constant = theta * dep.noise_power_term(n);
            for (std::size_t i : sys.devices) {
                if (i == n)
                    continue;
                row.linear[v] += shift;
                row.linear[var_of[i]] += 0.5 * theta * dep.distance_ratio_pow(n, i);
            }
        }
        sys.rows.push_back(std::move(row));
    }
    return sys;
}

/// Largest argument for which the second-order expansions used by
/// build_quadratic_system stay non-negative, like the log terms they replace:
/// x - x^2/2 for a sole device, and the expansion around y = 1 for a shared SF.
inline constexpr double kSoleExpansionLimit = 2.0;
inline const double kSharedExpansionLimit = 3.0 + std::sqrt(9.0 + 8.0 * (std::numbers::ln2 - 5.0 / 8.0));

/// Second-order counterpart of build_linear_system, multiplied through by
/// the device's own power so that every row is a quadratic form. Each
/// interference term also gets a linear domain row keeping its expansion
/// argument below the limits above; without them every target is feasible
/// by driving the victim's own power toward zero.
inline ConstraintSystem build_quadratic_system(const Assignment& a, const Deployment& dep, double eta,
                                               const CaptureThresholds& th = default_thresholds(),
                                               bool restrict_domain = true)
{
    ConstraintSystem sys = detail::empty_system(SystemKind::quadratic, a, dep, eta);
    const std::size_t nv = sys.devices.size();
    const auto var_of = detail::variable_map(a, sys.devices);
    const double shift = std::numbers::ln2 - 5.0 / 8.0;

    for (std::size_t v = 0; v < nv; ++v) {
        const std::size_t n = sys.devices[v];
        const int m = *a.sf_of(n);
        ConstraintRow row;
        row.linear.assign(nv, 0.0);
        row.quadratic.assign(nv * nv, 0.0);
        row.homogenizer = v;
        auto q = [&](std::size_t j, std::size_t k) -> double& { return row.quadratic[j * nv + k]; };
        q(v, v) = std::log(eta / dep.sf(m).bitrate_bps);
        const bool shared = a.count(m) >= 2;
        const double theta = shared ? th.theta_co : th.inter(m);
        row.linear[v] = theta * dep.noise_power_term(n);
        for (std::size_t i : sys.devices) {
            if (i == n)
                continue;
            const bool co_sf = a.sf_of(i) == m;
            if (!shared && co_sf)
                continue;
            const std::size_t u = var_of[i];
            const double ratio = dep.distance_ratio_pow(n, i);
            if (shared) {
                q(v, v) += shift;
                q(v, u) += 0.75 * theta * ratio;
                q(u, u) -= theta * theta / 8.0 * ratio * ratio;
            } else {
                q(v, u) += theta * ratio;
                q(u, u) -= theta * theta / 2.0 * ratio * ratio;
            }
            if (restrict_domain) {
                ConstraintRow dom;
                dom.linear.assign(nv, 0.0);
                dom.linear[u] = theta * ratio;
                dom.linear[v] = -(shared ? kSharedExpansionLimit : kSoleExpansionLimit);
                sys.domain.push_back(std::move(dom));
            }
        }
        sys.rows.push_back(std::move(row));
    }
    return sys;
}

inline ConstraintSystem build_system(SystemKind kind, const Assignment& a, const Deployment& dep, double eta)
{
    return kind == SystemKind::linear ? build_linear_system(a, dep, eta) : build_quadratic_system(a, dep, eta);
}

/// Smallest short-term rate over assigned devices, from the exact closed
/// forms. Zero when nothing is assigned.
inline double evaluate_true_min_rate(const Assignment& a, const PowerVector& p, const Deployment& dep)
{
    const auto devices = a.assigned_devices();
    if (devices.empty())
        return 0.0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t n : devices)
        worst = std::min(worst, short_term_rate(n, *a.sf_of(n), a, p, dep));
    return worst;
}

/// Upper end of the rate search: the lowest bit-rate among occupied SFs.
inline double occupied_rate_cap(const Assignment& a, const Deployment& dep)
{
    double cap = std::numeric_limits<double>::infinity();
    for (int m = kMinSf; m <= kMaxSf; ++m) {
        if (a.count(m) > 0)
            cap = std::min(cap, dep.sf(m).bitrate_bps);
    }
    return std::isfinite(cap) ? cap : 0.0;
}

enum class BisectionStatus { converged, no_feasible_target, solver_failure };

struct BisectionResult {
    BisectionStatus status = BisectionStatus::converged;
    double eta = 0.0;
    double eta_min = 0.0;
    double eta_max = 0.0;
    std::size_t iterations = 0;
    std::vector<double> witness;
};

/// Bisection on the rate target. The probe returns the feasibility verdict
/// for a target; every target at or below eta_min has been found feasible
/// and every probed target at or above eta_max infeasible.
template <typename Probe>
BisectionResult bisect_rate(double eta_min, double eta_max, double epsilon, Probe&& probe)
{
    if (!(epsilon > 0.0))
        throw DomainError("bisection accuracy must be positive");
    BisectionResult res;
    bool found = false;
    while (eta_max - eta_min >= epsilon) {
        const double eta = 0.5 * (eta_min + eta_max);
        ++res.iterations;
        if (!(eta > 0.0)) {
            eta_max = eta;
            continue;
        }
        FeasibilityResult fr = probe(eta);
        if (fr.status == FeasibilityStatus::numerical_failure) {
            res.status = BisectionStatus::solver_failure;
            break;
        }
        if (fr.feasible()) {
            res.witness = std::move(fr.witness);
            eta_min = eta;
            found = true;
        } else {
            eta_max = eta;
        }
    }
    res.eta_min = eta_min;
    res.eta_max = eta_max;
    res.eta = eta_min;
    if (res.status != BisectionStatus::solver_failure && !found)
        res.status = BisectionStatus::no_feasible_target;
    return res;
}

inline std::size_t expected_bisection_iterations(double width, double epsilon)
{
    if (width < epsilon)
        return 0;
    std::size_t k = 0;
    while (width >= epsilon) {
        width *= 0.5;
        ++k;
    }
    return k;
}

struct PowerAllocation {
    PowerVector power;
    SystemKind kind = SystemKind::linear;
    BisectionStatus status = BisectionStatus::converged;
    /// Largest rate target the approximated system accepted.
    double eta = 0.0;
    std::size_t iterations = 0;
    /// Exact min rate at the returned powers.
    double true_min_rate = 0.0;
    /// eta minus the exact min rate.
    double slack = 0.0;

    bool fallback() const { return status != BisectionStatus::converged; }
};

/// Max-min power allocation for a fixed assignment. Falls back to uniform
/// full power when no target is feasible or the solver fails.
inline PowerAllocation bisect_power(const Assignment& a, const Deployment& dep, SystemKind kind, double epsilon)
{
    PowerAllocation out;
    out.kind = kind;
    out.power = PowerVector::uniform_max(dep);
    const double cap = occupied_rate_cap(a, dep);
    if (a.num_assigned() == 0 || cap <= 0.0) {
        out.status = BisectionStatus::no_feasible_target;
        return out;
    }
    const auto devices = a.assigned_devices();
    auto br = bisect_rate(0.0, cap, epsilon, [&](double eta) { return solve(build_system(kind, a, dep, eta)); });
    out.status = br.status;
    out.iterations = br.iterations;
    if (br.status == BisectionStatus::converged) {
        out.eta = br.eta;
        for (std::size_t v = 0; v < devices.size(); ++v)
            out.power.set(devices[v], br.witness[v]);
    }
    out.true_min_rate = evaluate_true_min_rate(a, out.power, dep);
    out.slack = out.eta - out.true_min_rate;
    return out;
}

struct JointOptions {
    SystemKind kind = SystemKind::linear;
    std::size_t max_iterations = 1;
    double epsilon = 1.0;
    bool optimize_power = true;
};

struct JointResult {
    Assignment assignment;
    PowerVector power;
    std::optional<PowerAllocation> allocation;
    MatchState match;
    std::size_t iterations = 0;
    double objective = 0.0;
};

/// Alternates SF matching at full power and power allocation, keeping the
/// best (assignment, power) pair by exact min rate.
inline JointResult joint_allocate(const Deployment& dep, const Quotas& quotas, const JointOptions& opt = {})
{
    if (opt.max_iterations < 1)
        throw DomainError("joint_allocate: at least one iteration required");
    JointResult best;
    double best_objective = -std::numeric_limits<double>::infinity();
    double previous = -std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
        MatchState match = match_sf(dep, quotas);
        PowerVector power = PowerVector::uniform_max(dep);
        std::optional<PowerAllocation> alloc;
        if (opt.optimize_power) {
            alloc = bisect_power(match.assignment, dep, opt.kind, opt.epsilon);
            power = alloc->power;
        }
        const double objective = evaluate_true_min_rate(match.assignment, power, dep);
        if (objective > best_objective) {
            best_objective = objective;
            best.assignment = match.assignment;
            best.power = power;
            best.allocation = alloc;
            best.match = std::move(match);
        }
        best.iterations = it;
        if (objective - previous < opt.epsilon)
            break;
        previous = objective;
    }
    best.objective = best_objective;
    return best;
}

}  // namespace lorajoint
