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
#include <vector>

#include "lorajoint/assignment.hpp"
#include "lorajoint/core_model.hpp"

namespace lorajoint {

/// Capture thresholds in linear scale.
struct CaptureThresholds {
    double theta_co = db_to_linear(kCoSfThresholdDb);
    PerSf<double> theta_inter = [] {
        PerSf<double> t{};
        for (std::size_t k = 0; k < kNumSf; ++k)
            t[k] = db_to_linear(kInterSfThresholdDb[k]);
        return t;
    }();

    double inter(int m) const { return theta_inter[sf_index(m)]; }
};

inline const CaptureThresholds& default_thresholds()
{
    static const CaptureThresholds t{};
    return t;
}

enum class ThresholdKind { inter_sf, co_sf };

namespace detail {

/// Accumulates prod 1 / (1 + x_k). Switches to log space once the factor
/// count passes 32 so long products of small factors do not underflow.
class ReciprocalProduct {
public:
    void add(double x)
    {
        direct_ /= (1.0 + x);
        log_sum_ += std::log1p(x);
        ++count_;
    }

    double value() const { return count_ <= 32 ? direct_ : std::exp(-log_sum_); }

private:
    double direct_ = 1.0;
    double log_sum_ = 0.0;
    std::size_t count_ = 0;
};

inline void require_member(std::size_t n, int m, const Assignment& a)
{
    if (!is_valid_sf(m))
        throw DomainError("capture: SF out of range");
    if (n >= a.num_devices() || a.sf_of(n) != m)
        throw DomainError("capture: device is not assigned to the given SF");
}

/// Closed-form P(SINR >= theta) under Rayleigh fading. Interferers are every
/// other assigned device for the co-SF case and only those on other SFs for
/// the inter-SF case.
inline double success_probability(std::size_t n, int m, ThresholdKind kind, const Assignment& a,
                                  const PowerVector& p, const Deployment& dep,
                                  const CaptureThresholds& th)
{
    const double theta = kind == ThresholdKind::co_sf ? th.theta_co : th.inter(m);
    const double pn = p[n];
    ReciprocalProduct prod;
    for (std::size_t i = 0; i < a.num_devices(); ++i) {
        if (i == n)
            continue;
        const auto mi = a.sf_of(i);
        if (!mi)
            continue;
        if (*mi == m && kind == ThresholdKind::inter_sf)
            continue;
        prod.add(theta * (p[i] / pn) * dep.distance_ratio_pow(n, i));
    }
    const double noise = std::exp(-theta * dep.noise_power_term(n) / pn);
    return std::clamp(noise * prod.value(), 0.0, 1.0);
}

}  // namespace detail

/// Success probability of the sole device on SF m, subject to inter-SF
/// interference only.
inline double p_cap_inter(std::size_t n, int m, const Assignment& a, const PowerVector& p,
                          const Deployment& dep, const CaptureThresholds& th = default_thresholds())
{
    detail::require_member(n, m, a);
    if (a.count(m) != 1)
        throw DomainError("p_cap_inter: SF must hold exactly one device");
    return detail::success_probability(n, m, ThresholdKind::inter_sf, a, p, dep, th);
}

/// Success probability of a device sharing SF m, subject to both co-SF and
/// inter-SF interference at the co-SF threshold.
inline double p_cap_co(std::size_t n, int m, const Assignment& a, const PowerVector& p,
                       const Deployment& dep, const CaptureThresholds& th = default_thresholds())
{
    detail::require_member(n, m, a);
    if (a.count(m) < 2)
        throw DomainError("p_cap_co: SF must hold at least two devices");
    return detail::success_probability(n, m, ThresholdKind::co_sf, a, p, dep, th);
}

inline ThresholdKind threshold_kind_for(int m, const Assignment& a)
{
    return a.count(m) >= 2 ? ThresholdKind::co_sf : ThresholdKind::inter_sf;
}

inline double p_cap(std::size_t n, int m, const Assignment& a, const PowerVector& p,
                    const Deployment& dep, const CaptureThresholds& th = default_thresholds())
{
    detail::require_member(n, m, a);
    return a.count(m) >= 2 ? p_cap_co(n, m, a, p, dep, th) : p_cap_inter(n, m, a, p, dep, th);
}

/// Short-term average rate R_m * P_cap in bit/s.
inline double short_term_rate(std::size_t n, int m, const Assignment& a, const PowerVector& p,
                              const Deployment& dep, const CaptureThresholds& th = default_thresholds())
{
    return dep.sf(m).bitrate_bps * p_cap(n, m, a, p, dep, th);
}

struct McEstimate {
    double probability = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Monte Carlo estimate of P(SINR >= theta) drawing exponential CNRs with
/// the deployment's mean CNRs. Independent of the closed forms above.
inline McEstimate mc_capture_oracle(std::size_t n, int m, const Assignment& a, const PowerVector& p,
                                    const Deployment& dep, ThresholdKind kind, std::size_t samples,
                                    std::uint64_t seed,
                                    const CaptureThresholds& th = default_thresholds())
{
    detail::require_member(n, m, a);
    if (samples < 10000)
        throw DomainError("mc_capture_oracle: at least 1e4 samples required");

    const double theta = kind == ThresholdKind::co_sf ? th.theta_co : th.inter(m);
    // Mean received SNR of the target and of each interferer.
    const double target_mean = dep.mean_cnr(n) * p[n];
    std::vector<double> interferer_mean;
    for (std::size_t i = 0; i < a.num_devices(); ++i) {
        const auto mi = a.sf_of(i);
        if (i == n || !mi || (*mi == m && kind == ThresholdKind::inter_sf))
            continue;
        interferer_mean.push_back(dep.mean_cnr(i) * p[i]);
    }

    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> unit_exp(1.0);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double signal = target_mean * unit_exp(gen);
        double interference = 1.0;
        for (double mean : interferer_mean)
            interference += mean * unit_exp(gen);
        if (signal >= theta * interference)
            ++hits;
    }
    McEstimate est;
    est.samples = samples;
    est.probability = static_cast<double>(hits) / static_cast<double>(samples);
    est.std_error = std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(samples));
    return est;
}

}  // namespace lorajoint
