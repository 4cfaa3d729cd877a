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

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lorajoint {

/// Spreading factors are identified by their value m in [7, 12].
inline constexpr int kMinSf = 7;
inline constexpr int kMaxSf = 12;
inline constexpr int kNumSf = kMaxSf - kMinSf + 1;

inline constexpr bool is_valid_sf(int m) { return m >= kMinSf && m <= kMaxSf; }
inline constexpr std::size_t sf_index(int m) { return static_cast<std::size_t>(m - kMinSf); }
inline constexpr int sf_from_index(std::size_t k) { return kMinSf + static_cast<int>(k); }

template <typename T>
using PerSf = std::array<T, kNumSf>;

/// Thrown for arguments outside a function's domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double x)
{
    if (!(x > 0.0))
        throw DomainError("linear_to_db: argument must be positive");
    return 10.0 * std::log10(x);
}

inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }
inline double mw_to_dbm(double mw) { return linear_to_db(mw); }

/// Radio and cell constants. Frequencies in MHz, bandwidth in Hz,
/// distances in meters, powers in dBm.
struct ChannelParams {
    double carrier_freq_mhz = 868.0;
    double bandwidth_hz = 125e3;
    double noise_figure_db = 6.0;
    double path_loss_exponent = 4.0;
    double cell_radius_m = 1000.0;
    double p_max_dbm = 14.0;
    int coding_rate_x = 1;

    double coding_rate() const { return 4.0 / (4.0 + coding_rate_x); }
    double p_max_mw() const { return dbm_to_mw(p_max_dbm); }

    void validate() const
    {
        if (!(carrier_freq_mhz > 0.0))
            throw DomainError("carrier frequency must be positive");
        if (!(bandwidth_hz > 0.0))
            throw DomainError("bandwidth must be positive");
        if (!(path_loss_exponent > 0.0))
            throw DomainError("path loss exponent must be positive");
        if (!(cell_radius_m > 0.0))
            throw DomainError("cell radius must be positive");
        if (coding_rate_x < 1 || coding_rate_x > 4)
            throw DomainError("coding rate x must be in {1,2,3,4}");
    }
};

/// Thermal noise power over the channel bandwidth.
struct NoiseModel {
    double sigma2_dbm = 0.0;
    double sigma2_mw = 0.0;

    static NoiseModel from(const ChannelParams& ch)
    {
        NoiseModel n;
        n.sigma2_dbm = -174.0 + ch.noise_figure_db + 10.0 * std::log10(ch.bandwidth_hz);
        n.sigma2_mw = dbm_to_mw(n.sigma2_dbm);
        return n;
    }
};

// Reception (SNR) and inter-SF capture thresholds at 125 kHz, in dB.
inline constexpr PerSf<double> kRxThresholdDb = {-6.0, -9.0, -12.0, -15.0, -17.5, -20.0};
inline constexpr PerSf<double> kInterSfThresholdDb = {-7.5, -9.0, -13.5, -15.0, -18.0, -22.5};
inline constexpr double kCoSfThresholdDb = 6.0;

/// Data bit-rate of SF m in bit/s.
inline double bitrate(int m, const ChannelParams& ch)
{
    if (!is_valid_sf(m))
        throw DomainError("bitrate: SF out of range");
    const double symbol_time = std::ldexp(1.0, m) / ch.bandwidth_hz;
    return m * ch.coding_rate() / symbol_time;
}

/// Deterministic path gain A(f_c) = 1 / (f_c^2 * 10^-2.8), f_c in MHz.
inline double path_gain(const ChannelParams& ch)
{
    return 1.0 / (ch.carrier_freq_mhz * ch.carrier_freq_mhz * std::pow(10.0, -2.8));
}

/// Mean channel-to-noise ratio at distance r, in 1/mW: multiplying by a
/// transmit power in mW yields the mean received SNR.
inline double mean_cnr(double r, const ChannelParams& ch, const NoiseModel& noise)
{
    if (!(r > 0.0))
        throw DomainError("mean_cnr: distance must be positive");
    return path_gain(ch) / (std::pow(r, ch.path_loss_exponent) * noise.sigma2_mw);
}

/// Distance at which the mean SNR at full power equals the reception
/// threshold of SF m.
inline double coverage_radius(int m, const ChannelParams& ch, const NoiseModel& noise)
{
    if (!is_valid_sf(m))
        throw DomainError("coverage_radius: SF out of range");
    const double budget_db = ch.p_max_dbm - kRxThresholdDb[sf_index(m)] - noise.sigma2_dbm
                             + 10.0 * std::log10(path_gain(ch));
    return std::pow(10.0, budget_db / (10.0 * ch.path_loss_exponent));
}

struct SfParams {
    int sf = kMinSf;
    double bitrate_bps = 0.0;
    double rx_threshold_db = 0.0;
    double inter_sf_threshold_db = 0.0;
    double coverage_m = 0.0;
};

inline PerSf<SfParams> make_sf_table(const ChannelParams& ch)
{
    const NoiseModel noise = NoiseModel::from(ch);
    PerSf<SfParams> table{};
    for (std::size_t k = 0; k < kNumSf; ++k) {
        const int m = sf_from_index(k);
        table[k] = SfParams{m, bitrate(m, ch), kRxThresholdDb[k], kInterSfThresholdDb[k],
                            coverage_radius(m, ch, noise)};
    }
    return table;
}

/// Gateway-centric device layout plus the channel it lives in.
class Deployment {
public:
    Deployment(std::vector<double> distances, ChannelParams channel)
        : distances_(std::move(distances)), channel_(channel)
    {
        channel_.validate();
        for (double r : distances_) {
            if (!(r > 0.0) || r > channel_.cell_radius_m)
                throw DomainError("device distance must lie in (0, R]");
        }
        noise_ = NoiseModel::from(channel_);
        sf_table_ = make_sf_table(channel_);
        gain_ = lorajoint::path_gain(channel_);
        cnr_.reserve(distances_.size());
        for (double r : distances_)
            cnr_.push_back(lorajoint::mean_cnr(r, channel_, noise_));
    }

    std::size_t size() const { return distances_.size(); }
    double distance(std::size_t n) const { return distances_.at(n); }
    const std::vector<double>& distances() const { return distances_; }
    const ChannelParams& channel() const { return channel_; }
    const NoiseModel& noise() const { return noise_; }
    const SfParams& sf(int m) const { return sf_table_.at(sf_index(m)); }
    const PerSf<SfParams>& sf_table() const { return sf_table_; }
    double path_gain() const { return gain_; }
    double mean_cnr(std::size_t n) const { return cnr_.at(n); }
    double p_max_mw() const { return channel_.p_max_mw(); }

    /// (r_n / r_i)^alpha
    double distance_ratio_pow(std::size_t n, std::size_t i) const
    {
        return std::pow(distances_[n] / distances_[i], channel_.path_loss_exponent);
    }

    /// sigma^2 r_n^alpha / A, the noise-equivalent power in mW.
    double noise_power_term(std::size_t n) const { return 1.0 / cnr_[n]; }

    /// Lower edge of SF m's ring; zero for SF7.
    double ring_inner(int m) const { return m == kMinSf ? 0.0 : sf(m - 1).coverage_m; }

    bool in_ring(std::size_t n, int m) const
    {
        const double r = distances_[n];
        return r > ring_inner(m) && r <= sf(m).coverage_m;
    }

private:
    std::vector<double> distances_;
    ChannelParams channel_;
    NoiseModel noise_;
    PerSf<SfParams> sf_table_{};
    double gain_ = 0.0;
    std::vector<double> cnr_;
};

}  // namespace lorajoint
