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
#include <limits>
#include <optional>
#include <vector>

#include "lorajoint/core_model.hpp"

namespace lorajoint {

using Quotas = PerSf<int>;

inline constexpr Quotas kUnlimitedQuotas = {
    std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
    std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
    std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};

inline Quotas uniform_quotas(int q)
{
    Quotas out{};
    out.fill(q);
    return out;
}

inline long total_quota(const Quotas& q)
{
    long sum = 0;
    for (int v : q)
        sum += v;
    return sum;
}

/// Partial map device -> SF, kept consistent with per-SF member lists.
/// Members are stored in the order they joined their SF.
class Assignment {
public:
    Assignment() = default;
    Assignment(std::size_t num_devices, Quotas quotas)
        : sf_of_(num_devices), quotas_(quotas)
    {
        for (int q : quotas_) {
            if (q < 1)
                throw DomainError("SF quota must be at least 1");
        }
    }

    std::size_t num_devices() const { return sf_of_.size(); }
    const Quotas& quotas() const { return quotas_; }
    int quota(int m) const { return quotas_[sf_index(m)]; }

    std::optional<int> sf_of(std::size_t n) const { return sf_of_.at(n); }
    bool is_assigned(std::size_t n) const { return sf_of_.at(n).has_value(); }

    const std::vector<std::size_t>& members(int m) const { return members_[sf_index(m)]; }
    std::size_t count(int m) const { return members_[sf_index(m)].size(); }
    bool full(int m) const { return static_cast<long>(count(m)) >= quota(m); }

    std::size_t num_assigned() const
    {
        std::size_t total = 0;
        for (const auto& mem : members_)
            total += mem.size();
        return total;
    }

    /// Assigned devices in ascending index order.
    std::vector<std::size_t> assigned_devices() const
    {
        std::vector<std::size_t> out;
        for (std::size_t n = 0; n < sf_of_.size(); ++n) {
            if (sf_of_[n])
                out.push_back(n);
        }
        return out;
    }

    void assign(std::size_t n, int m)
    {
        if (!is_valid_sf(m))
            throw DomainError("assign: SF out of range");
        if (sf_of_.at(n))
            throw DomainError("assign: device already assigned");
        if (full(m))
            throw DomainError("assign: SF quota exceeded");
        sf_of_[n] = m;
        members_[sf_index(m)].push_back(n);
    }

    void unassign(std::size_t n)
    {
        const auto m = sf_of_.at(n);
        if (!m)
            return;
        auto& mem = members_[sf_index(*m)];
        mem.erase(std::find(mem.begin(), mem.end(), n));
        sf_of_[n].reset();
    }

    /// Moves device n (assigned) to SF m.
    void move(std::size_t n, int m)
    {
        unassign(n);
        assign(n, m);
    }

    /// Exchanges the SFs of two assigned devices, keeping each one's slot in
    /// the member list it moves into.
    void exchange(std::size_t a, std::size_t b)
    {
        const int ma = sf_of_.at(a).value();
        const int mb = sf_of_.at(b).value();
        if (ma == mb)
            return;
        auto& la = members_[sf_index(ma)];
        auto& lb = members_[sf_index(mb)];
        *std::find(la.begin(), la.end(), a) = b;
        *std::find(lb.begin(), lb.end(), b) = a;
        sf_of_[a] = mb;
        sf_of_[b] = ma;
    }

    /// Checks the map/member-list consistency and the quota bound.
    bool consistent() const
    {
        std::size_t seen = 0;
        for (std::size_t k = 0; k < kNumSf; ++k) {
            if (static_cast<long>(members_[k].size()) > quotas_[k])
                return false;
            for (std::size_t n : members_[k]) {
                if (n >= sf_of_.size() || sf_of_[n] != sf_from_index(k))
                    return false;
                ++seen;
            }
        }
        return seen == static_cast<std::size_t>(
                           std::count_if(sf_of_.begin(), sf_of_.end(), [](auto& v) { return v.has_value(); }));
    }

    friend bool operator==(const Assignment& a, const Assignment& b)
    {
        return a.sf_of_ == b.sf_of_ && a.quotas_ == b.quotas_;
    }

private:
    std::vector<std::optional<int>> sf_of_;
    PerSf<std::vector<std::size_t>> members_{};
    Quotas quotas_ = kUnlimitedQuotas;
};

/// Lowest transmit power an assigned device may use, in mW (-60 dBm).
inline constexpr double kPowerFloorMw = 1e-6;

/// Transmit powers in mW indexed by device; entries of unassigned devices
/// are ignored.
class PowerVector {
public:
    PowerVector() = default;
    PowerVector(std::size_t num_devices, double value_mw, double p_max_mw)
        : p_(num_devices, value_mw), p_max_(p_max_mw)
    {
        for (double& v : p_)
            v = clamp(v);
    }

    static PowerVector uniform_max(const Deployment& dep)
    {
        return PowerVector(dep.size(), dep.p_max_mw(), dep.p_max_mw());
    }

    std::size_t size() const { return p_.size(); }
    double operator[](std::size_t n) const { return p_[n]; }
    double p_max_mw() const { return p_max_; }
    void set(std::size_t n, double mw) { p_.at(n) = clamp(mw); }
    const std::vector<double>& values() const { return p_; }

    double mean_over(const std::vector<std::size_t>& devices) const
    {
        if (devices.empty())
            return 0.0;
        double sum = 0.0;
        for (std::size_t n : devices)
            sum += p_[n];
        return sum / static_cast<double>(devices.size());
    }

private:
    double clamp(double v) const { return std::clamp(v, kPowerFloorMw, p_max_); }

    std::vector<double> p_;
    double p_max_ = 0.0;
};

}  // namespace lorajoint
