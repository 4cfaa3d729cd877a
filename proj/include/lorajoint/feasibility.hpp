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
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "lorajoint/core_model.hpp"

namespace lorajoint {

enum class SystemKind { linear, quadratic };

/// One inequality constant + a.x + x'Qx <= 0 over the system's variables.
/// Q is dense row-major and may be empty for linear rows.
struct ConstraintRow {
    double constant = 0.0;
    std::vector<double> linear;
    std::vector<double> quadratic;
    /// For rows that are a constraint g(x) <= 0 multiplied through by x_k^2,
    /// the index k. Violations are then measured on g = row / x_k^2, which
    /// keeps the measure from vanishing as x_k goes to zero.
    std::optional<std::size_t> homogenizer;

    std::size_t num_vars() const { return linear.size(); }

    double evaluate(std::span<const double> x) const
    {
        double v = constant;
        const std::size_t n = linear.size();
        for (std::size_t j = 0; j < n; ++j)
            v += linear[j] * x[j];
        if (!quadratic.empty()) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < n; ++k)
                    v += quadratic[j * n + k] * x[j] * x[k];
            }
        }
        return v;
    }

    /// d(row)/dx, accumulated into grad with the given weight.
    void add_gradient(std::span<const double> x, double weight, std::span<double> grad) const
    {
        const std::size_t n = linear.size();
        for (std::size_t j = 0; j < n; ++j)
            grad[j] += weight * linear[j];
        if (!quadratic.empty()) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < n; ++k) {
                    const double q = quadratic[j * n + k];
                    grad[j] += weight * q * x[k];
                    grad[k] += weight * q * x[j];
                }
            }
        }
    }

    /// Largest coefficient magnitude; rows are compared in these units.
    double scale() const
    {
        double s = std::abs(constant);
        for (double v : linear)
            s = std::max(s, std::abs(v));
        for (double v : quadratic)
            s = std::max(s, std::abs(v));
        return s > 0.0 ? s : 1.0;
    }

    /// Row value in comparison units: divided by x_k^2 for homogenized rows,
    /// by scale() otherwise.
    double normalized(std::span<const double> x) const
    {
        if (homogenizer) {
            const double xk = x[*homogenizer];
            return evaluate(x) / (xk * xk);
        }
        return evaluate(x) / scale();
    }

    /// Gradient of normalized(x), accumulated into grad with the given weight.
    void add_normalized_gradient(std::span<const double> x, double weight, std::span<double> grad) const
    {
        if (!homogenizer) {
            add_gradient(x, weight / scale(), grad);
            return;
        }
        const std::size_t k = *homogenizer;
        const double xk2 = x[k] * x[k];
        add_gradient(x, weight / xk2, grad);
        grad[k] -= weight * 2.0 * evaluate(x) / (xk2 * x[k]);
    }

    bool has_quadratic_terms() const
    {
        return std::any_of(quadratic.begin(), quadratic.end(), [](double v) { return v != 0.0; });
    }
};

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const { return lower.size(); }

    double project(std::size_t j, double v) const { return std::clamp(v, lower[j], upper[j]); }

    bool contains(std::span<const double> x) const
    {
        for (std::size_t j = 0; j < lower.size(); ++j) {
            if (x[j] < lower[j] || x[j] > upper[j])
                return false;
        }
        return true;
    }
};

struct ConstraintSystem {
    SystemKind kind = SystemKind::linear;
    std::vector<ConstraintRow> rows;
    /// Extra rows bounding the region where the approximated rows are
    /// meaningful. Enforced exactly like `rows`.
    std::vector<ConstraintRow> domain;
    Box bounds;
    /// Device index of each variable.
    std::vector<std::size_t> devices;

    std::size_t num_vars() const { return bounds.size(); }

    /// Largest row value after normalization, clipped at zero.
    double max_violation(std::span<const double> x) const
    {
        double worst = 0.0;
        for_each_row([&](const ConstraintRow& row) { worst = std::max(worst, row.normalized(x)); });
        return worst;
    }

    template <typename F>
    void for_each_row(F&& f) const
    {
        for (const auto& row : rows)
            f(row);
        for (const auto& row : domain)
            f(row);
    }

    std::size_t total_rows() const { return rows.size() + domain.size(); }
};

enum class FeasibilityStatus { feasible, infeasible, numerical_failure };

struct FeasibilityResult {
    FeasibilityStatus status = FeasibilityStatus::infeasible;
    std::vector<double> witness;
    double max_violation = 0.0;
    std::size_t iterations = 0;
    /// Set when an infeasible verdict comes from a local search.
    bool heuristic = false;

    bool feasible() const { return status == FeasibilityStatus::feasible; }
};

inline constexpr double kLinearTolerance = 1e-9;
inline constexpr double kQuadraticTolerance = 1e-10;

namespace detail {

/// Dense simplex tableau with Bland's rule. Columns hold the structural
/// variables, one slack per row and the artificials; the last column is the
/// right-hand side.
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), t_(rows * (cols + 1), 0.0), basis_(rows) {}

    double& at(std::size_t r, std::size_t c) { return t_[r * (cols_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return t_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, cols_); }
    double rhs(std::size_t r) const { return at(r, cols_); }
    std::size_t& basis(std::size_t r) { return basis_[r]; }
    std::size_t basis(std::size_t r) const { return basis_[r]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    void pivot(std::size_t pr, std::size_t pc)
    {
        const double pv = at(pr, pc);
        for (std::size_t c = 0; c <= cols_; ++c)
            at(pr, c) /= pv;
        for (std::size_t r = 0; r < rows_; ++r) {
            if (r == pr)
                continue;
            const double f = at(r, pc);
            if (f == 0.0)
                continue;
            for (std::size_t c = 0; c <= cols_; ++c)
                at(r, c) -= f * at(pr, c);
        }
        basis_[pr] = pc;
    }

    enum class Outcome { optimal, unbounded, iteration_limit };

    /// Minimizes cost.x over the current basic feasible solution. Columns with
    /// allowed[c] == false never enter the basis.
    Outcome minimize(const std::vector<double>& cost, const std::vector<bool>& allowed, std::size_t& iterations,
                     std::size_t max_iterations, double eps = 1e-11)
    {
        std::vector<double> reduced(cols_);
        while (true) {
            if (iterations >= max_iterations)
                return Outcome::iteration_limit;
            for (std::size_t c = 0; c < cols_; ++c) {
                double d = cost[c];
                for (std::size_t r = 0; r < rows_; ++r)
                    d -= cost[basis_[r]] * at(r, c);
                reduced[c] = d;
            }
            std::size_t enter = cols_;
            for (std::size_t c = 0; c < cols_; ++c) {
                if (allowed[c] && reduced[c] < -eps) {
                    enter = c;
                    break;
                }
            }
            if (enter == cols_)
                return Outcome::optimal;
            std::size_t leave = rows_;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < rows_; ++r) {
                const double a = at(r, enter);
                if (a <= eps)
                    continue;
                const double ratio = std::max(rhs(r), 0.0) / a;
                if (leave == rows_ || ratio < best - eps
                    || (std::abs(ratio - best) <= eps && basis_[r] < basis_[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave == rows_)
                return Outcome::unbounded;
            pivot(leave, enter);
            ++iterations;
        }
    }

    double objective(const std::vector<double>& cost) const
    {
        double v = 0.0;
        for (std::size_t r = 0; r < rows_; ++r)
            v += cost[basis_[r]] * rhs(r);
        return v;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> t_;
    std::vector<std::size_t> basis_;
};

inline std::vector<double> midpoint(const Box& b)
{
    std::vector<double> x(b.size());
    for (std::size_t j = 0; j < b.size(); ++j)
        x[j] = 0.5 * (b.lower[j] + b.upper[j]);
    return x;
}

}  // namespace detail

struct LinearSolveOptions {
    /// After phase 1, move to the feasible vertex with the smallest variable sum.
    bool minimize_sum = false;
    std::size_t max_iterations = 5000;
};

/// Phase-1 simplex over the box: minimizes the total violation of the
/// (normalized) rows. Feasible iff that optimum is within kLinearTolerance.
inline FeasibilityResult solve_linear(const ConstraintSystem& sys, const LinearSolveOptions& opt = {})
{
    if (sys.kind != SystemKind::linear)
        throw DomainError("solve_linear: system is not linear");
    FeasibilityResult res;
    const std::size_t n = sys.num_vars();
    if (sys.total_rows() == 0) {
        res.status = FeasibilityStatus::feasible;
        res.witness = detail::midpoint(sys.bounds);
        return res;
    }
    std::vector<const ConstraintRow*> all;
    sys.for_each_row([&](const ConstraintRow& row) {
        if (row.has_quadratic_terms())
            throw DomainError("solve_linear: row has quadratic terms");
        all.push_back(&row);
    });

    // Shift to y = x - lower so that y >= 0; upper bounds become rows.
    const std::size_t m_rows = all.size() + n;
    std::vector<std::vector<double>> a(m_rows, std::vector<double>(n, 0.0));
    std::vector<double> b(m_rows, 0.0);
    for (std::size_t r = 0; r < all.size(); ++r) {
        const auto& row = *all[r];
        const double s = row.scale();
        double shift = row.constant;
        for (std::size_t j = 0; j < n; ++j) {
            a[r][j] = row.linear[j] / s;
            shift += row.linear[j] * sys.bounds.lower[j];
        }
        b[r] = -shift / s;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t r = all.size() + j;
        const double width = sys.bounds.upper[j] - sys.bounds.lower[j];
        const double s = std::max(1.0, std::abs(width));
        a[r][j] = 1.0 / s;
        b[r] = width / s;
    }

    std::vector<std::size_t> art_of_row(m_rows, 0);
    std::size_t num_art = 0;
    for (std::size_t r = 0; r < m_rows; ++r) {
        if (b[r] < 0.0)
            art_of_row[r] = ++num_art;
    }
    const std::size_t cols = n + m_rows + num_art;
    detail::Tableau tab(m_rows, cols);
    for (std::size_t r = 0; r < m_rows; ++r) {
        const double sign = b[r] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j)
            tab.at(r, j) = sign * a[r][j];
        tab.at(r, n + r) = sign;
        tab.rhs(r) = sign * b[r];
        if (art_of_row[r]) {
            const std::size_t c = n + m_rows + art_of_row[r] - 1;
            tab.at(r, c) = 1.0;
            tab.basis(r) = c;
        } else {
            tab.basis(r) = n + r;
        }
    }

    std::vector<double> phase1_cost(cols, 0.0);
    for (std::size_t c = n + m_rows; c < cols; ++c)
        phase1_cost[c] = 1.0;
    std::vector<bool> allowed(cols, true);
    auto outcome = tab.minimize(phase1_cost, allowed, res.iterations, opt.max_iterations);
    if (outcome != detail::Tableau::Outcome::optimal) {
        res.status = FeasibilityStatus::numerical_failure;
        return res;
    }
    const double total_violation = tab.objective(phase1_cost);

    auto extract = [&] {
        std::vector<double> x(sys.bounds.lower);
        for (std::size_t r = 0; r < m_rows; ++r) {
            if (tab.basis(r) < n)
                x[tab.basis(r)] += std::max(tab.rhs(r), 0.0);
        }
        for (std::size_t j = 0; j < n; ++j)
            x[j] = sys.bounds.project(j, x[j]);
        return x;
    };

    if (total_violation > kLinearTolerance) {
        res.status = FeasibilityStatus::infeasible;
        res.witness = extract();
        res.max_violation = sys.max_violation(res.witness);
        return res;
    }

    if (opt.minimize_sum) {
        // Drive zero-level artificials out of the basis, then forbid them.
        for (std::size_t r = 0; r < m_rows; ++r) {
            if (tab.basis(r) < n + m_rows)
                continue;
            for (std::size_t c = 0; c < n + m_rows; ++c) {
                if (std::abs(tab.at(r, c)) > 1e-9) {
                    tab.pivot(r, c);
                    break;
                }
            }
        }
        for (std::size_t c = n + m_rows; c < cols; ++c)
            allowed[c] = false;
        std::vector<double> phase2_cost(cols, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            phase2_cost[j] = 1.0;
        outcome = tab.minimize(phase2_cost, allowed, res.iterations, opt.max_iterations);
        if (outcome != detail::Tableau::Outcome::optimal) {
            res.status = FeasibilityStatus::numerical_failure;
            return res;
        }
    }

    res.witness = extract();
    res.max_violation = sys.max_violation(res.witness);
    // Replay guards against round-off in the tableau.
    res.status = res.max_violation <= 1e3 * kLinearTolerance ? FeasibilityStatus::feasible
                                                             : FeasibilityStatus::numerical_failure;
    return res;
}

struct QuadraticSolveOptions {
    std::size_t starts = 8;
    std::size_t max_iterations = 200;
    std::uint64_t seed = 0x5eed;
    /// Lower a feasible witness coordinate by coordinate while it stays
    /// feasible.
    bool minimize_sum = false;
    std::size_t reduction_passes = 4;
};

namespace detail {

inline double penalty(const ConstraintSystem& sys, std::span<const double> x)
{
    double f = 0.0;
    sys.for_each_row([&](const ConstraintRow& row) {
        const double v = row.normalized(x);
        if (v > 0.0)
            f += v * v;
    });
    return f;
}

inline void penalty_gradient(const ConstraintSystem& sys, std::span<const double> x, std::span<double> grad)
{
    std::fill(grad.begin(), grad.end(), 0.0);
    sys.for_each_row([&](const ConstraintRow& row) {
        const double v = row.normalized(x);
        if (v > 0.0)
            row.add_normalized_gradient(x, 2.0 * v, grad);
    });
}

struct DescentResult {
    std::vector<double> x;
    double objective = 0.0;
    std::size_t iterations = 0;
    bool diverged = false;
};

/// Spectral projected gradient (Barzilai-Borwein steps, nonmonotone Armijo
/// search) on the squared violation penalty over the box.
inline DescentResult projected_descent(const ConstraintSystem& sys, std::vector<double> x, std::size_t max_iter)
{
    const std::size_t n = x.size();
    const auto& lo = sys.bounds.lower;
    const auto& hi = sys.bounds.upper;
    for (std::size_t j = 0; j < n; ++j)
        x[j] = std::clamp(x[j], lo[j], hi[j]);

    constexpr std::size_t kMemory = 10;
    constexpr double kLambdaMin = 1e-12;
    constexpr double kLambdaMax = 1e12;

    DescentResult out;
    std::vector<double> g(n), gn(n), d(n), xt(n);
    double f = penalty(sys, x);
    penalty_gradient(sys, x, g);
    std::vector<double> history{f};
    double lambda = 1.0;
    {
        double dn = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            dn = std::max(dn, std::abs(std::clamp(x[j] - g[j], lo[j], hi[j]) - x[j]));
        if (dn > 0.0)
            lambda = std::clamp(1.0 / dn, kLambdaMin, kLambdaMax);
    }
    for (std::size_t it = 0; it < max_iter; ++it) {
        out.iterations = it;
        if (!std::isfinite(f)) {
            out.diverged = true;
            break;
        }
        if (f <= 1e-3 * kQuadraticTolerance)
            break;
        double gtd = 0.0;
        double dnorm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            d[j] = std::clamp(x[j] - lambda * g[j], lo[j], hi[j]) - x[j];
            gtd += g[j] * d[j];
            dnorm = std::max(dnorm, std::abs(d[j]));
        }
        if (dnorm < 1e-14 || gtd >= 0.0)
            break;
        const double f_ref = *std::max_element(history.begin(), history.end());
        double alpha = 1.0;
        double ft = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t j = 0; j < n; ++j)
                xt[j] = std::clamp(x[j] + alpha * d[j], lo[j], hi[j]);
            ft = penalty(sys, xt);
            if (ft <= f_ref + 1e-4 * alpha * gtd) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            break;
        penalty_gradient(sys, xt, gn);
        double ss = 0.0, sy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double sj = xt[j] - x[j];
            ss += sj * sj;
            sy += sj * (gn[j] - g[j]);
        }
        lambda = sy > 0.0 ? std::clamp(ss / sy, kLambdaMin, kLambdaMax) : kLambdaMax;
        x.swap(xt);
        g.swap(gn);
        f = ft;
        history.push_back(f);
        if (history.size() > kMemory)
            history.erase(history.begin());
    }
    out.x = std::move(x);
    out.objective = f;
    return out;
}

/// Greedy power reduction: each coordinate in turn drops to the smallest
/// value (found by bisection) at which the penalty stays within tolerance.
inline void reduce_coordinates(const ConstraintSystem& sys, std::vector<double>& x, std::size_t passes)
{
    auto ok = [&] { return penalty(sys, x) <= kQuadraticTolerance; };
    for (std::size_t pass = 0; pass < passes; ++pass) {
        bool moved = false;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double start = x[j];
            double hi = start;
            double lo = sys.bounds.lower[j];
            x[j] = lo;
            if (!ok()) {
                for (int it = 0; it < 50 && hi - lo > 1e-9 * hi; ++it) {
                    x[j] = 0.5 * (lo + hi);
                    if (ok())
                        hi = x[j];
                    else
                        lo = x[j];
                }
                x[j] = hi;
            }
            moved = moved || x[j] < start;
        }
        if (!moved)
            break;
    }
}

}  // namespace detail

/// Minimizes the summed squared row violation over the box from several
/// starting points. Feasible iff the best start reaches kQuadraticTolerance.
/// The start with the lowest penalty wins, ties going to the lower index.
/// Starts are tried in order and the search ends at the first feasible one.
inline FeasibilityResult solve_quadratic(const ConstraintSystem& sys, const QuadraticSolveOptions& opt = {})
{
    if (sys.kind != SystemKind::quadratic)
        throw DomainError("solve_quadratic: system is not quadratic");
    FeasibilityResult res;
    const std::size_t n = sys.num_vars();
    if (sys.total_rows() == 0) {
        res.status = FeasibilityStatus::feasible;
        res.witness = detail::midpoint(sys.bounds);
        return res;
    }

    std::vector<std::vector<double>> starts;
    starts.push_back(sys.bounds.upper);
    starts.push_back(detail::midpoint(sys.bounds));
    starts.push_back(sys.bounds.lower);
    std::mt19937_64 gen(opt.seed);
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (starts.size() < std::max<std::size_t>(opt.starts, 8)) {
        std::vector<double> x(n);
        const bool corner = starts.size() % 2 == 1;
        for (std::size_t j = 0; j < n; ++j) {
            const double lo = sys.bounds.lower[j];
            const double hi = sys.bounds.upper[j];
            x[j] = corner ? (coin(gen) ? hi : lo) : lo + unit(gen) * (hi - lo);
        }
        starts.push_back(std::move(x));
    }

    std::size_t best = starts.size();
    detail::DescentResult best_run;
    bool all_diverged = true;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        auto run = detail::projected_descent(sys, starts[s], opt.max_iterations);
        res.iterations += run.iterations;
        if (run.diverged)
            continue;
        all_diverged = false;
        // Penalties within tolerance all count as zero, so the first
        // feasible start wins outright.
        const bool ok = run.objective <= kQuadraticTolerance;
        if (best == starts.size() || ok || run.objective < best_run.objective) {
            best = s;
            best_run = std::move(run);
        }
        if (ok)
            break;
    }
    if (all_diverged) {
        res.status = FeasibilityStatus::numerical_failure;
        return res;
    }
    if (opt.minimize_sum && best_run.objective <= kQuadraticTolerance)
        detail::reduce_coordinates(sys, best_run.x, opt.reduction_passes);
    res.witness = best_run.x;
    res.max_violation = sys.max_violation(res.witness);
    if (detail::penalty(sys, res.witness) <= kQuadraticTolerance) {
        res.status = FeasibilityStatus::feasible;
    } else {
        res.status = FeasibilityStatus::infeasible;
        res.heuristic = true;
    }
    return res;
}

inline FeasibilityResult solve(const ConstraintSystem& sys)
{
    if (sys.kind == SystemKind::linear)
        return solve_linear(sys, LinearSolveOptions{.minimize_sum = true});
    return solve_quadratic(sys, QuadraticSolveOptions{.minimize_sum = true});
}

}  // namespace lorajoint
