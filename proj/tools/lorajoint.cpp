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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lorajoint/lorajoint.hpp"

namespace {

using lorajoint::format_number;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Settings given on the command line, keyed like the config file.
struct FlagValues {
    std::string config_path;
    std::map<std::string, std::string> settings;
};

void add_setting_flag(CLI::App* cmd, FlagValues& flags, const std::string& flag, const std::string& key,
                      const std::string& help)
{
    cmd->add_option_function<std::string>(
        flag, [&flags, key](const std::string& v) { flags.settings[key] = v; }, help);
}

void add_common_flags(CLI::App* cmd, FlagValues& flags)
{
    cmd->add_option("--config", flags.config_path, "key = value settings file");
    add_setting_flag(cmd, flags, "--scheme", "schemes", "comma-separated scheme names, or 'all'");
    add_setting_flag(cmd, flags, "--n-range", "n_range", "device counts A:B");
    add_setting_flag(cmd, flags, "--trials", "trials", "trials per (scheme, N)");
    add_setting_flag(cmd, flags, "--seed", "seed", "base seed");
    add_setting_flag(cmd, flags, "--quotas", "quotas", "six SF quotas, SF7..SF12");
    add_setting_flag(cmd, flags, "--epsilon", "epsilon", "bisection accuracy in bit/s");
    add_setting_flag(cmd, flags, "--approx", "approx", "linear | quadratic");
    add_setting_flag(cmd, flags, "--out", "out", "output directory");
    add_setting_flag(cmd, flags, "--workers", "workers", "worker threads");
    add_setting_flag(cmd, flags, "--quota-trials", "quota_trials", "trials per quota-study cell");
    add_setting_flag(cmd, flags, "--verbosity", "verbosity", "0 = quiet, 1 = progress on stderr");
}

lorajoint::RunConfig resolve(const FlagValues& flags)
{
    lorajoint::RunConfig cfg;
    if (!flags.config_path.empty())
        lorajoint::load_config_file(cfg, flags.config_path);
    for (const auto& [key, value] : flags.settings)
        lorajoint::apply_setting(cfg, key, value);
    lorajoint::validate(cfg);
    return cfg;
}

std::string header_comment(const lorajoint::RunConfig& cfg)
{
    std::string out;
    for (const auto& [k, v] : lorajoint::effective_settings(cfg))
        out += "# " + k + " = " + v + "\n";
    return out;
}

ordered_json config_json(const lorajoint::RunConfig& cfg)
{
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : lorajoint::effective_settings(cfg))
        j[k] = v;
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string sweep_csv(const lorajoint::RunConfig& cfg, const std::vector<lorajoint::SweepRecord>& records)
{
    std::string out = header_comment(cfg);
    out += "scheme,n,metric,mean,ci95,trials\n";
    auto row = [&](const lorajoint::SweepRecord& r, std::string_view metric, double mean, double ci) {
        out += std::string(lorajoint::scheme_name(r.scheme)) + "," + std::to_string(r.n) + "," + std::string(metric)
               + "," + format_number(mean) + "," + format_number(ci) + "," + std::to_string(r.trials) + "\n";
    };
    for (const auto& r : records) {
        for (std::size_t k = 0; k < lorajoint::kMetricNames.size(); ++k)
            row(r, lorajoint::kMetricNames[k], r.metrics[k].mean, r.metrics[k].ci95);
        row(r, "jain_undefined_count", static_cast<double>(r.jain_undefined), 0.0);
        row(r, "power_fallback_count", static_cast<double>(r.power_fallbacks), 0.0);
        row(r, "solver_failure_count", static_cast<double>(r.solver_failures), 0.0);
    }
    return out;
}

std::string sweep_json(const lorajoint::RunConfig& cfg, const std::vector<lorajoint::SweepRecord>& records)
{
    ordered_json j;
    j["config"] = config_json(cfg);
    j["records"] = ordered_json::array();
    for (const auto& r : records) {
        ordered_json rec;
        rec["scheme"] = lorajoint::scheme_name(r.scheme);
        rec["n"] = r.n;
        rec["trials"] = r.trials;
        ordered_json metrics = ordered_json::object();
        for (std::size_t k = 0; k < lorajoint::kMetricNames.size(); ++k)
            metrics[std::string(lorajoint::kMetricNames[k])] = {{"mean", r.metrics[k].mean},
                                                               {"ci95", r.metrics[k].ci95}};
        rec["metrics"] = std::move(metrics);
        rec["jain_undefined_count"] = r.jain_undefined;
        rec["power_fallback_count"] = r.power_fallbacks;
        rec["solver_failure_count"] = r.solver_failures;
        j["records"].push_back(std::move(rec));
    }
    return j.dump(2) + "\n";
}

void print_metric_matrix(const lorajoint::RunConfig& cfg, const std::vector<lorajoint::SweepRecord>& records,
                         std::string_view metric)
{
    std::printf("%s (mean over %zu trials)\n", std::string(metric).c_str(), cfg.spec.trials);
    std::printf("%-18s", "scheme \\ N");
    for (std::size_t n : cfg.spec.n_values)
        std::printf(" %10zu", n);
    std::printf("\n");
    for (auto scheme : cfg.effective_schemes()) {
        std::printf("%-18s", std::string(lorajoint::scheme_name(scheme)).c_str());
        for (const auto& r : records) {
            if (r.scheme == scheme)
                std::printf(" %10.4g", r.metric(metric).mean);
        }
        std::printf("\n");
    }
}

int execute_sweep(const lorajoint::RunConfig& cfg, const std::vector<std::string>& metrics)
{
    lorajoint::ExperimentSpec spec = cfg.spec;
    spec.schemes = cfg.effective_schemes();
    lorajoint::SweepProgress progress;
    if (cfg.verbosity > 0) {
        progress = [](const lorajoint::SweepRecord& r) {
            std::fprintf(stderr, "%s N=%zu done\n", std::string(lorajoint::scheme_name(r.scheme)).c_str(), r.n);
        };
    }
    const auto records = lorajoint::sweep(spec, cfg.workers, progress);
    const std::filesystem::path dir(cfg.out_dir);
    write_file(dir / "results.csv", sweep_csv(cfg, records));
    write_file(dir / "results.json", sweep_json(cfg, records));

    std::printf("%s", header_comment(cfg).c_str());
    for (const auto& m : metrics) {
        print_metric_matrix(cfg, records, m);
        std::printf("\n");
    }
    std::printf("wrote %s and %s\n", (dir / "results.csv").string().c_str(), (dir / "results.json").string().c_str());

    for (const auto& r : records) {
        const double rate = static_cast<double>(r.solver_failures) / static_cast<double>(r.trials);
        if (rate > cfg.failure_budget) {
            std::fprintf(stderr, "error: %s at N=%zu: solver failures %zu/%zu exceed budget %s\n",
                         std::string(lorajoint::scheme_name(r.scheme)).c_str(), r.n, r.solver_failures, r.trials,
                         format_number(cfg.failure_budget).c_str());
            return kExitFailure;
        }
    }
    return 0;
}

int execute_table(const lorajoint::RunConfig& cfg, bool quota, bool write)
{
    const auto table = lorajoint::make_sf_table(cfg.spec.channel);
    std::string csv = header_comment(cfg);
    csv += "sf,bitrate_bps,rx_threshold_db,inter_sf_threshold_db,coverage_m\n";
    std::printf("%4s %12s %10s %10s %12s\n", "SF", "bitrate_kbps", "rx_db", "inter_db", "coverage_m");
    for (const auto& row : table) {
        std::printf("%4d %12.2f %10.1f %10.1f %12.1f\n", row.sf, row.bitrate_bps / 1000.0, row.rx_threshold_db,
                    row.inter_sf_threshold_db, row.coverage_m);
        csv += std::to_string(row.sf) + "," + format_number(row.bitrate_bps) + "," + format_number(row.rx_threshold_db)
               + "," + format_number(row.inter_sf_threshold_db) + "," + format_number(row.coverage_m) + "\n";
    }
    const std::filesystem::path dir(cfg.out_dir);
    if (write)
        write_file(dir / "sf_table.csv", csv);
    if (!quota)
        return 0;

    lorajoint::QuotaStudyOptions opt;
    opt.trials = cfg.quota_trials;
    opt.seed = cfg.spec.seed;
    opt.workers = cfg.workers;
    const auto study = lorajoint::quota_study(cfg.spec.channel, opt);
    std::string qcsv = header_comment(cfg);
    qcsv += "quota,sf,min_rate_bps,trials\n";
    std::printf("\nminimal rate in bit/s, %zu trials per cell\n%6s", study.trials, "quota");
    for (int m = lorajoint::kMinSf; m <= lorajoint::kMaxSf; ++m)
        std::printf(" %11s", ("SF" + std::to_string(m)).c_str());
    std::printf("\n");
    for (std::size_t k = 0; k < study.cells.size(); ++k) {
        std::printf("%6zu", k + 1);
        for (int m = lorajoint::kMinSf; m <= lorajoint::kMaxSf; ++m) {
            const double v = study.cells[k][lorajoint::sf_index(m)];
            std::printf(" %11.4g", v);
            qcsv += std::to_string(k + 1) + "," + std::to_string(m) + "," + format_number(v) + ","
                    + std::to_string(study.trials) + "\n";
        }
        std::printf("\n");
    }
    std::string sel;
    for (int q : study.selected)
        sel += (sel.empty() ? "" : ",") + std::to_string(q);
    std::printf("selected quotas: (%s)\n", sel.c_str());
    if (write)
        write_file(dir / "quota_study.csv", qcsv + "# selected = " + sel + "\n");
    return 0;
}

int execute_validate(const lorajoint::RunConfig& cfg, lorajoint::ValidationOptions opt, bool write)
{
    opt.seed = cfg.spec.seed;
    opt.channel = cfg.spec.channel;
    const auto reports = lorajoint::run_validation(opt);
    ordered_json j;
    j["config"] = config_json(cfg);
    j["capture_perturbation"] = opt.capture_perturbation;
    j["suites"] = ordered_json::array();
    bool all = true;
    for (const auto& r : reports) {
        std::printf("%s %-10s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        j["suites"].push_back({{"name", r.name},
                               {"passed", r.passed},
                               {"cases", r.cases},
                               {"failures", r.failures},
                               {"detail", r.detail}});
        all = all && r.passed;
    }
    if (write)
        write_file(std::filesystem::path(cfg.out_dir) / "validation.json", j.dump(2) + "\n");
    return all ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Joint LoRa spreading-factor and power allocation simulator"};
    app.require_subcommand(1);

    FlagValues run_flags, sweep_flags, table_flags, validate_flags;

    auto* run = app.add_subcommand("run", "Monte Carlo sweep; writes CSV and JSON, prints a summary");
    add_common_flags(run, run_flags);

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep; writes CSV and JSON, prints chosen metrics");
    add_common_flags(sweep, sweep_flags);
    std::vector<std::string> sweep_metrics{"min_rate"};
    sweep->add_option("--metric", sweep_metrics, "metric(s) to print")
        ->check(CLI::IsMember(std::vector<std::string>(lorajoint::kMetricNames.begin(), lorajoint::kMetricNames.end())));

    auto* table = app.add_subcommand("table", "SF characteristics table and optional quota study");
    add_common_flags(table, table_flags);
    bool quota_study = false;
    table->add_flag("--quota-study", quota_study, "also run the per-SF quota study");

    auto* validate = app.add_subcommand("validate", "Oracle suites: capture, stability, bisection");
    add_common_flags(validate, validate_flags);
    lorajoint::ValidationOptions vopt;
    validate->add_option("--capture-cases", vopt.capture_cases, "random capture configurations");
    validate->add_option("--capture-samples", vopt.capture_samples, "Monte Carlo samples per configuration");
    validate->add_option("--stability-cases", vopt.stability_cases, "random deployments for the matching suite");
    validate->add_option("--perturb-capture", vopt.capture_perturbation,
                         "multiply the closed-form capture probability (negative control)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*run) {
            const auto cfg = resolve(run_flags);
            return execute_sweep(cfg, {"min_rate", "jain", "mean_power"});
        }
        if (*sweep)
            return execute_sweep(resolve(sweep_flags), sweep_metrics);
        if (*table)
            return execute_table(resolve(table_flags), quota_study, table_flags.settings.count("out") > 0);
        if (*validate)
            return execute_validate(resolve(validate_flags), vopt, validate_flags.settings.count("out") > 0);
    } catch (const lorajoint::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const lorajoint::DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return 0;
}
