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

#include <sstream>

#include <gtest/gtest.h>

#include "lorajoint/config.hpp"

namespace lj = lorajoint;

TEST(Config, DefaultsAreValid)
{
    lj::RunConfig cfg;
    EXPECT_NO_THROW(lj::validate(cfg));
    EXPECT_EQ(cfg.effective_schemes().size(), lj::kAllSchemes.size());
}

TEST(Config, ParsesFile)
{
    lj::RunConfig cfg;
    std::istringstream in(R"(# scenario 2
schemes = prop_sf, conv_random
n_range = 4:9
trials = 250
seed = 12345
quotas = 3,1,1,1,1,1   # SF7 takes three
epsilon = 0.5
p_max_dbm = 10
workers = 3
)");
    lj::load_config(cfg, in);
    EXPECT_EQ(cfg.spec.schemes, (std::vector<lj::Scheme>{lj::Scheme::prop_sf, lj::Scheme::conv_random}));
    EXPECT_EQ(cfg.spec.n_values.front(), 4u);
    EXPECT_EQ(cfg.spec.n_values.back(), 9u);
    EXPECT_EQ(cfg.spec.trials, 250u);
    EXPECT_EQ(cfg.spec.seed, 12345u);
    EXPECT_EQ(cfg.spec.quotas, (lj::Quotas{3, 1, 1, 1, 1, 1}));
    EXPECT_DOUBLE_EQ(cfg.spec.epsilon, 0.5);
    EXPECT_DOUBLE_EQ(cfg.spec.channel.p_max_dbm, 10.0);
    EXPECT_EQ(cfg.workers, 3u);
}

TEST(Config, LaterSettingsOverrideEarlier)
{
    lj::RunConfig cfg;
    std::istringstream in("trials = 10\n");
    lj::load_config(cfg, in);
    lj::apply_setting(cfg, "trials", "20");
    EXPECT_EQ(cfg.spec.trials, 20u);
}

TEST(Config, RejectsBadInput)
{
    lj::RunConfig cfg;
    EXPECT_THROW(lj::apply_setting(cfg, "quotas", "0,1,1,1,1,1"), lj::ConfigError);
    EXPECT_THROW(lj::apply_setting(cfg, "quotas", "1,1,1"), lj::ConfigError);
    EXPECT_THROW(lj::apply_setting(cfg, "n_range", "5:3"), lj::ConfigError);
    EXPECT_THROW(lj::apply_setting(cfg, "n_range", "1:3"), lj::ConfigError);
    EXPECT_THROW(lj::apply_setting(cfg, "trials", "ten"), lj::ConfigError);
    EXPECT_THROW(lj::apply_setting(cfg, "epsilon", "1.0x"), lj::ConfigError);
    EXPECT_THROW(lj::apply_setting(cfg, "approx", "cubic"), lj::ConfigError);
    EXPECT_THROW(lj::apply_setting(cfg, "schemes", "prop_sf,bogus"), lj::ConfigError);
    EXPECT_THROW(lj::apply_setting(cfg, "colour", "blue"), lj::ConfigError);
    std::istringstream in("trials 10\n");
    EXPECT_THROW(lj::load_config(cfg, in), lj::ConfigError);
}

TEST(Config, ValidationCatchesDomainErrors)
{
    lj::RunConfig cfg;
    lj::apply_setting(cfg, "epsilon", "0");
    EXPECT_THROW(lj::validate(cfg), lj::ConfigError);
    cfg = {};
    lj::apply_setting(cfg, "coding_rate_x", "7");
    EXPECT_THROW(lj::validate(cfg), lj::ConfigError);
    cfg = {};
    lj::apply_setting(cfg, "schemes", "prop_sf_linear");
    lj::apply_setting(cfg, "approx", "quadratic");
    EXPECT_THROW(lj::validate(cfg), lj::ConfigError);
}

TEST(Config, ApproxFiltersPowerSchemes)
{
    lj::RunConfig cfg;
    lj::apply_setting(cfg, "approx", "linear");
    const auto s = cfg.effective_schemes();
    EXPECT_NE(std::find(s.begin(), s.end(), lj::Scheme::prop_sf_linear), s.end());
    EXPECT_EQ(std::find(s.begin(), s.end(), lj::Scheme::prop_sf_quadratic), s.end());
}

TEST(Config, EffectiveSettingsEchoSeed)
{
    lj::RunConfig cfg;
    lj::apply_setting(cfg, "seed", "4242");
    bool found = false;
    for (const auto& [k, v] : lj::effective_settings(cfg))
        found = found || (k == "seed" && v == "4242");
    EXPECT_TRUE(found);
}
