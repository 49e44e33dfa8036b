// SPDX-License-Identifier: Apache-2.0
//
// ansec - artificial-noise secrecy simulator for MIMO wiretap channels
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "ansec/harness.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace ansec;

namespace {

ExperimentConfig small_error_rate()
{
    ExperimentConfig c;
    c.experiment = ExperimentKind::error_rate;
    c.scenario.n_a = 5;
    c.scenario.n_b = 4;
    c.scenario.n_e = 10;
    c.scenario.qam_order = 16;
    c.snr_grid_db = {10.0, 30.0};
    c.n_trials = 60;
    c.pilot_trials = 50;
    c.master_seed = 99;
    return c;
}

void expect_validation(const nlohmann::json& j)
{
    try {
        config_from_json(j).validate();
        FAIL() << j.dump();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::validation) << e.what();
    }
}

} // namespace

TEST(Seeds, DeterministicAndDistinct)
{
    EXPECT_EQ(derive_trial_seed(1, 2, 3, 4), derive_trial_seed(1, 2, 3, 4));
    EXPECT_NE(derive_trial_seed(1, 2, 3, 4), derive_trial_seed(1, 2, 3, 5));
    EXPECT_NE(derive_trial_seed(1, 2, 3, 4), derive_trial_seed(1, 2, 4, 3));
    EXPECT_NE(derive_trial_seed(1, 2, 3, 4), derive_trial_seed(2, 2, 3, 4));
}

TEST(Seeds, NoCollisionsInAMillion)
{
    std::vector<std::uint64_t> seeds;
    seeds.reserve(1000000);
    for (std::uint64_t p = 0; p < 10; ++p)
        for (std::uint64_t t = 0; t < 100000; ++t) seeds.push_back(derive_trial_seed(7, 1, p, t));
    std::sort(seeds.begin(), seeds.end());
    EXPECT_EQ(std::adjacent_find(seeds.begin(), seeds.end()), seeds.end());
}

TEST(Config, ParsesAndRoundTrips)
{
    const auto j = nlohmann::json::parse(R"({
        "experiment": "covering_ratio",
        "scenario": {"N_A": 7, "N_B": 6, "N_E": 14, "M": 16, "sigmaB2": 0.5, "sigmaE2": 0.0, "beta": 2.0,
                     "total_power_budget": 100},
        "precoder": "lattice", "lp_mode": "babai", "n_trials": 123, "master_seed": 18446744073709551615,
        "parallelism": 3, "noise_norm_scale": 10.0,
        "dimension_sweep": [{"N_A": 5, "N_B": 4, "N_E": 10}]
    })");
    const auto c = config_from_json(j);
    EXPECT_EQ(c.experiment, ExperimentKind::covering_ratio);
    EXPECT_EQ(c.scenario.n_a, 7);
    EXPECT_EQ(c.scenario.qam_order, 16);
    EXPECT_EQ(c.scenario.beta, 2.0);
    EXPECT_EQ(*c.scenario.total_power_budget, 100.0);
    EXPECT_EQ(c.precoders, PrecoderChoice::lattice);
    EXPECT_EQ(c.lp_mode, LpMode::babai);
    EXPECT_EQ(c.n_trials, 123u);
    EXPECT_EQ(c.master_seed, 18446744073709551615ULL);
    EXPECT_EQ(c.parallelism, 3u);
    ASSERT_EQ(c.dimension_sweep.size(), 1u);
    EXPECT_NO_THROW(c.validate());
    const auto back = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    expect_validation(nlohmann::json::parse(R"({"n_trails": 10})"));
    expect_validation(nlohmann::json::parse(R"({"scenario": {"NA": 10}})"));
    expect_validation(nlohmann::json::parse(R"({"experiment": "fig2"})"));
    expect_validation(nlohmann::json::parse(R"({"precoder": "zf"})"));
    expect_validation(nlohmann::json::parse(R"({"n_trials": -3})"));
    expect_validation(nlohmann::json::parse(R"({"n_trials": "many"})"));
    expect_validation(nlohmann::json::parse(R"({"dimension_sweep": [{"N_A": 4, "N_B": 4, "N_E": 8}],
                                                "experiment": "covering_ratio"})"));
}

TEST(Config, InvariantChecks)
{
    expect_validation(nlohmann::json::parse(R"({"experiment": "error_rate", "snr_grid_db": [1], "n_trials": 0})"));
    expect_validation(nlohmann::json::parse(R"({"experiment": "error_rate", "snr_grid_db": []})"));
    expect_validation(nlohmann::json::parse(R"({"experiment": "chi_check", "n_trials": 0})"));
    expect_validation(nlohmann::json::parse(R"({"experiment": "logdet_check", "n_trials": 100})"));
    expect_validation(nlohmann::json::parse(R"({"experiment": "error_rate", "snr_grid_db": [1],
                                                "scenario": {"N_B": 10}})"));
    ExperimentConfig c;
    c.experiment = ExperimentKind::chi_check;
    c.n_trials = 0;
    EXPECT_THROW(run_distribution_checks(c), Error);
}

TEST(Config, LoadFromFile)
{
    const auto path = std::filesystem::temp_directory_path() / "ansec_cfg_test.json";
    {
        std::ofstream f(path);
        f << R"({"experiment": "lattice_selftest", "n_trials": 10})";
    }
    EXPECT_EQ(load_config(path).experiment, ExperimentKind::lattice_selftest);
    {
        std::ofstream f(path);
        f << "{not json";
    }
    EXPECT_THROW(load_config(path), Error);
    EXPECT_THROW(load_config("/nonexistent/ansec.json"), Error);
}

TEST(ParallelMap, OrderedResultsAndFirstErrorWins)
{
    const auto r1 = parallel_map(1000, 1, [](std::size_t i) { return i * i; });
    const auto r4 = parallel_map(1000, 4, [](std::size_t i) { return i * i; });
    EXPECT_EQ(r1, r4);
    EXPECT_EQ(r4[999], 999u * 999u);
    try {
        parallel_map(100, 4, [](std::size_t i) -> int {
            if (i == 17 || i == 60)
                throw std::runtime_error("boom " + std::to_string(i));
            return 0;
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "boom 17");
    }
}

TEST(PowerIdentity, ViolationCarriesSeed)
{
    TransmitRecord rec;
    rec.u = ComplexVector::Ones(2);
    rec.v = ComplexVector::Ones(1);
    rec.x = ComplexVector::Ones(3);
    rec.data_power = 2.0;
    rec.noise_power = 1.0;
    EXPECT_NO_THROW(check_power_identity(rec, Precoder::svd, 5));
    rec.noise_power = 1.5;
    try {
        check_power_identity(rec, Precoder::svd, 12345);
        FAIL();
    } catch (const TrialError& e) {
        EXPECT_EQ(e.seed(), 12345u);
        EXPECT_EQ(e.kind(), ErrorKind::invariant_violation);
        EXPECT_NE(std::string(e.what()).find("12345"), std::string::npos);
    }
}

TEST(ErrorRate, UnprotectedNoiselessEveAlwaysWins)
{
    auto c = small_error_rate();
    c.noise_norm_override = 0.0;
    c.scenario.sigma_e2 = 0.0;
    const auto out = run_error_rate(c);
    ASSERT_EQ(out.rows.size(), 4u);
    for (const auto& r : out.rows) {
        EXPECT_EQ(*r.eve_block_error_rate, 0.0) << to_string(r.precoder);
        EXPECT_EQ(r.mean_c_r, 0.0);
        EXPECT_EQ(r.pr_c_r_below_beta, 1.0);
    }
}

TEST(ErrorRate, RowsAreConsistent)
{
    const auto c = small_error_rate();
    const auto out = run_error_rate(c);
    ASSERT_EQ(out.rows.size(), 4u);
    ASSERT_EQ(out.pilots.size(), 2u);
    for (const auto& r : out.rows) {
        EXPECT_EQ(r.trials, c.n_trials);
        EXPECT_EQ(*r.bob_block_error_rate * r.trials, static_cast<double>(*r.bob_errors));
        EXPECT_EQ(*r.eve_block_error_rate * r.trials, static_cast<double>(*r.eve_errors));
        for (double rate : {*r.bob_block_error_rate, *r.eve_block_error_rate, r.pr_c_r_below_beta}) {
            EXPECT_GE(rate, 0.0);
            EXPECT_LE(rate, 1.0);
        }
        EXPECT_GT(r.mean_total_power, 0.0);
        std::size_t hist = 0;
        for (auto h : r.c_r_histogram) hist += h;
        EXPECT_EQ(hist, c.n_trials);
    }
    // Bob improves with SNR for each precoder
    EXPECT_LE(*out.rows[2].bob_block_error_rate, *out.rows[0].bob_block_error_rate);
    EXPECT_LE(*out.rows[3].bob_block_error_rate, *out.rows[1].bob_block_error_rate);
}

TEST(ErrorRate, SinglePrecoderMatchesPairedRun)
{
    auto both = small_error_rate();
    auto lp = both;
    lp.precoders = PrecoderChoice::lattice;
    const auto a = run_error_rate(both);
    const auto b = run_error_rate(lp);
    ASSERT_EQ(b.rows.size(), 2u);
    EXPECT_EQ(*a.rows[1].bob_errors, *b.rows[0].bob_errors);
    EXPECT_EQ(*a.rows[1].eve_errors, *b.rows[0].eve_errors);
    EXPECT_EQ(a.rows[1].mean_c_r, b.rows[0].mean_c_r);
}

TEST(ErrorRate, CsvIndependentOfParallelism)
{
    auto c = small_error_rate();
    c.parallelism = 1;
    const auto a = results_csv(run_error_rate(c));
    c.parallelism = 4;
    const auto b = results_csv(run_error_rate(c));
    EXPECT_EQ(a, b);
    c.master_seed = 100;
    EXPECT_NE(results_csv(run_error_rate(c)), a);
}

TEST(CoveringRatio, SweepRowsAndNoiseScaling)
{
    ExperimentConfig c;
    c.experiment = ExperimentKind::covering_ratio;
    c.n_trials = 300;
    c.dimension_sweep = {{3, 2, 6}, {5, 4, 10}};
    c.scenario.beta = 20.0;  // high target so the probability is not trivially zero
    const auto base = run_covering_ratio(c);
    ASSERT_EQ(base.rows.size(), 4u);
    c.noise_norm_scale = 10.0;
    const auto loud = run_covering_ratio(c);
    for (std::size_t i = 0; i < base.rows.size(); ++i) {
        EXPECT_LE(loud.rows[i].pr_c_r_below_beta, base.rows[i].pr_c_r_below_beta);
        EXPECT_NEAR(loud.rows[i].mean_c_r, 10.0 * base.rows[i].mean_c_r, 1e-9 * loud.rows[i].mean_c_r);
    }
}

TEST(DistributionChecks, ChiReportPasses)
{
    ExperimentConfig c;
    c.experiment = ExperimentKind::chi_check;
    c.n_trials = 20000;
    c.parallelism = 2;
    const auto out = run_distribution_checks(c);
    ASSERT_TRUE(out.report);
    EXPECT_TRUE(out.report->pass());
    EXPECT_EQ(out.report->lines.size(), 3u);
}

TEST(Output, CsvQuotingAndManifest)
{
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");

    auto c = small_error_rate();
    c.snr_grid_db = {20.0};
    c.n_trials = 10;
    const auto out = run_error_rate(c);
    const auto csv = results_csv(out);
    EXPECT_EQ(csv.rfind("experiment,precoder,point_index,snr_db", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_EQ(csv.find("wall_time"), std::string::npos);

    const auto m = manifest_json(c, out);
    EXPECT_EQ(m["config"]["master_seed"], 99);
    EXPECT_EQ(m["software"]["version"], version);
    EXPECT_EQ(m["pilot_power"].size(), 2u);
    EXPECT_TRUE(m.contains("wall_time"));
    EXPECT_EQ(manifest_path("out/run.csv"), std::filesystem::path("out/run.manifest.json"));

    const auto dir = std::filesystem::temp_directory_path() / "ansec_out_test";
    std::filesystem::create_directories(dir);
    write_outputs(c, out, dir / "r.csv");
    EXPECT_TRUE(std::filesystem::exists(dir / "r.manifest.json"));
    std::ifstream f(dir / "r.csv", std::ios::binary);
    const std::string disk((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    EXPECT_EQ(disk, csv);
}
