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

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<unsigned> parallelism;
    std::optional<std::string> precoder;
    std::string out = "results.csv";
};

void add_common(CLI::App* sub, Overrides& o)
{
    sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--trials", o.trials, "trials per point");
    sub->add_option("--out", o.out, "CSV output path (manifest written alongside)");
    sub->add_option("--parallelism", o.parallelism, "worker threads (0 = all cores)");
    sub->add_option("--precoder", o.precoder, "svd, lattice or both")->check(CLI::IsMember({"svd", "lattice", "both"}));
}

ansec::ExperimentConfig build_config(const Overrides& o, ansec::ExperimentKind kind)
{
    ansec::ExperimentConfig c = o.config.empty() ? ansec::ExperimentConfig{} : ansec::load_config(o.config);
    c.experiment = kind;
    if (o.seed)
        c.master_seed = *o.seed;
    if (o.trials)
        c.n_trials = *o.trials;
    if (o.parallelism)
        c.parallelism = *o.parallelism;
    if (o.precoder)
        c.precoders = ansec::parse_precoder_choice(*o.precoder);
    return c;
}

void print_summary(const ansec::RunOutput& out)
{
    if (out.report) {
        for (const auto& l : out.report->lines)
            std::cout << (l.pass ? "PASS " : (l.gating ? "FAIL " : "info ")) << l.check << " = "
                      << ansec::format_number(l.value) << "  [" << ansec::format_number(l.lo) << ", "
                      << ansec::format_number(l.hi) << "]\n";
        return;
    }
    for (const auto& r : out.rows) {
        std::cout << ansec::to_string(r.precoder) << " point " << r.point_index;
        if (r.snr_db)
            std::cout << " snr " << ansec::format_number(*r.snr_db) << " dB  bob "
                      << ansec::format_number(*r.bob_block_error_rate) << "  eve "
                      << ansec::format_number(*r.eve_block_error_rate);
        else
            std::cout << " (" << r.dims.n_a << "," << r.dims.n_b << "," << r.dims.n_e << ")";
        std::cout << "  mean c_R " << ansec::format_number(r.mean_c_r) << "  Pr(c_R<beta) "
                  << ansec::format_number(r.pr_c_r_below_beta) << "\n";
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ansec: artificial-noise secrecy experiments for MIMO wiretap channels"};
    app.require_subcommand(1);
    Overrides o;
    const std::pair<const char*, ansec::ExperimentKind> commands[] = {
        {"error-rate", ansec::ExperimentKind::error_rate},
        {"covering-ratio", ansec::ExperimentKind::covering_ratio},
        {"chi-check", ansec::ExperimentKind::chi_check},
        {"logdet-check", ansec::ExperimentKind::logdet_check},
        {"lattice-selftest", ansec::ExperimentKind::lattice_selftest},
    };
    std::vector<std::pair<CLI::App*, ansec::ExperimentKind>> subs;
    for (const auto& [name, kind] : commands) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + ansec::to_string(kind) + " experiment");
        add_common(sub, o);
        subs.emplace_back(sub, kind);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        ansec::ExperimentKind kind{};
        for (const auto& [sub, k] : subs)
            if (sub->parsed())
                kind = k;
        const auto config = build_config(o, kind);
        const auto out = ansec::run_experiment(config);
        ansec::write_outputs(config, out, o.out);
        print_summary(out);
        std::cout << "wrote " << o.out << " and " << ansec::manifest_path(o.out).string() << "\n";
        return out.report && !out.report->pass() ? 3 : 0;
    } catch (const ansec::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ansec::ErrorKind::validation ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
