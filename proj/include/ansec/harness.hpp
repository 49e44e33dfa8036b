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

// Seeded Monte Carlo campaigns. Every trial draws from its own generator
// seeded by derive_trial_seed, so results do not depend on worker count.

#ifndef ANSEC_HARNESS_HPP
#define ANSEC_HARNESS_HPP

#include "ansec/lattice.hpp"
#include "ansec/matcore.hpp"
#include "ansec/secrecy.hpp"
#include "ansec/testing/oracles.hpp"
#include "ansec/wiretap.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace ansec {

inline constexpr const char* version = "0.1.0";

enum class ExperimentKind { error_rate, covering_ratio, chi_check, logdet_check, lattice_selftest };
enum class PrecoderChoice { svd, lattice, both };

inline const char* to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::error_rate: return "error_rate";
    case ExperimentKind::covering_ratio: return "covering_ratio";
    case ExperimentKind::chi_check: return "chi_check";
    case ExperimentKind::logdet_check: return "logdet_check";
    case ExperimentKind::lattice_selftest: return "lattice_selftest";
    }
    return "unknown";
}

inline const char* to_string(PrecoderChoice p)
{
    switch (p) {
    case PrecoderChoice::svd: return "svd";
    case PrecoderChoice::lattice: return "lattice";
    case PrecoderChoice::both: return "both";
    }
    return "unknown";
}

inline ExperimentKind parse_experiment(const std::string& s)
{
    for (auto k : {ExperimentKind::error_rate, ExperimentKind::covering_ratio, ExperimentKind::chi_check,
                   ExperimentKind::logdet_check, ExperimentKind::lattice_selftest})
        if (s == to_string(k))
            return k;
    throw Error(ErrorKind::validation, "unknown experiment '" + s + "'");
}

inline PrecoderChoice parse_precoder_choice(const std::string& s)
{
    if (s == "svd")
        return PrecoderChoice::svd;
    if (s == "lattice")
        return PrecoderChoice::lattice;
    if (s == "both")
        return PrecoderChoice::both;
    throw Error(ErrorKind::validation, "precoder must be svd, lattice or both, got '" + s + "'");
}

inline LpMode parse_lp_mode(const std::string& s)
{
    if (s == "exact")
        return LpMode::exact;
    if (s == "babai")
        return LpMode::babai;
    throw Error(ErrorKind::validation, "lp_mode must be exact or babai, got '" + s + "'");
}

struct Dimensions {
    int n_a = 10;
    int n_b = 9;
    int n_e = 20;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::error_rate;
    WiretapScenario scenario;
    PrecoderChoice precoders = PrecoderChoice::both;
    LpMode lp_mode = LpMode::exact;
    std::vector<double> snr_grid_db;
    std::size_t n_trials = 1000;
    std::uint64_t master_seed = 1;
    unsigned parallelism = 1;  // 0: one worker per hardware thread
    std::optional<double> noise_norm_override;
    double noise_norm_scale = 1.0;
    std::vector<Dimensions> dimension_sweep;  // covering_ratio; empty = scenario dimensions
    std::size_t pilot_trials = 1000;
    double chi_norm_v = 1.0;
    int logdet_n_a = 36;
    int logdet_n_b = 32;

    std::vector<Precoder> precoder_list() const
    {
        switch (precoders) {
        case PrecoderChoice::svd: return {Precoder::svd};
        case PrecoderChoice::lattice: return {Precoder::lattice};
        case PrecoderChoice::both: break;
        }
        return {Precoder::svd, Precoder::lattice};
    }

    unsigned workers() const
    {
        if (parallelism > 0)
            return parallelism;
        return std::max(1u, std::thread::hardware_concurrency());
    }

    void validate() const
    {
        if (n_trials < 1)
            throw Error(ErrorKind::validation, "n_trials must be at least 1");
        scenario.validate();
        if (experiment == ExperimentKind::error_rate) {
            if (snr_grid_db.empty())
                throw Error(ErrorKind::validation, "error_rate needs a non-empty snr_grid_db");
            if (pilot_trials < 1)
                throw Error(ErrorKind::validation, "pilot_trials must be at least 1");
        }
        for (double s : snr_grid_db)
            if (!std::isfinite(s))
                throw Error(ErrorKind::validation, "snr_grid_db entries must be finite");
        if (noise_norm_override && !(*noise_norm_override >= 0.0 && std::isfinite(*noise_norm_override)))
            throw Error(ErrorKind::validation, "noise_norm_override must be finite and non-negative");
        if (!(noise_norm_scale > 0.0) || !std::isfinite(noise_norm_scale))
            throw Error(ErrorKind::validation, "noise_norm_scale must be positive");
        for (const auto& d : dimension_sweep) {
            WiretapScenario s = scenario;
            s.n_a = d.n_a;
            s.n_b = d.n_b;
            s.n_e = d.n_e;
            s.validate();
        }
        if (experiment == ExperimentKind::chi_check || experiment == ExperimentKind::logdet_check) {
            if (n_trials < 10000)
                throw Error(ErrorKind::validation, "distribution checks need at least 1e4 trials");
        }
        if (experiment == ExperimentKind::chi_check && !(chi_norm_v > 0.0))
            throw Error(ErrorKind::validation, "chi_norm_v must be positive");
        if (experiment == ExperimentKind::logdet_check && !(logdet_n_b >= 1 && logdet_n_b <= logdet_n_a))
            throw Error(ErrorKind::validation, "logdet check needs 1 <= logdet_n_b <= logdet_n_a");
    }
};

// --- config (de)serialisation ------------------------------------------------

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object())
        throw Error(ErrorKind::validation, where + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key()))
            throw Error(ErrorKind::validation, "unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get_as(const nlohmann::json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::validation, std::string("bad value for '") + key + "': " + e.what());
    }
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = get_as<T>(j, key);
}

inline std::size_t get_count(const nlohmann::json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw Error(ErrorKind::validation, std::string("'") + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

} // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j)
{
    using namespace detail;
    reject_unknown(j,
                   {"experiment", "scenario", "precoder", "lp_mode", "snr_grid_db", "n_trials", "master_seed",
                    "parallelism", "noise_norm_override", "noise_norm_scale", "dimension_sweep", "pilot_trials",
                    "chi_norm_v", "logdet_n_a", "logdet_n_b"},
                   "config");
    ExperimentConfig c;
    if (j.contains("experiment"))
        c.experiment = parse_experiment(get_as<std::string>(j, "experiment"));
    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        reject_unknown(s, {"N_A", "N_B", "N_E", "M", "sigmaB2", "sigmaE2", "beta", "total_power_budget"}, "scenario");
        read_opt(s, "N_A", c.scenario.n_a);
        read_opt(s, "N_B", c.scenario.n_b);
        read_opt(s, "N_E", c.scenario.n_e);
        read_opt(s, "M", c.scenario.qam_order);
        read_opt(s, "sigmaB2", c.scenario.sigma_b2);
        read_opt(s, "sigmaE2", c.scenario.sigma_e2);
        read_opt(s, "beta", c.scenario.beta);
        if (s.contains("total_power_budget") && !s.at("total_power_budget").is_null())
            c.scenario.total_power_budget = get_as<double>(s, "total_power_budget");
    }
    if (j.contains("precoder"))
        c.precoders = parse_precoder_choice(get_as<std::string>(j, "precoder"));
    if (j.contains("lp_mode"))
        c.lp_mode = parse_lp_mode(get_as<std::string>(j, "lp_mode"));
    read_opt(j, "snr_grid_db", c.snr_grid_db);
    if (j.contains("n_trials"))
        c.n_trials = get_count(j, "n_trials");
    if (j.contains("master_seed")) {
        if (!j.at("master_seed").is_number_integer())
            throw Error(ErrorKind::validation, "'master_seed' must be an integer");
        c.master_seed = j.at("master_seed").get<std::uint64_t>();
    }
    if (j.contains("parallelism"))
        c.parallelism = static_cast<unsigned>(get_count(j, "parallelism"));
    if (j.contains("noise_norm_override") && !j.at("noise_norm_override").is_null())
        c.noise_norm_override = get_as<double>(j, "noise_norm_override");
    read_opt(j, "noise_norm_scale", c.noise_norm_scale);
    if (j.contains("dimension_sweep")) {
        for (const auto& d : j.at("dimension_sweep")) {
            reject_unknown(d, {"N_A", "N_B", "N_E"}, "dimension_sweep entry");
            c.dimension_sweep.push_back({get_as<int>(d, "N_A"), get_as<int>(d, "N_B"), get_as<int>(d, "N_E")});
        }
    }
    if (j.contains("pilot_trials"))
        c.pilot_trials = get_count(j, "pilot_trials");
    read_opt(j, "chi_norm_v", c.chi_norm_v);
    read_opt(j, "logdet_n_a", c.logdet_n_a);
    read_opt(j, "logdet_n_b", c.logdet_n_b);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::validation, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::validation, std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& c)
{
    nlohmann::json s = {{"N_A", c.scenario.n_a},         {"N_B", c.scenario.n_b},        {"N_E", c.scenario.n_e},
                        {"M", c.scenario.qam_order},     {"sigmaB2", c.scenario.sigma_b2},
                        {"sigmaE2", c.scenario.sigma_e2}, {"beta", c.scenario.beta}};
    s["total_power_budget"] = c.scenario.total_power_budget ? nlohmann::json(*c.scenario.total_power_budget)
                                                            : nlohmann::json(nullptr);
    nlohmann::json j = {{"experiment", to_string(c.experiment)},
                        {"scenario", s},
                        {"precoder", to_string(c.precoders)},
                        {"lp_mode", to_string(c.lp_mode)},
                        {"snr_grid_db", c.snr_grid_db},
                        {"n_trials", c.n_trials},
                        {"master_seed", c.master_seed},
                        {"parallelism", c.parallelism},
                        {"noise_norm_scale", c.noise_norm_scale},
                        {"pilot_trials", c.pilot_trials},
                        {"chi_norm_v", c.chi_norm_v},
                        {"logdet_n_a", c.logdet_n_a},
                        {"logdet_n_b", c.logdet_n_b}};
    j["noise_norm_override"] = c.noise_norm_override ? nlohmann::json(*c.noise_norm_override) : nlohmann::json(nullptr);
    auto sweep = nlohmann::json::array();
    for (const auto& d : c.dimension_sweep)
        sweep.push_back({{"N_A", d.n_a}, {"N_B", d.n_b}, {"N_E", d.n_e}});
    j["dimension_sweep"] = sweep;
    return j;
}

// --- seeding and parallel execution -------------------------------------------

namespace experiment_id {
inline constexpr std::uint64_t error_rate = 1;
inline constexpr std::uint64_t covering_ratio = 2;
inline constexpr std::uint64_t chi_check = 3;
inline constexpr std::uint64_t logdet_check = 4;
inline constexpr std::uint64_t lattice_selftest = 5;
inline constexpr std::uint64_t pilot = 101;
} // namespace experiment_id

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based: each coordinate is absorbed through a full splitmix round.
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t experiment, std::uint64_t point_index,
                                       std::uint64_t trial_index)
{
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ experiment);
    h = splitmix64(h ^ point_index);
    return splitmix64(h ^ trial_index);
}

// Failure inside a trial, carrying the seed that reproduces it.
class TrialError : public Error {
public:
    TrialError(ErrorKind kind, const std::string& what, std::uint64_t seed)
        : Error(kind, what + " (trial seed " + std::to_string(seed) + ")"), seed_(seed)
    {
    }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

// fn(i) for i in [0, n) on `workers` threads; results are stored by index
// and the first failure in index order is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, unsigned workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))>
{
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
    if (w <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (unsigned t = 0; t < w; ++t)
            pool.emplace_back(work);
        for (auto& th : pool)
            th.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

// --- results ---------------------------------------------------------------------

// c_R histogram: bins of width 0.5 on [0, 20), last bin collects overflow.
inline constexpr double histogram_bin_width = 0.5;
inline constexpr std::size_t histogram_bins = 41;

struct ResultRow {
    ExperimentKind experiment = ExperimentKind::error_rate;
    Precoder precoder = Precoder::lattice;
    std::size_t point_index = 0;
    std::optional<double> snr_db;
    Dimensions dims;
    std::size_t trials = 0;
    std::optional<std::size_t> bob_errors;
    std::optional<std::size_t> eve_errors;
    std::optional<double> bob_block_error_rate;
    std::optional<double> eve_block_error_rate;
    std::optional<double> bob_symbol_error_rate;  // per complex symbol, diagnostics
    std::optional<double> eve_symbol_error_rate;
    double mean_c_r = 0.0;
    double pr_c_r_below_beta = 0.0;
    double mean_total_power = 0.0;
    double noise_norm = 0.0;
    std::vector<std::size_t> c_r_histogram;
    double wall_time = 0.0;  // seconds; manifest only
};

struct CheckLine {
    std::string check;
    std::string statistic;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool gating = true;
    bool pass = false;
};

struct CheckReport {
    ExperimentKind experiment = ExperimentKind::chi_check;
    std::vector<CheckLine> lines;
    double wall_time = 0.0;
    bool pass() const
    {
        return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return !l.gating || l.pass; });
    }
};

struct PilotPower {
    Precoder precoder;
    double mean_total_power;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    std::vector<PilotPower> pilots;
    std::optional<CheckReport> report;
    double wall_time = 0.0;
};

// --- per-trial building blocks --------------------------------------------------

struct ChannelPair {
    ComplexMatrix H;
    ComplexMatrix G;
    SvdPrecoder svd;
};

// Rank-deficient draws are resampled from the same stream.
inline ChannelPair draw_channels(const Dimensions& d, Rng& rng)
{
    ChannelPair cp;
    for (;;) {
        cp.H = sample_channel(d.n_b, d.n_a, rng);
        try {
            cp.svd = SvdPrecoder::from_channel(cp.H);
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::rank_deficient)
                throw;
        }
    }
    cp.G = sample_channel(d.n_e, d.n_a, rng);
    return cp;
}

inline LatticePrecoder lattice_from_svd(const SvdPrecoder& s)
{
    const auto r = s.P.cols();
    return {ComplexMatrix(s.P * s.factors.S.head(r).cwiseInverse().asDiagonal() * s.factors.U.adjoint()), s.Z};
}

inline double noise_norm_for(const ExperimentConfig& c, Precoder p, const Dimensions& d)
{
    if (c.noise_norm_override)
        return *c.noise_norm_override;
    return c.noise_norm_scale * required_noise_norm(c.scenario.beta, phi_for(p, d.n_a, d.n_b, d.n_e));
}

inline ComplexVector draw_noise(Eigen::Index dim, double norm, Rng& rng)
{
    if (norm == 0.0)
        return ComplexVector::Zero(dim);
    return sample_artificial_noise(dim, norm, rng);
}

// Power split identities: orthogonality of the data and null-space parts.
inline void check_power_identity(const TransmitRecord& rec, Precoder p, std::uint64_t seed)
{
    const double total = rec.x.squaredNorm();
    const double scale = std::max(1.0, total);
    bool ok = std::abs(total - rec.data_power - rec.noise_power) <= 1e-9 * scale;
    ok = ok && std::abs(rec.noise_power - rec.v.squaredNorm()) <= 1e-9 * scale;
    if (p == Precoder::svd)
        ok = ok && std::abs(rec.data_power - rec.u.squaredNorm()) <= 1e-9 * scale;
    if (!ok)
        throw TrialError(ErrorKind::invariant_violation, std::string("power identity violated for ") + to_string(p),
                         seed);
}

inline double trial_covering_ratio(const ChannelPair& cp, const LatticePrecoder& lp, Precoder p,
                                   const ComplexVector& v, double beta)
{
    if (v.isZero())
        return 0.0;
    const ComplexMatrix B = p == Precoder::svd ? ComplexMatrix(cp.G * cp.svd.P) : ComplexMatrix(cp.G * lp.pinv);
    const ComplexVector interference = cp.G * cp.svd.Z * v;
    return covering_ratio(LatticeBasis::from_complex(B), interference, beta).c_r;
}

// Wraps library failures inside a trial so the seed travels with them.
template <class Fn>
auto with_trial_seed(std::uint64_t seed, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const TrialError&) {
        throw;
    } catch (const Error& e) {
        throw TrialError(e.kind(), e.what(), seed);
    }
}

struct PrecoderTrial {
    bool bob_error = false;
    bool eve_error = false;
    int bob_symbol_errors = 0;
    int eve_symbol_errors = 0;
    double c_r = 0.0;
    double total_power = 0.0;
};

inline TransmitRecord precode(Precoder p, const ChannelPair& cp, const LatticePrecoder& lp, const ComplexVector& u,
                              const ComplexVector& v, const Constellation& c, LpMode mode)
{
    return p == Precoder::svd ? svd_precode(cp.svd, u, v) : lattice_precode(lp, u, v, c, mode);
}

// E||x||^2 per precoder from a reserved seed family.
inline double pilot_power(const ExperimentConfig& c, Precoder p, std::size_t precoder_index)
{
    const Dimensions d{c.scenario.n_a, c.scenario.n_b, c.scenario.n_e};
    const Constellation con(c.scenario.qam_order);
    const double norm = noise_norm_for(c, p, d);
    auto powers = parallel_map(c.pilot_trials, c.workers(), [&](std::size_t t) {
        const auto seed = derive_trial_seed(c.master_seed, experiment_id::pilot, precoder_index, t);
        return with_trial_seed(seed, [&] {
            Rng rng(seed);
            const auto cp = draw_channels(d, rng);
            const auto lp = lattice_from_svd(cp.svd);
            const ComplexVector u = sample_secret(con, d.n_b, rng);
            const ComplexVector v = draw_noise(d.n_a - d.n_b, norm, rng);
            return precode(p, cp, lp, u, v, con, c.lp_mode).x.squaredNorm();
        });
    });
    double acc = 0.0;
    for (double x : powers)
        acc += x;
    return acc / static_cast<double>(powers.size());
}

// SNR per bit = E||x||^2 / (N_B sigma_B^2 log2 M)
inline double bob_noise_variance(double mean_power, int n_b, int qam_order, double snr_db)
{
    return mean_power / (static_cast<double>(n_b) * std::pow(10.0, snr_db / 10.0) * std::log2(qam_order));
}

inline std::vector<std::size_t> histogram_of(const std::vector<double>& c_r)
{
    std::vector<std::size_t> h(histogram_bins, 0);
    for (double x : c_r) {
        const auto b = static_cast<std::size_t>(std::max(0.0, std::floor(x / histogram_bin_width)));
        ++h[std::min(b, histogram_bins - 1)];
    }
    return h;
}

// --- experiments --------------------------------------------------------------------

inline RunOutput run_error_rate(const ExperimentConfig& c)
{
    c.validate();
    if (c.experiment != ExperimentKind::error_rate)
        throw Error(ErrorKind::validation, "run_error_rate called with a different experiment");
    const auto t0 = std::chrono::steady_clock::now();
    const Dimensions d{c.scenario.n_a, c.scenario.n_b, c.scenario.n_e};
    const Constellation con(c.scenario.qam_order);
    const auto precoders = c.precoder_list();

    RunOutput out;
    std::vector<double> sigma_b2_base;
    for (auto p : precoders) {
        const double pw = pilot_power(c, p, static_cast<std::size_t>(p));
        out.pilots.push_back({p, pw});
    }
    std::vector<double> norms;
    for (auto p : precoders)
        norms.push_back(noise_norm_for(c, p, d));

    for (std::size_t pi = 0; pi < c.snr_grid_db.size(); ++pi) {
        const auto tp = std::chrono::steady_clock::now();
        const double snr = c.snr_grid_db[pi];
        std::vector<double> sigma_b2;
        for (const auto& pl : out.pilots)
            sigma_b2.push_back(bob_noise_variance(pl.mean_total_power, d.n_b, c.scenario.qam_order, snr));

        auto trials = parallel_map(c.n_trials, c.workers(), [&](std::size_t t) {
            const auto seed = derive_trial_seed(c.master_seed, experiment_id::error_rate, pi, t);
            return with_trial_seed(seed, [&] {
                Rng rng(seed);
                const auto cp = draw_channels(d, rng);
                const auto lp = lattice_from_svd(cp.svd);
                const ComplexVector u = sample_secret(con, d.n_b, rng);
                std::vector<PrecoderTrial> res;
                for (std::size_t k = 0; k < precoders.size(); ++k) {
                    const Precoder p = precoders[k];
                    Rng local = rng;  // paired trials: same H, G, u and stream for each precoder
                    const ComplexVector v = draw_noise(d.n_a - d.n_b, norms[k], local);
                    const auto rec = precode(p, cp, lp, u, v, con, c.lp_mode);
                    check_power_identity(rec, p, seed);
                    const ComplexVector z = transmit_through(cp.H, rec.x, sigma_b2[k], local);
                    const ComplexVector y = transmit_through(cp.G, rec.x, c.scenario.sigma_e2, local);
                    ComplexVector u_bob, u_eve;
                    if (p == Precoder::svd) {
                        u_bob = bob_decode_svd(z, cp.svd, con);
                        u_eve = eve_decode_svd(y, cp.G, cp.svd.P, con);
                    } else {
                        u_bob = bob_decode_lp(z, con);
                        u_eve = eve_decode_lp(y, cp.G, lp, con);
                    }
                    PrecoderTrial pt;
                    pt.bob_error = u_bob != u;
                    pt.eve_error = u_eve != u;
                    pt.bob_symbol_errors = static_cast<int>((u_bob.array() != u.array()).count());
                    pt.eve_symbol_errors = static_cast<int>((u_eve.array() != u.array()).count());
                    pt.c_r = trial_covering_ratio(cp, lp, p, v, c.scenario.beta);
                    pt.total_power = rec.x.squaredNorm();
                    res.push_back(pt);
                }
                return res;
            });
        });

        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - tp).count();
        for (std::size_t k = 0; k < precoders.size(); ++k) {
            ResultRow row;
            row.experiment = ExperimentKind::error_rate;
            row.precoder = precoders[k];
            row.point_index = pi;
            row.snr_db = snr;
            row.dims = d;
            row.trials = c.n_trials;
            row.noise_norm = norms[k];
            std::size_t be = 0, ee = 0, bs = 0, es = 0, below = 0;
            double cr = 0.0, pw = 0.0;
            std::vector<double> crs;
            crs.reserve(trials.size());
            for (const auto& tr : trials) {
                be += tr[k].bob_error;
                ee += tr[k].eve_error;
                bs += static_cast<std::size_t>(tr[k].bob_symbol_errors);
                es += static_cast<std::size_t>(tr[k].eve_symbol_errors);
                below += tr[k].c_r < c.scenario.beta;
                cr += tr[k].c_r;
                pw += tr[k].total_power;
                crs.push_back(tr[k].c_r);
            }
            const double n = static_cast<double>(c.n_trials);
            row.bob_errors = be;
            row.eve_errors = ee;
            row.bob_block_error_rate = be / n;
            row.eve_block_error_rate = ee / n;
            row.bob_symbol_error_rate = bs / (n * d.n_b);
            row.eve_symbol_error_rate = es / (n * d.n_b);
            row.mean_c_r = cr / n;
            row.pr_c_r_below_beta = below / n;
            row.mean_total_power = pw / n;
            row.c_r_histogram = histogram_of(crs);
            row.wall_time = elapsed;
            out.rows.push_back(std::move(row));
        }
    }
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline RunOutput run_covering_ratio(const ExperimentConfig& c)
{
    c.validate();
    if (c.experiment != ExperimentKind::covering_ratio)
        throw Error(ErrorKind::validation, "run_covering_ratio called with a different experiment");
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Dimensions> points = c.dimension_sweep;
    if (points.empty())
        points.push_back({c.scenario.n_a, c.scenario.n_b, c.scenario.n_e});
    const auto precoders = c.precoder_list();
    const Constellation con(c.scenario.qam_order);

    RunOutput out;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const auto tp = std::chrono::steady_clock::now();
        const Dimensions d = points[pi];
        std::vector<double> norms;
        for (auto p : precoders)
            norms.push_back(noise_norm_for(c, p, d));

        auto trials = parallel_map(c.n_trials, c.workers(), [&](std::size_t t) {
            const auto seed = derive_trial_seed(c.master_seed, experiment_id::covering_ratio, pi, t);
            return with_trial_seed(seed, [&] {
                Rng rng(seed);
                const auto cp = draw_channels(d, rng);
                const auto lp = lattice_from_svd(cp.svd);
                std::vector<double> res;
                for (std::size_t k = 0; k < precoders.size(); ++k) {
                    Rng local = rng;
                    const ComplexVector v = draw_noise(d.n_a - d.n_b, norms[k], local);
                    res.push_back(trial_covering_ratio(cp, lp, precoders[k], v, c.scenario.beta));
                }
                return res;
            });
        });

        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - tp).count();
        for (std::size_t k = 0; k < precoders.size(); ++k) {
            ResultRow row;
            row.experiment = ExperimentKind::covering_ratio;
            row.precoder = precoders[k];
            row.point_index = pi;
            row.dims = d;
            row.trials = c.n_trials;
            row.noise_norm = norms[k];
            std::size_t below = 0;
            double cr = 0.0;
            std::vector<double> crs;
            for (const auto& tr : trials) {
                below += tr[k] < c.scenario.beta;
                cr += tr[k];
                crs.push_back(tr[k]);
            }
            const double n = static_cast<double>(c.n_trials);
            row.mean_c_r = cr / n;
            row.pr_c_r_below_beta = below / n;
            row.c_r_histogram = histogram_of(crs);
            row.wall_time = elapsed;
            out.rows.push_back(std::move(row));
        }
    }
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline CheckLine check_line(std::string check, std::string statistic, double value, double lo, double hi,
                            bool gating = true)
{
    CheckLine l{std::move(check), std::move(statistic), value, lo, hi, gating, false};
    l.pass = value >= lo && value <= hi;
    return l;
}

inline RunOutput run_distribution_checks(const ExperimentConfig& c)
{
    c.validate();
    const auto t0 = std::chrono::steady_clock::now();
    CheckReport rep;
    rep.experiment = c.experiment;
    if (c.experiment == ExperimentKind::chi_check) {
        ChiCheckParams p;
        p.n_a = c.scenario.n_a;
        p.n_b = c.scenario.n_b;
        p.n_e = c.scenario.n_e;
        p.norm_v = c.chi_norm_v;
        p.n_trials = c.n_trials;
        auto samples = parallel_map(c.n_trials, c.workers(), [&](std::size_t t) {
            const auto seed = derive_trial_seed(c.master_seed, experiment_id::chi_check, 0, t);
            return with_trial_seed(seed, [&] {
                Rng rng(seed);
                return chi_sample(p, rng);
            });
        });
        const auto r = summarize_chi(samples, p);
        const double dof = r.dof;
        rep.lines.push_back(check_line("chi_mean", "mean of (2/|v|^2)|GZv|^2", r.mean_scaled_square, 0.98 * dof,
                                       1.02 * dof));
        rep.lines.push_back(check_line("chi_ks", "KS distance vs chi(2 N_E)", r.ks_statistic, 0.0, r.ks_critical));
        // E[chi^4] for 2N_E degrees of freedom is dof (dof + 2)
        rep.lines.push_back(check_line("chi_second_moment", "mean of ((2/|v|^2)|GZv|^2)^2",
                                       r.second_moment_scaled_square, 0.95 * dof * (dof + 2), 1.05 * dof * (dof + 2),
                                       false));
    } else if (c.experiment == ExperimentKind::logdet_check) {
        auto samples = parallel_map(c.n_trials, c.workers(), [&](std::size_t t) {
            const auto seed = derive_trial_seed(c.master_seed, experiment_id::logdet_check, 0, t);
            return with_trial_seed(seed, [&] {
                Rng rng(seed);
                return logdet_sample(c.logdet_n_a, c.logdet_n_b, rng);
            });
        });
        const auto r = summarize_logdet(samples, c.logdet_n_a, c.logdet_n_b);
        const bool gate = !r.informational;
        rep.lines.push_back(check_line("logdet_mean", "sample mean of standardized log|det R_H|", r.moments.mean, -0.1,
                                       0.1, gate));
        rep.lines.push_back(check_line("logdet_variance", "sample variance of standardized log|det R_H|",
                                       r.moments.variance, 0.7, 1.3, gate));
        rep.lines.push_back(
            check_line("logdet_normality", "KS distance vs N(0,1)", r.ks_statistic, 0.0, r.ks_critical, false));
    } else {
        throw Error(ErrorKind::validation, "run_distribution_checks needs chi_check or logdet_check");
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    RunOutput out;
    out.report = rep;
    out.wall_time = rep.wall_time;
    return out;
}

// Lattice algorithms against the brute-force oracles. n_trials sets the
// number of CVP instances; the remaining checks use fixed counts.
inline RunOutput run_lattice_selftest(const ExperimentConfig& c)
{
    c.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto seed_of = [&](std::size_t check, std::size_t i) {
        return derive_trial_seed(c.master_seed, experiment_id::lattice_selftest, check, i);
    };
    const auto gaussian_real = [](Eigen::Index n, Rng& rng) {
        std::normal_distribution<double> nd;
        RealMatrix B(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) B(i, j) = nd(rng);
        return B;
    };
    CheckReport rep;
    rep.experiment = ExperimentKind::lattice_selftest;

    // exact CVP and Babai vs exhaustive enumeration, real dimension 2..6
    struct CvpOutcome {
        bool compared = false;
        bool mismatch = false;
        bool sphere_above_babai = false;
        double babai_excess = 0.0;  // log2(babai / exact) - n/2, must be <= 0
    };
    auto cvp = parallel_map(c.n_trials, c.workers(), [&](std::size_t t) {
        const auto seed = seed_of(0, t);
        return with_trial_seed(seed, [&] {
            Rng rng(seed);
            const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 5);
            const RealMatrix B = gaussian_real(n, rng);
            std::normal_distribution<double> nd;
            RealVector target(n);
            for (Eigen::Index i = 0; i < n; ++i) target(i) = 3.0 * nd(rng);
            CvpOutcome o;
            const auto brute = oracle::exhaustive_cvp(B, target);
            if (!brute)
                return o;
            o.compared = true;
            const auto L = LatticeBasis::from_real(B);
            const auto sd = cvp_sphere_decode(L, target);
            const auto bb = babai_nearest_plane(L, target);
            o.mismatch = std::abs(sd.distance - brute->distance) > 1e-9 * std::max(1.0, brute->distance);
            o.sphere_above_babai = sd.distance > bb.distance + 1e-12;
            if (brute->distance > 1e-12)
                o.babai_excess = std::log2(bb.distance / brute->distance) - 0.5 * static_cast<double>(n);
            return o;
        });
    });
    std::size_t compared = 0, mismatches = 0, order_violations = 0;
    double worst_babai = -std::numeric_limits<double>::infinity();
    for (const auto& o : cvp) {
        compared += o.compared;
        mismatches += o.mismatch;
        order_violations += o.sphere_above_babai;
        if (o.compared)
            worst_babai = std::max(worst_babai, o.babai_excess);
    }
    rep.lines.push_back(check_line("cvp_instances_compared", "instances within oracle box cap",
                                   static_cast<double>(compared), static_cast<double>(c.n_trials),
                                   static_cast<double>(c.n_trials)));
    rep.lines.push_back(
        check_line("cvp_oracle_mismatches", "sphere decoder vs exhaustive", static_cast<double>(mismatches), 0, 0));
    rep.lines.push_back(check_line("cvp_not_above_babai", "instances with sphere distance > Babai",
                                   static_cast<double>(order_violations), 0, 0));
    rep.lines.push_back(check_line("babai_ratio", "max log2(babai/exact) - n/2", worst_babai,
                                   -std::numeric_limits<double>::infinity(), 0.0));

    // LLL output conditions on random bases of dimension 2..12
    const std::size_t n_lll = 1000;
    struct LllOutcome {
        bool size_reduced, lovasz, unimodular, volume_kept;
    };
    auto lll = parallel_map(n_lll, c.workers(), [&](std::size_t t) {
        const auto seed = seed_of(1, t);
        return with_trial_seed(seed, [&] {
            Rng rng(seed);
            const Eigen::Index n = 2 + static_cast<Eigen::Index>(t % 11);
            const RealMatrix B = gaussian_real(n, rng);
            const auto res = lll_reduce(LatticeBasis::from_real(B), 0.75);
            const RealMatrix Bred = B * res.transform.cast<double>();
            const auto v = oracle::check_lll(Bred, 0.75, 1e-6);
            const long double det_u = oracle::integer_abs_det(res.transform);
            const double vb = std::abs(B.determinant());
            const double vr = std::abs(Bred.determinant());
            return LllOutcome{v.size_reduced, v.lovasz, det_u == 1.0L, std::abs(vr - vb) <= 1e-8 * vb};
        });
    });
    std::size_t bad_size = 0, bad_lovasz = 0, bad_unimod = 0, bad_volume = 0;
    for (const auto& o : lll) {
        bad_size += !o.size_reduced;
        bad_lovasz += !o.lovasz;
        bad_unimod += !o.unimodular;
        bad_volume += !o.volume_kept;
    }
    rep.lines.push_back(check_line("lll_size_reduction", "failing bases", static_cast<double>(bad_size), 0, 0));
    rep.lines.push_back(check_line("lll_lovasz", "failing bases", static_cast<double>(bad_lovasz), 0, 0));
    rep.lines.push_back(check_line("lll_unimodular", "transforms with |det| != 1", static_cast<double>(bad_unimod), 0, 0));
    rep.lines.push_back(check_line("lll_volume", "bases with volume drift > 1e-8", static_cast<double>(bad_volume), 0, 0));

    // covering-radius bound vs sampled deep holes on 2D and 4D lattices
    const std::size_t n_cov = 40, n_samples = 400;
    auto cov = parallel_map(n_cov, c.workers(), [&](std::size_t t) {
        const auto seed = seed_of(2, t);
        return with_trial_seed(seed, [&] {
            Rng rng(seed);
            const Eigen::Index nb = 1 + static_cast<Eigen::Index>(t % 2);
            const ComplexMatrix B = sample_channel(nb, nb, rng);
            const auto L = LatticeBasis::from_complex(B);
            const RealMatrix Br = real_embedding(B);
            const double hole = oracle::sampled_deep_hole(Br, n_samples, rng, [&](const RealVector& x) {
                const auto r = oracle::exhaustive_cvp(Br, x, std::numeric_limits<double>::infinity());
                return r->distance;
            });
            return covering_radius_upper_bound(L) / hole;
        });
    });
    double min_cov = std::numeric_limits<double>::infinity();
    for (double r : cov) min_cov = std::min(min_cov, r);
    rep.lines.push_back(check_line("covering_bound", "min bound / sampled deep hole", min_cov, 1.0,
                                   std::numeric_limits<double>::infinity()));

    // Gaussian heuristic for the dual of 8x8 complex Gaussian bases
    const std::size_t n_gh = 200;
    auto gh = parallel_map(n_gh, c.workers(), [&](std::size_t t) {
        const auto seed = seed_of(3, t);
        return with_trial_seed(seed, [&] {
            Rng rng(seed);
            const ComplexMatrix B = sample_channel(8, 8, rng);
            const auto D = LatticeBasis::from_complex(dual_basis(B));
            return svp_shortest(D).lambda1 / effective_radius(D, RadiusMode::asymptotic);
        });
    });
    double gh_mean = 0.0;
    for (double r : gh) gh_mean += r;
    gh_mean /= static_cast<double>(gh.size());
    rep.lines.push_back(check_line("gaussian_heuristic", "mean lambda1 / r_eff, dual, N_B = 8", gh_mean, 0.8, 1.2));

    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    RunOutput out;
    out.report = rep;
    out.wall_time = rep.wall_time;
    return out;
}

inline RunOutput run_experiment(const ExperimentConfig& c)
{
    switch (c.experiment) {
    case ExperimentKind::error_rate: return run_error_rate(c);
    case ExperimentKind::covering_ratio: return run_covering_ratio(c);
    case ExperimentKind::chi_check:
    case ExperimentKind::logdet_check: return run_distribution_checks(c);
    case ExperimentKind::lattice_selftest: return run_lattice_selftest(c);
    }
    throw Error(ErrorKind::validation, "unknown experiment");
}

// --- output ------------------------------------------------------------------------

inline std::string format_number(double x)
{
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

inline void write_csv_line(std::ostream& os, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            os << ',';
        os << csv_field(fields[i]);
    }
    os << "\r\n";
}

inline void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows)
{
    write_csv_line(os, {"experiment", "precoder", "point_index", "snr_db", "N_A", "N_B", "N_E", "trials",
                        "bob_errors", "eve_errors", "bob_block_error_rate", "eve_block_error_rate", "bob_symbol_error_rate",
                        "eve_symbol_error_rate", "mean_c_R",
                        "pr_c_R_below_beta", "mean_total_power", "noise_norm"});
    const auto opt_num = [](const auto& o) { return o ? format_number(static_cast<double>(*o)) : std::string(); };
    for (const auto& r : rows) {
        write_csv_line(os, {to_string(r.experiment), to_string(r.precoder), std::to_string(r.point_index),
                            opt_num(r.snr_db), std::to_string(r.dims.n_a), std::to_string(r.dims.n_b),
                            std::to_string(r.dims.n_e), std::to_string(r.trials), opt_num(r.bob_errors),
                            opt_num(r.eve_errors), opt_num(r.bob_block_error_rate), opt_num(r.eve_block_error_rate),
                            opt_num(r.bob_symbol_error_rate), opt_num(r.eve_symbol_error_rate),
                            format_number(r.mean_c_r), format_number(r.pr_c_r_below_beta),
                            r.experiment == ExperimentKind::error_rate ? format_number(r.mean_total_power) : "",
                            format_number(r.noise_norm)});
    }
}

inline void write_report_csv(std::ostream& os, const CheckReport& rep)
{
    write_csv_line(os, {"experiment", "check", "statistic", "value", "lo", "hi", "gating", "pass"});
    for (const auto& l : rep.lines)
        write_csv_line(os, {to_string(rep.experiment), l.check, l.statistic, format_number(l.value),
                            format_number(l.lo), format_number(l.hi), l.gating ? "true" : "false",
                            l.pass ? "true" : "false"});
}

inline std::string results_csv(const RunOutput& out)
{
    std::ostringstream os;
    if (out.report)
        write_report_csv(os, *out.report);
    else
        write_rows_csv(os, out.rows);
    return os.str();
}

inline nlohmann::json manifest_json(const ExperimentConfig& c, const RunOutput& out)
{
    nlohmann::json m;
    m["software"] = {{"name", "ansec"}, {"version", version}};
    m["config"] = config_to_json(c);
    m["seeds"] = {{"master_seed", c.master_seed},
                  {"derivation", "splitmix64 chain over (master_seed, experiment_id, point_index, trial_index)"},
                  {"experiment_ids",
                   {{"error_rate", experiment_id::error_rate},
                    {"covering_ratio", experiment_id::covering_ratio},
                    {"chi_check", experiment_id::chi_check},
                    {"logdet_check", experiment_id::logdet_check},
                    {"lattice_selftest", experiment_id::lattice_selftest},
                    {"pilot", experiment_id::pilot}}}};
    m["workers"] = c.workers();
    auto pilots = nlohmann::json::array();
    for (const auto& p : out.pilots)
        pilots.push_back({{"precoder", to_string(p.precoder)}, {"mean_total_power", p.mean_total_power}});
    m["pilot_power"] = pilots;
    auto rows = nlohmann::json::array();
    for (const auto& r : out.rows)
        rows.push_back({{"precoder", to_string(r.precoder)},
                        {"point_index", r.point_index},
                        {"wall_time", r.wall_time},
                        {"c_R_histogram", {{"bin_width", histogram_bin_width}, {"counts", r.c_r_histogram}}}});
    m["rows"] = rows;
    if (out.report)
        m["pass"] = out.report->pass();
    m["wall_time"] = out.wall_time;
    return m;
}

inline std::filesystem::path manifest_path(const std::filesystem::path& csv)
{
    auto p = csv;
    p.replace_extension(".manifest.json");
    return p;
}

inline void write_outputs(const ExperimentConfig& c, const RunOutput& out, const std::filesystem::path& csv)
{
    {
        std::ofstream f(csv, std::ios::binary);
        if (!f)
            throw Error(ErrorKind::invalid_argument, "cannot write " + csv.string());
        f << results_csv(out);
    }
    std::ofstream m(manifest_path(csv));
    if (!m)
        throw Error(ErrorKind::invalid_argument, "cannot write manifest next to " + csv.string());
    m << manifest_json(c, out).dump(2) << "\n";
}

} // namespace ansec

#endif // ANSEC_HARNESS_HPP
