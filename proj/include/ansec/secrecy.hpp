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

// Covering-ratio secrecy criterion and the statistics behind the
// artificial-noise power rule.
//
// The covering ratio c_R = ||G Z v|| / r_eff(Eve's lattice) measures how far
// the artificial noise pushes Eve's observation relative to the size of her
// decision region. With ||v|| = beta e / Phi the probability Pr(c_R < beta)
// decays with the antenna counts; Phi depends on the precoder.

#ifndef ANSEC_SECRECY_HPP
#define ANSEC_SECRECY_HPP

#include "ansec/lattice.hpp"
#include "ansec/matcore.hpp"
#include "ansec/wiretap.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace ansec {

inline constexpr double pi_e = std::numbers::pi * std::numbers::e;

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// [(N_E-N_B)!/(N_A-N_B)! * N_A!/N_E!]^{1/(2 N_B)}, lattice precoding.
// Requires N_B < N_A <= N_E.
inline double phi_lp(int n_a, int n_b, int n_e)
{
    if (!(n_b >= 1 && n_b < n_a && n_a <= n_e))
        throw Error(ErrorKind::invalid_argument, "phi_lp requires 1 <= N_B < N_A <= N_E");
    const double lg = log_factorial(n_e - n_b) - log_factorial(n_a - n_b) + log_factorial(n_a) -
                      log_factorial(n_e);
    return std::exp(lg / (2.0 * n_b));
}

// [(N_E-N_B)!/N_E! * sqrt(N_B)]^{1/(2 N_B)}, SVD precoding.
inline double phi_svd(int n_b, int n_e)
{
    if (!(n_b >= 1 && n_b <= n_e))
        throw Error(ErrorKind::invalid_argument, "phi_svd requires 1 <= N_B <= N_E");
    const double lg = log_factorial(n_e - n_b) - log_factorial(n_e) + 0.5 * std::log(static_cast<double>(n_b));
    return std::exp(lg / (2.0 * n_b));
}

inline double phi_for(Precoder p, int n_a, int n_b, int n_e)
{
    return p == Precoder::svd ? phi_svd(n_b, n_e) : phi_lp(n_a, n_b, n_e);
}

// ||v|| = beta e / Phi
inline double required_noise_norm(double beta, double phi)
{
    if (!(beta > 0.0) || !(phi > 0.0))
        throw Error(ErrorKind::invalid_argument, "required_noise_norm needs beta > 0 and phi > 0");
    return beta * std::numbers::e / phi;
}

// Decay exponent min(N_B^2 / ln N_B, N_E) of the Pr(c_R < beta) bound.
inline double bound_exponent(int n_b, int n_e)
{
    if (n_b < 2)
        throw Error(ErrorKind::invalid_argument, "bound_exponent requires N_B >= 2");
    if (n_e < 1)
        throw Error(ErrorKind::invalid_argument, "bound_exponent requires N_E >= 1");
    const double nb = n_b;
    return std::min(nb * nb / std::log(nb), static_cast<double>(n_e));
}

struct SecrecyAssessment {
    double c_r = 0.0;
    double r_eff = 0.0;
    double interference_norm = 0.0;
    bool pi_e_threshold_met = false;
    bool beta_met = false;
};

inline SecrecyAssessment covering_ratio(const LatticeBasis& eff_basis, const ComplexVector& interference,
                                        double beta = 1.0)
{
    require_finite(interference, "interference");
    SecrecyAssessment a;
    a.r_eff = effective_radius(eff_basis, RadiusMode::asymptotic);
    a.interference_norm = interference.norm();
    a.c_r = a.interference_norm / a.r_eff;
    a.pi_e_threshold_met = a.c_r >= pi_e;
    a.beta_met = a.c_r >= beta;
    return a;
}

// Same ratio for lattice precoding, routed through H^H = Q_H R_H:
//   c_R = ||G Z v|| det(R_H)^{1/N_B} / (sqrt(N_B/(pi e)) |det(G Q_H)|^{1/N_B})
// where |det| of the tall G Q_H is its Gram volume.
inline double covering_ratio_lp_decomposed(const ComplexMatrix& G, const ComplexMatrix& H, const ComplexVector& v)
{
    const auto n_b = H.rows();
    const ComplexMatrix Z = null_space(H);
    if (v.size() != Z.cols() || G.cols() != H.cols())
        throw Error(ErrorKind::invalid_argument, "covering_ratio_lp_decomposed dimension mismatch");
    const auto qr = qr_decompose(H.adjoint());
    double log_det_r = 0.0;
    for (Eigen::Index i = 0; i < n_b; ++i)
        log_det_r += std::log(qr.R(i, i).real());
    const double log_gq = log_gram_volume(G * qr.Q);
    const double nb = static_cast<double>(n_b);
    const double norm = (G * Z * v).norm();
    return norm * std::exp((log_det_r - log_gq) / nb) / std::sqrt(nb / pi_e);
}

// Norm of the component of w lying in the column span of B.
inline double in_span_norm(const ComplexMatrix& B, const ComplexVector& w)
{
    const auto qr = qr_decompose(B);
    return (qr.Q.adjoint() * w).norm();
}

// --- distribution checks ---------------------------------------------------

struct MomentSummary {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

inline MomentSummary summarize(const std::vector<double>& xs)
{
    MomentSummary m;
    const double n = static_cast<double>(xs.size());
    if (xs.empty())
        return m;
    for (double x : xs) m.mean += x;
    m.mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        const double d = x - m.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    if (xs.size() > 1)
        m.variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

// sup |F_n - F| for a continuous reference CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf&& cdf)
{
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// Asymptotic one-sample Kolmogorov critical value, sqrt(-ln(alpha/2)/2)/sqrt(n).
inline double ks_critical(double alpha, std::size_t n)
{
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

inline double chi_cdf(double x, double dof)
{
    if (x <= 0.0)
        return 0.0;
    return boost::math::gamma_p(0.5 * dof, 0.5 * x * x);
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct ChiCheckParams {
    int n_a = 10;
    int n_b = 9;
    int n_e = 20;
    double norm_v = 1.0;
    std::size_t n_trials = 100000;
    double alpha = 0.01;
};

struct ChiReport {
    int dof = 0;
    std::size_t samples = 0;
    double mean_scaled_square = 0.0;  // mean of (2/||v||^2) ||G Z v||^2
    double mean_relative_error = 0.0; // vs 2 N_E
    double second_moment_scaled_square = 0.0;
    double ks_statistic = 0.0;
    double ks_critical = 0.0;
    bool moment_pass = false;
    bool ks_pass = false;
    bool pass() const { return moment_pass && ks_pass; }
};

// One draw of (sqrt(2)/||v||) ||G Z v|| with fresh H, G and v direction.
inline double chi_sample(const ChiCheckParams& p, Rng& rng)
{
    ComplexMatrix H;
    ComplexMatrix Z;
    for (;;) {
        H = sample_channel(p.n_b, p.n_a, rng);
        try {
            Z = null_space(H);
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::rank_deficient)
                throw;
        }
    }
    const ComplexMatrix G = sample_channel(p.n_e, p.n_a, rng);
    const ComplexVector v = sample_artificial_noise(p.n_a - p.n_b, p.norm_v, rng);
    return std::numbers::sqrt2 / p.norm_v * (G * Z * v).norm();
}

inline ChiReport summarize_chi(const std::vector<double>& samples, const ChiCheckParams& p)
{
    ChiReport r;
    r.dof = 2 * p.n_e;
    r.samples = samples.size();
    double s1 = 0, s2 = 0;
    for (double x : samples) {
        s1 += x * x;
        s2 += x * x * x * x;
    }
    const double n = static_cast<double>(samples.size());
    r.mean_scaled_square = s1 / n;
    r.second_moment_scaled_square = s2 / n;
    r.mean_relative_error = std::abs(r.mean_scaled_square - r.dof) / r.dof;
    r.moment_pass = r.mean_relative_error <= 0.02;
    const double dof = r.dof;
    r.ks_statistic = ks_statistic(samples, [dof](double x) { return chi_cdf(x, dof); });
    r.ks_critical = ks_critical(p.alpha, samples.size());
    r.ks_pass = r.ks_statistic < r.ks_critical;
    return r;
}

inline ChiReport chi_convergence_check(const ChiCheckParams& p, Rng& rng)
{
    if (p.n_trials < 10000)
        throw Error(ErrorKind::invalid_argument, "chi check needs at least 1e4 trials");
    std::vector<double> samples;
    samples.reserve(p.n_trials);
    for (std::size_t t = 0; t < p.n_trials; ++t)
        samples.push_back(chi_sample(p, rng));
    return summarize_chi(samples, p);
}

struct LogDetReport {
    int n_a = 0;
    int n_b = 0;
    std::size_t samples = 0;
    MomentSummary moments;
    double ks_statistic = 0.0;  // vs N(0, 1)
    double ks_critical = 0.0;
    bool mean_pass = false;     // |mean| <= 0.1
    bool variance_pass = false; // variance in [0.7, 1.3]
    bool normality_pass = false;
    bool informational = false; // N_B too small for the asymptotic statement
    bool pass() const { return mean_pass && variance_pass; }
};

// (log|det R_H| - 1/2 log(N_A!/(N_A-N_B)!) + 1/4 log N_B) / (1/2 sqrt(log N_B))
// The scale vanishes at N_B = 1; the centred value is returned unscaled there.
inline double logdet_statistic(double log_abs_det_r, int n_a, int n_b)
{
    const double nb = n_b;
    const double centre = 0.5 * (log_factorial(n_a) - log_factorial(n_a - n_b)) - 0.25 * std::log(nb);
    const double scale = n_b > 1 ? 0.5 * std::sqrt(std::log(nb)) : 1.0;
    return (log_abs_det_r - centre) / scale;
}

inline double logdet_sample(int n_a, int n_b, Rng& rng)
{
    for (;;) {
        const ComplexMatrix H = sample_channel(n_b, n_a, rng);
        try {
            const auto qr = qr_decompose(H.adjoint());
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n_b; ++i)
                acc += std::log(qr.R(i, i).real());
            return logdet_statistic(acc, n_a, n_b);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::rank_deficient)
                throw;
        }
    }
}

inline LogDetReport summarize_logdet(const std::vector<double>& samples, int n_a, int n_b, double alpha = 0.01)
{
    LogDetReport r;
    r.n_a = n_a;
    r.n_b = n_b;
    r.samples = samples.size();
    r.moments = summarize(samples);
    r.mean_pass = std::abs(r.moments.mean) <= 0.1;
    r.variance_pass = r.moments.variance >= 0.7 && r.moments.variance <= 1.3;
    r.ks_statistic = ks_statistic(samples, standard_normal_cdf);
    r.ks_critical = ks_critical(alpha, samples.size());
    r.normality_pass = r.ks_statistic < r.ks_critical;
    r.informational = n_b < 2;
    return r;
}

inline LogDetReport logdet_clt_check(int n_a, int n_b, std::size_t n_trials, Rng& rng)
{
    if (!(n_b >= 1 && n_b <= n_a))
        throw Error(ErrorKind::invalid_argument, "logdet check requires 1 <= N_B <= N_A");
    if (n_trials < 10000)
        throw Error(ErrorKind::invalid_argument, "logdet check needs at least 1e4 trials");
    std::vector<double> samples;
    samples.reserve(n_trials);
    for (std::size_t t = 0; t < n_trials; ++t)
        samples.push_back(logdet_sample(n_a, n_b, rng));
    return summarize_logdet(samples, n_a, n_b);
}

} // namespace ansec

#endif // ANSEC_SECRECY_HPP
