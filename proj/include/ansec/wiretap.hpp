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

// Alice -> (Bob, Eve) MIMO wiretap model with null-space artificial noise.
//
//   z = H x + n_B          (Bob, N_B antennas)
//   y = G x + n_E          (Eve, N_E antennas)
//   x = P u + Z v          (Alice, N_A antennas, H Z = 0)
//
// Two precoders are provided. SVD precoding sends V1 u, where H = U S V^H
// and V = [V1, Z]. Lattice (vector-perturbation) precoding sends
// H^+ (u - A w) with w the Gaussian-integer vector that minimises the
// data power and A = 2 sqrt(M); Bob undoes the perturbation by a modulo-A
// fold back into the constellation window.

#ifndef ANSEC_WIRETAP_HPP
#define ANSEC_WIRETAP_HPP

#include "ansec/lattice.hpp"
#include "ansec/matcore.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ansec {

using Rng = std::mt19937_64;

// Square M-QAM with per-dimension alphabet {-sqrt(M)+1, ..., sqrt(M)-1}.
class Constellation {
public:
    explicit Constellation(int order) : order_(order)
    {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
        if (order < 4 || side * side != order)
            throw Error(ErrorKind::invalid_argument, "QAM order must be a perfect square >= 4");
        side_ = side;
        for (int k = 0; k < side; ++k)
            points_.push_back(2 * k - side + 1);
    }

    int order() const noexcept { return order_; }
    int side() const noexcept { return side_; }
    const std::vector<int>& points_per_dim() const noexcept { return points_; }
    // perturbation period 2 sqrt(M)
    double modulus() const noexcept { return 2.0 * side_; }
    double bits_per_symbol() const noexcept { return std::log2(static_cast<double>(order_)); }

    // nearest alphabet point, clipped to the outermost levels
    double quantize(double x) const
    {
        const double k = std::round((x + side_ - 1) / 2.0);
        const double kc = std::clamp(k, 0.0, static_cast<double>(side_ - 1));
        return 2.0 * kc - side_ + 1;
    }

    cdouble quantize(cdouble x) const { return {quantize(x.real()), quantize(x.imag())}; }

    // odd integer -> unique congruent alphabet point modulo 2 sqrt(M)
    double wrap(long long odd) const
    {
        const long long period = 2LL * side_;
        const long long shift = odd + side_ - 1;  // even, in [0, period) when inside the window
        long long r = shift % period;
        if (r < 0)
            r += period;
        return static_cast<double>(r - side_ + 1);
    }

    static long long nearest_odd(double x)
    {
        return 2LL * static_cast<long long>(std::floor(x / 2.0)) + 1;
    }

private:
    int order_;
    int side_ = 0;
    std::vector<int> points_;
};

enum class Precoder { svd, lattice };
enum class LpMode { exact, babai };

inline const char* to_string(Precoder p) { return p == Precoder::svd ? "svd" : "lattice"; }
inline const char* to_string(LpMode m) { return m == LpMode::exact ? "exact" : "babai"; }

struct WiretapScenario {
    int n_a = 10;
    int n_b = 9;
    int n_e = 20;
    int qam_order = 64;
    double sigma_b2 = 0.0;
    double sigma_e2 = 0.0;
    double beta = 1.0;
    Precoder precoder = Precoder::lattice;
    std::optional<double> total_power_budget;

    void validate() const
    {
        if (n_a < 2 || n_b < 1 || n_e < 1)
            throw Error(ErrorKind::validation, "antenna counts must be positive (N_A >= 2)");
        if (!(n_b < n_a))
            throw Error(ErrorKind::validation, "scenario requires N_B < N_A");
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(qam_order))));
        if (qam_order < 4 || side * side != qam_order)
            throw Error(ErrorKind::validation, "M must be a perfect square >= 4");
        if (!(sigma_b2 >= 0.0) || !(sigma_e2 >= 0.0))
            throw Error(ErrorKind::validation, "noise variances must be non-negative");
        if (!(beta > 0.0))
            throw Error(ErrorKind::validation, "beta must be positive");
        if (total_power_budget && !(*total_power_budget > 0.0))
            throw Error(ErrorKind::validation, "power budget must be positive");
    }
};

struct TransmitRecord {
    ComplexVector u;
    ComplexVector v;
    ComplexVector w_hat;  // empty for SVD precoding
    ComplexVector x;
    double data_power = 0.0;
    double noise_power = 0.0;
};

// --- sampling --------------------------------------------------------------

// i.i.d. CN(0, 1) entries
inline ComplexMatrix sample_channel(Eigen::Index rows, Eigen::Index cols, Rng& rng)
{
    if (rows < 1 || cols < 1)
        throw Error(ErrorKind::invalid_argument, "channel dimensions must be positive");
    std::normal_distribution<double> half(0.0, std::sqrt(0.5));
    ComplexMatrix H(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = half(rng);
            const double im = half(rng);
            H(i, j) = cdouble(re, im);
        }
    return H;
}

inline ComplexVector sample_secret(const Constellation& c, Eigen::Index n_b, Rng& rng)
{
    std::uniform_int_distribution<int> pick(0, c.side() - 1);
    const auto& pts = c.points_per_dim();
    ComplexVector u(n_b);
    for (Eigen::Index i = 0; i < n_b; ++i) {
        const double re = pts[pick(rng)];
        const double im = pts[pick(rng)];
        u(i) = cdouble(re, im);
    }
    return u;
}

// Continuous direction (uniform per real/imag part on [-1, 1]) scaled to
// the requested norm.
inline ComplexVector sample_artificial_noise(Eigen::Index dim, double target_norm, Rng& rng)
{
    if (dim < 1)
        throw Error(ErrorKind::invalid_argument, "artificial noise dimension must be positive");
    if (!(target_norm > 0.0) || !std::isfinite(target_norm))
        throw Error(ErrorKind::invalid_argument, "artificial noise norm must be positive");
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    ComplexVector v(dim);
    double nrm = 0.0;
    do {
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double re = unif(rng);
            const double im = unif(rng);
            v(i) = cdouble(re, im);
        }
        nrm = v.norm();
    } while (!(nrm > 0.0));
    v *= target_norm / nrm;
    return v;
}

inline ComplexVector transmit_through(const ComplexMatrix& channel, const ComplexVector& x,
                                      double sigma2, Rng& rng)
{
    if (channel.cols() != x.size())
        throw Error(ErrorKind::invalid_argument, "channel/signal dimension mismatch");
    if (!(sigma2 >= 0.0))
        throw Error(ErrorKind::invalid_argument, "noise variance must be non-negative");
    ComplexVector out = channel * x;
    if (sigma2 > 0.0) {
        std::normal_distribution<double> half(0.0, std::sqrt(0.5 * sigma2));
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            const double re = half(rng);
            const double im = half(rng);
            out(i) += cdouble(re, im);
        }
    }
    return out;
}

// --- precoders -------------------------------------------------------------

// Per-channel SVD precoder state: P = V1, Z = V2.
struct SvdPrecoder {
    SvdFactors factors;
    ComplexMatrix P;
    ComplexMatrix Z;

    static SvdPrecoder from_channel(const ComplexMatrix& H)
    {
        if (H.rows() >= H.cols())
            throw Error(ErrorKind::invalid_argument, "precoding needs N_B < N_A");
        SvdPrecoder s{svd_decompose(H), {}, {}};
        if (!full_row_rank(s.factors.S, H.rows()))
            throw Error(ErrorKind::rank_deficient, "channel is not full row rank");
        s.P = s.factors.V.leftCols(H.rows());
        s.Z = s.factors.V.rightCols(H.cols() - H.rows());
        return s;
    }
};

// Per-channel lattice precoder state.
struct LatticePrecoder {
    ComplexMatrix pinv;  // H^+
    ComplexMatrix Z;     // null(H)

    static LatticePrecoder from_channel(const ComplexMatrix& H)
    {
        return {pseudoinverse(H), null_space(H)};
    }
};

inline TransmitRecord svd_precode(const SvdPrecoder& pre, const ComplexVector& u, const ComplexVector& v)
{
    if (u.size() != pre.P.cols() || v.size() != pre.Z.cols())
        throw Error(ErrorKind::invalid_argument, "svd_precode dimension mismatch");
    TransmitRecord rec;
    rec.u = u;
    rec.v = v;
    rec.x = pre.P * u + pre.Z * v;
    rec.data_power = (pre.P * u).squaredNorm();
    rec.noise_power = (pre.Z * v).squaredNorm();
    return rec;
}

inline TransmitRecord svd_precode(const ComplexMatrix& H, const ComplexVector& u, const ComplexVector& v)
{
    return svd_precode(SvdPrecoder::from_channel(H), u, v);
}

// Gaussian-integer w minimising ||H^+ (u - A w)||.
inline ComplexVector perturbation_vector(const ComplexMatrix& pinv, const ComplexVector& u,
                                         double modulus, LpMode mode, const EnumerationLimits& limits = {})
{
    if (u.isZero())
        return ComplexVector::Zero(u.size());
    auto lattice = LatticeBasis::from_complex(modulus * pinv);
    const RealVector target = real_embedding(ComplexVector(pinv * u));
    CvpResult res;
    if (mode == LpMode::exact) {
        CvpOptions opt;
        opt.limits = limits;
        res = cvp_sphere_decode(lattice, target, opt);
    } else {
        res = babai_nearest_plane(lattice, target, BabaiPreprocess::lll);
    }
    return complex_from_real(res.coefficients.cast<double>());
}

inline TransmitRecord lattice_precode(const LatticePrecoder& pre, const ComplexVector& u, const ComplexVector& v,
                                      const Constellation& c, LpMode mode, const EnumerationLimits& limits = {})
{
    if (u.size() != pre.pinv.cols() || v.size() != pre.Z.cols())
        throw Error(ErrorKind::invalid_argument, "lattice_precode dimension mismatch");
    TransmitRecord rec;
    rec.u = u;
    rec.v = v;
    rec.w_hat = perturbation_vector(pre.pinv, u, c.modulus(), mode, limits);
    const ComplexVector data = pre.pinv * (u - c.modulus() * rec.w_hat);
    rec.x = data + pre.Z * v;
    rec.data_power = data.squaredNorm();
    rec.noise_power = (pre.Z * v).squaredNorm();
    return rec;
}

inline TransmitRecord lattice_precode(const ComplexMatrix& H, const ComplexVector& u, const ComplexVector& v,
                                      const Constellation& c, LpMode mode)
{
    return lattice_precode(LatticePrecoder::from_channel(H), u, v, c, mode);
}

// --- receivers -------------------------------------------------------------

inline ComplexVector bob_decode_svd(const ComplexVector& z, const SvdPrecoder& pre, const Constellation& c)
{
    const auto nb = pre.P.cols();
    if (z.size() != nb)
        throw Error(ErrorKind::invalid_argument, "received vector has wrong dimension");
    ComplexVector eq = pre.factors.U.adjoint() * z;
    ComplexVector out(nb);
    for (Eigen::Index i = 0; i < nb; ++i)
        out(i) = c.quantize(eq(i) / pre.factors.S(i));
    return out;
}

inline ComplexVector bob_decode_svd(const ComplexVector& z, const ComplexMatrix& H, const Constellation& c)
{
    return bob_decode_svd(z, SvdPrecoder::from_channel(H), c);
}

// Nearest odd integer per real dimension, folded modulo A into the window.
inline ComplexVector bob_decode_lp(const ComplexVector& z, const Constellation& c)
{
    ComplexVector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        out(i) = cdouble(c.wrap(Constellation::nearest_odd(z(i).real())),
                         c.wrap(Constellation::nearest_odd(z(i).imag())));
    }
    return out;
}

// Exact ML over the finite alphabet: u = 2k - (sqrt(M) - 1) with k in
// [0, sqrt(M) - 1] per real dimension, searched on the lattice 2 (GP)_R.
inline ComplexVector eve_decode_svd(const ComplexVector& y, const ComplexMatrix& G, const ComplexMatrix& P,
                                    const Constellation& c, const EnumerationLimits& limits = {})
{
    const ComplexMatrix B = G * P;
    if (y.size() != B.rows())
        throw Error(ErrorKind::invalid_argument, "eavesdropper observation has wrong dimension");
    const RealMatrix Br = real_embedding(B);
    const auto n = Br.cols();
    const double offset = static_cast<double>(c.side() - 1);
    const RealVector target = real_embedding(y) + offset * Br * RealVector::Ones(n);
    const IntVector lo = IntVector::Zero(n);
    const IntVector hi = IntVector::Constant(n, c.side() - 1);
    auto res = cvp_box(2.0 * Br, target, lo, hi, limits);
    RealVector u = 2.0 * res.coefficients.cast<double>() - RealVector::Constant(n, offset);
    return complex_from_real(u);
}

// Exact lattice decoding of s = u - A w over the full odd Gaussian-integer
// grid (s = 2k + 1), then folded back into the constellation.
inline ComplexVector eve_decode_lp(const ComplexVector& y, const ComplexMatrix& G, const LatticePrecoder& pre,
                                   const Constellation& c, const EnumerationLimits& limits = {})
{
    const ComplexMatrix B = G * pre.pinv;
    if (y.size() != B.rows())
        throw Error(ErrorKind::invalid_argument, "eavesdropper observation has wrong dimension");
    const RealMatrix Br = real_embedding(B);
    const auto n = Br.cols();
    const RealVector target = real_embedding(y) - Br * RealVector::Ones(n);
    auto lattice = LatticeBasis::from_real(2.0 * Br);
    CvpOptions opt;
    opt.limits = limits;
    auto res = cvp_sphere_decode(lattice, target, opt);
    ComplexVector out(n / 2);
    for (Eigen::Index i = 0; i < n / 2; ++i) {
        const long long re = 2 * res.coefficients(2 * i) + 1;
        const long long im = 2 * res.coefficients(2 * i + 1) + 1;
        out(i) = cdouble(c.wrap(re), c.wrap(im));
    }
    return out;
}

inline ComplexVector eve_decode_lp(const ComplexVector& y, const ComplexMatrix& G, const ComplexMatrix& H,
                                   const Constellation& c)
{
    return eve_decode_lp(y, G, LatticePrecoder{pseudoinverse(H), {}}, c);
}

} // namespace ansec

#endif // ANSEC_WIRETAP_HPP
