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

#ifndef ANSEC_LATTICE_HPP
#define ANSEC_LATTICE_HPP

#include "ansec/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace ansec {

// Lattice generated by the columns of a full-column-rank basis. Complex
// bases are stored together with their real embedding; every geometric
// quantity is taken on the real lattice.
class LatticeBasis {
public:
    static LatticeBasis from_real(RealMatrix basis)
    {
        LatticeBasis L;
        L.real_ = std::move(basis);
        L.finish();
        return L;
    }

    static LatticeBasis from_complex(const ComplexMatrix& basis)
    {
        LatticeBasis L;
        L.complex_ = basis;
        L.real_ = real_embedding(basis);
        L.finish();
        return L;
    }

    const RealMatrix& real_basis() const noexcept { return real_; }
    const std::optional<ComplexMatrix>& complex_basis() const noexcept { return complex_; }
    bool is_complex() const noexcept { return complex_.has_value(); }

    // real lattice rank n
    Eigen::Index dimension() const noexcept { return real_.cols(); }
    Eigen::Index ambient_dimension() const noexcept { return real_.rows(); }

    // sqrt(det(B^T B)) of the real basis
    double volume() const noexcept { return std::exp(log_volume_); }
    double log_volume() const noexcept { return log_volume_; }

private:
    LatticeBasis() = default;

    void finish()
    {
        require_finite(real_, "lattice basis");
        if (real_.cols() == 0 || real_.rows() < real_.cols())
            throw Error(ErrorKind::invalid_argument, "lattice basis must be m x n with m >= n >= 1");
        Eigen::JacobiSVD<RealMatrix> svd(real_);
        const auto& s = svd.singularValues();
        if (!(s(s.size() - 1) > tol::rank * s(0)))
            throw Error(ErrorKind::rank_deficient, "lattice basis is not full column rank");
        log_volume_ = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            log_volume_ += std::log(s(i));
    }

    RealMatrix real_;
    std::optional<ComplexMatrix> complex_;
    double log_volume_ = 0.0;
};

struct CvpResult {
    IntVector coefficients;
    RealVector point;
    double distance = 0.0;
};

struct LllResult {
    LatticeBasis basis;
    IntMatrix transform;  // reduced = original * transform, |det| = 1
};

struct EnumerationLimits {
    Eigen::Index cvp_max_dimension = 40;
    Eigen::Index svp_max_dimension = 24;
};

namespace detail {

// Householder QR of a real full-column-rank matrix with positive diagonal.
struct RealQr {
    RealMatrix Q;
    RealMatrix R;
};

inline RealQr real_qr(const RealMatrix& B)
{
    const auto n = B.cols();
    Eigen::HouseholderQR<RealMatrix> qr(B);
    RealQr f;
    f.Q = qr.householderQ() * RealMatrix::Identity(B.rows(), n);
    f.R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (f.R(i, i) < 0) {
            f.R.row(i) *= -1.0;
            f.Q.col(i) *= -1.0;
        }
    }
    return f;
}

inline bool lex_less(const IntVector& a, const IntVector& b)
{
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// One LLL pass on the R factor; U tracks the column operations.
inline void lll_on_r(RealMatrix& R, IntMatrix& U, double delta)
{
    const auto n = R.cols();
    auto size_reduce = [&](Eigen::Index k) {
        for (Eigen::Index j = k - 1; j >= 0; --j) {
            const double q = std::round(R(j, k) / R(j, j));
            if (q == 0.0)
                continue;
            const auto qi = static_cast<long long>(q);
            R.col(k).head(j + 1) -= q * R.col(j).head(j + 1);
            U.col(k) -= qi * U.col(j);
        }
    };

    Eigen::Index k = 1;
    std::size_t iters = 0;
    while (k < n) {
        if (++iters > 10'000'000)
            throw Error(ErrorKind::factorization_failure, "LLL did not terminate");
        size_reduce(k);
        const double a = R(k - 1, k);
        const double b = R(k, k);
        if (delta * R(k - 1, k - 1) * R(k - 1, k - 1) > a * a + b * b) {
            R.col(k - 1).swap(R.col(k));
            U.col(k - 1).swap(U.col(k));
            // Givens on rows k-1, k to zero R(k, k-1)
            const double x = R(k - 1, k - 1);
            const double y = R(k, k - 1);
            const double r = std::hypot(x, y);
            const double c = x / r;
            const double s = y / r;
            for (Eigen::Index j = k - 1; j < n; ++j) {
                const double top = R(k - 1, j);
                const double bot = R(k, j);
                R(k - 1, j) = c * top + s * bot;
                R(k, j) = -s * top + c * bot;
            }
            R(k, k - 1) = 0.0;
            if (R(k, k) < 0)
                R.row(k) *= -1.0;
            k = std::max<Eigen::Index>(k - 1, 1);
        } else {
            ++k;
        }
    }
}

inline bool lll_conditions_hold(const RealMatrix& R, double delta, double slack)
{
    const auto n = R.cols();
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index j = 0; j < k; ++j) {
            if (std::abs(R(j, k) / R(j, j)) > 0.5 + slack)
                return false;
        }
        if (k > 0) {
            const double lhs = delta * R(k - 1, k - 1) * R(k - 1, k - 1);
            const double rhs = R(k - 1, k) * R(k - 1, k) + R(k, k) * R(k, k);
            if (lhs > rhs * (1.0 + slack))
                return false;
        }
    }
    return true;
}

// Schnorr-Euchner depth-first search for the integer z minimising
// ||qt - R z||^2, with optional per-coordinate boxes. The zigzag at each
// level walks two cursors outward from round(center), so candidates come in
// order of increasing distance even when a box cuts one side off.
struct EnumerationProblem {
    const RealMatrix* R = nullptr;
    const RealVector* qt = nullptr;
    std::optional<IntVector> lo;
    std::optional<IntVector> hi;
    double radius2 = std::numeric_limits<double>::infinity();
    bool exclude_zero = false;
};

struct EnumerationOutcome {
    bool found = false;
    IntVector z;
    double dist2 = 0.0;
    std::uint64_t nodes = 0;
};

template <class TieKey>
EnumerationOutcome schnorr_euchner(const EnumerationProblem& p, TieKey&& tie_key)
{
    const RealMatrix& R = *p.R;
    const RealVector& qt = *p.qt;
    const auto n = R.cols();
    constexpr long long unbounded_lo = std::numeric_limits<long long>::min() / 4;
    constexpr long long unbounded_hi = std::numeric_limits<long long>::max() / 4;

    std::vector<long long> lo(n, unbounded_lo), hi(n, unbounded_hi);
    if (p.lo)
        for (Eigen::Index i = 0; i < n; ++i) lo[i] = (*p.lo)(i);
    if (p.hi)
        for (Eigen::Index i = 0; i < n; ++i) hi[i] = (*p.hi)(i);
    for (Eigen::Index i = 0; i < n; ++i)
        if (lo[i] > hi[i])
            return {};

    std::vector<double> center(n), above(n + 1, 0.0);
    std::vector<long long> up(n), down(n);
    IntVector z = IntVector::Zero(n);
    EnumerationOutcome best;
    IntVector best_key;
    double radius2 = p.radius2;

    auto eps_of = [](double r2) { return 1e-12 * std::max(1.0, r2); };

    auto init_level = [&](Eigen::Index k) {
        double acc = qt(k);
        for (Eigen::Index j = k + 1; j < n; ++j)
            acc -= R(k, j) * static_cast<double>(z(j));
        center[k] = acc / R(k, k);
        const double rc = std::round(center[k]);
        long long r0;
        if (rc >= static_cast<double>(unbounded_hi))
            r0 = unbounded_hi;
        else if (rc <= static_cast<double>(unbounded_lo))
            r0 = unbounded_lo;
        else
            r0 = static_cast<long long>(rc);
        up[k] = std::max(r0, lo[k]);
        down[k] = std::min(r0 - 1, hi[k]);
    };

    // next candidate at level k in zigzag order; false when exhausted
    auto next_candidate = [&](Eigen::Index k, long long& val) {
        const bool ok_up = up[k] <= hi[k];
        const bool ok_down = down[k] >= lo[k];
        if (!ok_up && !ok_down)
            return false;
        bool take_up;
        if (ok_up && ok_down)
            take_up = std::abs(static_cast<double>(up[k]) - center[k]) <=
                      std::abs(center[k] - static_cast<double>(down[k]));
        else
            take_up = ok_up;
        if (take_up)
            val = up[k]++;
        else
            val = down[k]--;
        return true;
    };

    Eigen::Index k = n - 1;
    init_level(k);
    for (;;) {
        long long val;
        if (!next_candidate(k, val)) {
            if (++k >= n)
                break;
            continue;
        }
        const double d = R(k, k) * (center[k] - static_cast<double>(val));
        const double partial = above[k + 1] + d * d;
        ++best.nodes;
        if (partial > radius2 + eps_of(radius2)) {
            // zigzag order: everything left on this level is farther
            if (++k >= n)
                break;
            continue;
        }
        z(k) = val;
        if (k > 0) {
            above[k] = partial;
            --k;
            init_level(k);
            continue;
        }
        if (p.exclude_zero && z.isZero())
            continue;
        bool take = false;
        if (!best.found) {
            take = true;
        } else {
            const double eps = eps_of(best.dist2);
            if (partial < best.dist2 - eps)
                take = true;
            else if (partial <= best.dist2 + eps)
                take = lex_less(tie_key(z), best_key);
        }
        if (take) {
            best.found = true;
            best.z = z;
            best.dist2 = partial;
            best_key = tie_key(z);
            radius2 = std::min(radius2, partial);
        }
    }
    return best;
}

} // namespace detail

// LLL reduction with Lovasz parameter delta in (1/4, 1].
inline LllResult lll_reduce(const LatticeBasis& L, double delta = 0.75)
{
    if (!(delta > 0.25 && delta <= 1.0))
        throw Error(ErrorKind::invalid_argument, "LLL delta must lie in (1/4, 1]");
    const RealMatrix& B = L.real_basis();
    const auto n = B.cols();
    IntMatrix U = IntMatrix::Identity(n, n);
    if (n == 1)
        return {L, U};

    // The R factor drifts on ill-conditioned input; re-derive it from the
    // exact integer transform until the conditions hold on a fresh QR.
    for (int round = 0; round < 8; ++round) {
        RealMatrix current = B * U.cast<double>();
        RealMatrix R = detail::real_qr(current).R;
        if (round > 0 && detail::lll_conditions_hold(R, delta, 1e-9))
            break;
        IntMatrix step = IntMatrix::Identity(n, n);
        detail::lll_on_r(R, step, delta);
        U = U * step;
        if (step.isIdentity())
            break;
    }

    RealMatrix reduced = B * U.cast<double>();
    return {LatticeBasis::from_real(std::move(reduced)), U};
}

enum class BabaiPreprocess { none, lll };

// Nearest-plane rounding. Within 2^{n/2} of the true closest distance when
// the basis is LLL-reduced, hence the default preprocessing.
inline CvpResult babai_nearest_plane(const LatticeBasis& L, const RealVector& target,
                                     BabaiPreprocess pre = BabaiPreprocess::lll)
{
    const RealMatrix& B0 = L.real_basis();
    if (target.size() != B0.rows())
        throw Error(ErrorKind::invalid_argument, "target dimension does not match basis");
    require_finite(target, "target");
    const auto n = B0.cols();

    IntMatrix U = IntMatrix::Identity(n, n);
    RealMatrix B = B0;
    if (pre == BabaiPreprocess::lll) {
        auto red = lll_reduce(L);
        U = red.transform;
        B = red.basis.real_basis();
    }
    auto f = detail::real_qr(B);
    RealVector qt = f.Q.transpose() * target;
    IntVector z(n);
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        double acc = qt(k);
        for (Eigen::Index j = k + 1; j < n; ++j)
            acc -= f.R(k, j) * static_cast<double>(z(j));
        z(k) = static_cast<long long>(std::round(acc / f.R(k, k)));
    }
    CvpResult out;
    out.coefficients = U * z;
    out.point = B0 * out.coefficients.cast<double>();
    out.distance = (target - out.point).norm();
    return out;
}

struct CvpOptions {
    std::optional<double> radius_hint;
    EnumerationLimits limits{};
    bool lll_preprocess = true;
};

// Exact closest vector by Schnorr-Euchner enumeration on the (reduced)
// basis. Ties go to the lexicographically smallest coefficient vector.
inline CvpResult cvp_sphere_decode(const LatticeBasis& L, const RealVector& target,
                                   const CvpOptions& opt = {})
{
    const RealMatrix& B0 = L.real_basis();
    const auto n = B0.cols();
    if (n > opt.limits.cvp_max_dimension)
        throw Error(ErrorKind::capacity, "CVP dimension " + std::to_string(n) + " exceeds enumeration cap");
    if (target.size() != B0.rows())
        throw Error(ErrorKind::invalid_argument, "target dimension does not match basis");
    require_finite(target, "target");

    IntMatrix U = IntMatrix::Identity(n, n);
    RealMatrix B = B0;
    if (opt.lll_preprocess) {
        auto red = lll_reduce(L);
        U = red.transform;
        B = red.basis.real_basis();
    }
    auto f = detail::real_qr(B);
    RealVector qt = f.Q.transpose() * target;
    const double orth2 = (target - f.Q * qt).squaredNorm();

    detail::EnumerationProblem prob;
    prob.R = &f.R;
    prob.qt = &qt;
    if (opt.radius_hint) {
        if (*opt.radius_hint < 0)
            throw Error(ErrorKind::invalid_argument, "negative radius hint");
        const double r2 = (*opt.radius_hint) * (*opt.radius_hint);
        if (r2 < orth2 * (1 - 1e-12))
            throw Error(ErrorKind::not_found, "no lattice point within radius hint");
        prob.radius2 = r2 - orth2;
    }
    auto key = [&U](const IntVector& z) -> IntVector { return U * z; };
    auto res = detail::schnorr_euchner(prob, key);
    if (!res.found)
        throw Error(ErrorKind::not_found, "no lattice point within radius hint");

    CvpResult out;
    out.coefficients = U * res.z;
    out.point = B0 * out.coefficients.cast<double>();
    out.distance = (target - out.point).norm();
    return out;
}

// Closest point B z to t over the integer box lo <= z <= hi (inclusive).
// Columns are ordered by sorted QR so that strong columns sit at the
// bottom of R, where the search starts.
inline CvpResult cvp_box(const RealMatrix& B, const RealVector& target, const IntVector& lo,
                         const IntVector& hi, const EnumerationLimits& limits = {})
{
    const auto n = B.cols();
    const auto m = B.rows();
    if (n > limits.cvp_max_dimension)
        throw Error(ErrorKind::capacity, "box CVP dimension " + std::to_string(n) + " exceeds enumeration cap");
    if (target.size() != m || lo.size() != n || hi.size() != n)
        throw Error(ErrorKind::invalid_argument, "box CVP dimension mismatch");
    require_finite(B, "box CVP basis");
    require_finite(target, "target");

    // Sorted QR (modified Gram-Schmidt, weakest residual column first).
    RealMatrix Q = B;
    RealMatrix R = RealMatrix::Zero(n, n);
    std::vector<Eigen::Index> perm(n);
    for (Eigen::Index i = 0; i < n; ++i) perm[i] = i;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index pick = i;
        double best = Q.col(i).squaredNorm();
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double s = Q.col(j).squaredNorm();
            if (s < best) {
                best = s;
                pick = j;
            }
        }
        if (pick != i) {
            Q.col(i).swap(Q.col(pick));
            R.col(i).swap(R.col(pick));
            std::swap(perm[i], perm[pick]);
        }
        const double rii = Q.col(i).norm();
        if (!(rii > 0))
            throw Error(ErrorKind::rank_deficient, "box CVP basis is rank deficient");
        R(i, i) = rii;
        Q.col(i) /= rii;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            R(i, j) = Q.col(i).dot(Q.col(j));
            Q.col(j) -= R(i, j) * Q.col(i);
        }
    }
    RealVector qt = Q.transpose() * target;
    IntVector plo(n), phi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        plo(i) = lo(perm[i]);
        phi(i) = hi(perm[i]);
    }
    auto unpermute = [&](const IntVector& zp) {
        IntVector z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(perm[i]) = zp(i);
        return z;
    };
    detail::EnumerationProblem prob;
    prob.R = &R;
    prob.qt = &qt;
    prob.lo = plo;
    prob.hi = phi;
    auto res = detail::schnorr_euchner(prob, unpermute);
    if (!res.found)
        throw Error(ErrorKind::not_found, "empty box");
    CvpResult out;
    out.coefficients = unpermute(res.z);
    out.point = B * out.coefficients.cast<double>();
    out.distance = (target - out.point).norm();
    return out;
}

struct SvpResult {
    IntVector coefficients;
    RealVector vector;
    double lambda1 = 0.0;
};

inline SvpResult svp_shortest(const LatticeBasis& L, const EnumerationLimits& limits = {})
{
    const auto n = L.dimension();
    if (n > limits.svp_max_dimension)
        throw Error(ErrorKind::capacity, "SVP dimension " + std::to_string(n) + " exceeds enumeration cap");
    auto red = lll_reduce(L);
    const RealMatrix& B = red.basis.real_basis();
    auto f = detail::real_qr(B);
    RealVector qt = RealVector::Zero(n);
    detail::EnumerationProblem prob;
    prob.R = &f.R;
    prob.qt = &qt;
    prob.exclude_zero = true;
    // the first reduced column is a valid starting radius
    prob.radius2 = B.col(0).squaredNorm();
    const IntMatrix& U = red.transform;
    auto key = [&U](const IntVector& z) -> IntVector { return U * z; };
    auto res = detail::schnorr_euchner(prob, key);
    if (!res.found)
        throw Error(ErrorKind::factorization_failure, "SVP enumeration found no vector");
    SvpResult out;
    out.coefficients = U * res.z;
    out.vector = L.real_basis() * out.coefficients.cast<double>();
    out.lambda1 = out.vector.norm();
    return out;
}

enum class RadiusMode { asymptotic, exact_ball };

// Radius of the ball whose volume equals the lattice volume.
// asymptotic: sqrt(n / (2 pi e)) vol^{1/n}; exact_ball: (vol / V_n)^{1/n}.
inline double effective_radius(const LatticeBasis& L, RadiusMode mode = RadiusMode::asymptotic)
{
    const double n = static_cast<double>(L.dimension());
    const double log_root_vol = L.log_volume() / n;
    if (mode == RadiusMode::asymptotic)
        return std::sqrt(n / (2.0 * std::numbers::pi * std::numbers::e)) * std::exp(log_root_vol);
    const double log_unit_ball = 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0);
    return std::exp(log_root_vol - log_unit_ball / n);
}

// Dual basis inside the span: B (B^H B)^{-1}; (B^{-1})^H for square B.
inline ComplexMatrix dual_basis(const ComplexMatrix& B)
{
    ComplexMatrix gram = B.adjoint() * B;
    return B * gram.inverse();
}

// Transference bound r_cov <= N / lambda1(dual) with N the complex rank.
inline double covering_radius_upper_bound(const LatticeBasis& L, const EnumerationLimits& limits = {})
{
    if (!L.is_complex())
        throw Error(ErrorKind::invalid_argument, "covering radius bound needs a complex basis");
    const ComplexMatrix& B = *L.complex_basis();
    auto dual = LatticeBasis::from_complex(dual_basis(B));
    const auto sv = svp_shortest(dual, limits);
    return static_cast<double>(B.cols()) / sv.lambda1;
}

// Exact covering radius of a rank-2 lattice: the largest circumradius of an
// empty-circle (Delaunay) triangle incident to the origin.
inline double covering_radius_exact_2d(const LatticeBasis& L)
{
    if (L.dimension() != 2)
        throw Error(ErrorKind::invalid_argument, "covering_radius_exact_2d needs a rank-2 lattice");
    // isometric 2x2 coordinates, then Lagrange-Gauss reduction
    Eigen::Matrix2d R = detail::real_qr(L.real_basis()).R;
    Eigen::Vector2d b1 = R.col(0), b2 = R.col(1);
    for (int it = 0; it < 1000; ++it) {
        if (b2.squaredNorm() < b1.squaredNorm())
            std::swap(b1, b2);
        const double q = std::round(b1.dot(b2) / b1.squaredNorm());
        if (q == 0.0)
            break;
        b2 -= q * b1;
    }

    constexpr int span = 3;
    std::vector<Eigen::Vector2d> pts;
    for (int i = -span; i <= span; ++i)
        for (int j = -span; j <= span; ++j)
            pts.emplace_back(i * b1 + j * b2);

    const double scale = b2.norm();
    double best = 0.0;
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            const Eigen::Vector2d& p = pts[a];
            const Eigen::Vector2d& q = pts[b];
            if (p.isZero() || q.isZero())
                continue;
            const double d = 2.0 * (p.x() * q.y() - p.y() * q.x());
            if (std::abs(d) < 1e-12 * scale * scale)
                continue;
            const double p2 = p.squaredNorm();
            const double q2 = q.squaredNorm();
            Eigen::Vector2d c((q.y() * p2 - p.y() * q2) / d, (p.x() * q2 - q.x() * p2) / d);
            const double r = c.norm();
            if (r > 2.0 * scale)
                continue;
            bool empty = true;
            for (const auto& s : pts) {
                if ((s - c).norm() < r * (1.0 - 1e-9)) {
                    empty = false;
                    break;
                }
            }
            if (empty)
                best = std::max(best, r);
        }
    }
    return best;
}

} // namespace ansec

#endif // ANSEC_LATTICE_HPP
