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

// Brute-force reference implementations used by the test suites and the
// lattice self-test. Nothing here calls into the enumeration or reduction
// code it is meant to check.

#ifndef ANSEC_TESTING_ORACLES_HPP
#define ANSEC_TESTING_ORACLES_HPP

#include "ansec/lattice.hpp"
#include "ansec/matcore.hpp"
#include "ansec/wiretap.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace ansec::oracle {

// Visit every integer vector in the box lo <= z <= hi.
inline void for_each_in_box(const IntVector& lo, const IntVector& hi, const std::function<void(const IntVector&)>& fn)
{
    const auto n = lo.size();
    IntVector z = lo;
    for (;;) {
        fn(z);
        Eigen::Index i = n - 1;
        while (i >= 0) {
            if (z(i) < hi(i)) {
                ++z(i);
                break;
            }
            z(i) = lo(i);
            --i;
        }
        if (i < 0)
            return;
    }
}

inline double box_volume(const IntVector& lo, const IntVector& hi)
{
    double v = 1.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        v *= static_cast<double>(hi(i) - lo(i) + 1);
    return v;
}

// Coefficient box that provably contains every lattice point within
// distance `radius` of t: |z_i - (B^+ t)_i| <= ||row_i(B^+)|| radius.
inline std::pair<IntVector, IntVector> coefficient_box(const RealMatrix& B, const RealVector& t, double radius)
{
    const RealMatrix pinv = (B.transpose() * B).inverse() * B.transpose();
    const RealVector centre = pinv * t;
    const auto n = B.cols();
    IntVector lo(n), hi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = pinv.row(i).norm() * radius * (1.0 + 1e-9) + 1e-9;
        lo(i) = static_cast<long long>(std::floor(centre(i) - w));
        hi(i) = static_cast<long long>(std::ceil(centre(i) + w));
    }
    return {lo, hi};
}

struct BruteCvp {
    IntVector coefficients;
    double distance = std::numeric_limits<double>::infinity();
};

// Exhaustive closest point over a coefficient box.
inline BruteCvp closest_in_box(const RealMatrix& B, const RealVector& t, const IntVector& lo, const IntVector& hi)
{
    BruteCvp best;
    for_each_in_box(lo, hi, [&](const IntVector& z) {
        const double d = (t - B * z.cast<double>()).norm();
        if (d < best.distance) {
            best.distance = d;
            best.coefficients = z;
        }
    });
    return best;
}

// Exhaustive closest point within `radius` (a known upper bound on the
// closest distance, e.g. any lattice point's distance).
inline BruteCvp closest_within(const RealMatrix& B, const RealVector& t, double radius)
{
    auto [lo, hi] = coefficient_box(B, t, radius);
    return closest_in_box(B, t, lo, hi);
}

// Shortest nonzero vector by exhaustive search; radius must be >= lambda1
// (the norm of any basis column works).
inline double shortest_within(const RealMatrix& B, double radius)
{
    auto [lo, hi] = coefficient_box(B, RealVector::Zero(B.rows()), radius);
    double best = std::numeric_limits<double>::infinity();
    for_each_in_box(lo, hi, [&](const IntVector& z) {
        if (z.isZero())
            return;
        best = std::min(best, (B * z.cast<double>()).norm());
    });
    return best;
}

// Classical Gram-Schmidt in long double: mu coefficients and squared norms.
struct Gso {
    std::vector<std::vector<long double>> mu;
    std::vector<long double> bstar2;
};

inline Gso gram_schmidt(const RealMatrix& B)
{
    const auto n = B.cols();
    const auto m = B.rows();
    std::vector<std::vector<long double>> bstar(n, std::vector<long double>(m));
    Gso g;
    g.mu.assign(n, std::vector<long double>(n, 0.0L));
    g.bstar2.assign(n, 0.0L);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index r = 0; r < m; ++r) bstar[i][r] = B(r, i);
        for (Eigen::Index j = 0; j < i; ++j) {
            long double dot = 0;
            for (Eigen::Index r = 0; r < m; ++r) dot += static_cast<long double>(B(r, i)) * bstar[j][r];
            g.mu[i][j] = dot / g.bstar2[j];
            for (Eigen::Index r = 0; r < m; ++r) bstar[i][r] -= g.mu[i][j] * bstar[j][r];
        }
        long double s = 0;
        for (Eigen::Index r = 0; r < m; ++r) s += bstar[i][r] * bstar[i][r];
        g.bstar2[i] = s;
    }
    return g;
}

struct LllVerdict {
    bool size_reduced = true;
    bool lovasz = true;
    double max_abs_mu = 0.0;
};

inline LllVerdict check_lll(const RealMatrix& B, double delta, double slack = 1e-9)
{
    const auto g = gram_schmidt(B);
    LllVerdict v;
    const auto n = B.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const double a = static_cast<double>(std::fabs(g.mu[i][j]));
            v.max_abs_mu = std::max(v.max_abs_mu, a);
            if (a > 0.5 + slack)
                v.size_reduced = false;
        }
        if (i > 0) {
            const long double lhs = static_cast<long double>(delta) * g.bstar2[i - 1];
            const long double rhs = g.bstar2[i] + g.mu[i][i - 1] * g.mu[i][i - 1] * g.bstar2[i - 1];
            if (lhs > rhs * (1.0L + slack))
                v.lovasz = false;
        }
    }
    return v;
}

// |det| of an integer matrix by fraction-free Bareiss elimination.
inline long double integer_abs_det(IntMatrix A)
{
    const auto n = A.rows();
    std::vector<std::vector<long double>> M(n, std::vector<long double>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) M[i][j] = static_cast<long double>(A(i, j));
    long double prev = 1.0L;
    int sign = 1;
    for (Eigen::Index k = 0; k < n - 1; ++k) {
        if (M[k][k] == 0) {
            Eigen::Index sw = k + 1;
            while (sw < n && M[sw][k] == 0) ++sw;
            if (sw == n)
                return 0.0L;
            std::swap(M[k], M[sw]);
            sign = -sign;
        }
        for (Eigen::Index i = k + 1; i < n; ++i)
            for (Eigen::Index j = k + 1; j < n; ++j)
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) / prev;
        prev = M[k][k];
    }
    return std::fabs(M[n - 1][n - 1]);
}

// Textbook LLL (Cohen, Alg. 2.6.3 style) with the Gram-Schmidt data
// recomputed from scratch after every change. Slow and independent of the
// R-factor implementation in the library.
inline IntMatrix textbook_lll_transform(const RealMatrix& B0, double delta = 0.75)
{
    const auto n = B0.cols();
    IntMatrix U = IntMatrix::Identity(n, n);
    RealMatrix B = B0;
    Eigen::Index k = 1;
    int guard = 0;
    while (k < n && ++guard < 100000) {
        for (Eigen::Index j = k - 1; j >= 0; --j) {
            const auto g = gram_schmidt(B);
            const long double q = std::round(g.mu[k][j]);
            if (q != 0) {
                B.col(k) -= static_cast<double>(q) * B.col(j);
                U.col(k) -= static_cast<long long>(q) * U.col(j);
            }
        }
        const auto g = gram_schmidt(B);
        const long double mu = g.mu[k][k - 1];
        if (g.bstar2[k] < (static_cast<long double>(delta) - mu * mu) * g.bstar2[k - 1]) {
            B.col(k).swap(B.col(k - 1));
            U.col(k).swap(U.col(k - 1));
            k = std::max<Eigen::Index>(k - 1, 1);
        } else {
            ++k;
        }
    }
    return U;
}

// Exact closest point: reduce with the textbook LLL, bound the search
// radius by the first rounding point, then enumerate the coefficient box.
// Returns nullopt when the box would exceed max_box points.
inline std::optional<BruteCvp> exhaustive_cvp(const RealMatrix& B, const RealVector& t, double max_box = 2e6)
{
    const IntMatrix U = textbook_lll_transform(B);
    const RealMatrix Br = B * U.cast<double>();
    const RealMatrix pinv = (Br.transpose() * Br).inverse() * Br.transpose();
    RealVector z0 = (pinv * t).array().round().matrix();
    const double radius = (t - Br * z0).norm();
    auto [lo, hi] = coefficient_box(Br, t, radius);
    if (box_volume(lo, hi) > max_box)
        return std::nullopt;
    auto best = closest_in_box(Br, t, lo, hi);
    best.coefficients = U * best.coefficients;
    return best;
}

// Largest closest-point distance over `samples` uniform targets in the
// fundamental parallelepiped: a lower bound on the covering radius.
template <class Closest>
double sampled_deep_hole(const RealMatrix& B, std::size_t samples, Rng& rng, Closest&& closest_distance)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double best = 0.0;
    RealVector a(B.cols());
    for (std::size_t s = 0; s < samples; ++s) {
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = unif(rng);
        best = std::max(best, closest_distance(RealVector(B * a)));
    }
    return best;
}

// Exhaustive ML over all M^{N_B} symbol vectors.
inline ComplexVector exhaustive_ml(const ComplexVector& y, const ComplexMatrix& B, const Constellation& c)
{
    const auto n = B.cols();
    const int side = c.side();
    IntVector lo = IntVector::Zero(2 * n);
    IntVector hi = IntVector::Constant(2 * n, side - 1);
    ComplexVector best;
    double best_d = std::numeric_limits<double>::infinity();
    const auto& pts = c.points_per_dim();
    for_each_in_box(lo, hi, [&](const IntVector& k) {
        ComplexVector u(n);
        for (Eigen::Index i = 0; i < n; ++i) u(i) = cdouble(pts[k(2 * i)], pts[k(2 * i + 1)]);
        const double d = (y - B * u).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = u;
        }
    });
    return best;
}

} // namespace ansec::oracle

#endif // ANSEC_TESTING_ORACLES_HPP
