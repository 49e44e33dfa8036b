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

#ifndef ANSEC_MATCORE_HPP
#define ANSEC_MATCORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace ansec {

using cdouble = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<long long, Eigen::Dynamic, 1>;

enum class ErrorKind {
    invalid_argument,
    factorization_failure,
    rank_deficient,
    not_found,
    capacity,
    validation,
    invariant_violation,
};

inline const char* to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::factorization_failure: return "factorization failure";
    case ErrorKind::rank_deficient: return "rank deficient";
    case ErrorKind::not_found: return "not found";
    case ErrorKind::capacity: return "capacity exceeded";
    case ErrorKind::validation: return "validation";
    case ErrorKind::invariant_violation: return "invariant violation";
    }
    return "unknown";
}

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace tol {
inline constexpr double orth = 1e-10;
inline constexpr double null = 1e-10;
// relative to the largest singular value
inline constexpr double rank = 1e-8;
} // namespace tol

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m)
{
    return m.allFinite();
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what)
{
    if (!m.allFinite())
        throw Error(ErrorKind::invalid_argument, std::string(what) + " has non-finite entries");
}

struct SvdFactors {
    ComplexMatrix U;  // rows x rows
    RealVector S;     // min(rows, cols), non-increasing
    ComplexMatrix V;  // cols x cols
};

// Full SVD, A = U diag(S) V^H with the thin part of V in its first
// min(rows, cols) columns.
inline SvdFactors svd_decompose(const ComplexMatrix& A)
{
    require_finite(A, "svd input");
    Eigen::JacobiSVD<ComplexMatrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success)
        throw Error(ErrorKind::factorization_failure, "SVD did not converge");
    SvdFactors f{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    if (!f.U.allFinite() || !f.V.allFinite() || !f.S.allFinite())
        throw Error(ErrorKind::factorization_failure, "SVD produced non-finite factors");
    return f;
}

inline bool full_row_rank(const RealVector& s, Eigen::Index rows)
{
    if (s.size() < rows || rows == 0)
        return false;
    return s(rows - 1) > tol::rank * s(0);
}

// Orthonormal basis of the right null space of a wide, full-row-rank H.
inline ComplexMatrix null_space(const ComplexMatrix& H)
{
    if (H.rows() >= H.cols())
        throw Error(ErrorKind::invalid_argument, "null_space needs rows < cols");
    auto f = svd_decompose(H);
    if (!full_row_rank(f.S, H.rows()))
        throw Error(ErrorKind::rank_deficient, "channel is not full row rank");
    return f.V.rightCols(H.cols() - H.rows());
}

// Minimum-norm right inverse H^H (H H^H)^{-1}.
inline ComplexMatrix pseudoinverse(const ComplexMatrix& H)
{
    if (H.rows() > H.cols())
        throw Error(ErrorKind::invalid_argument, "pseudoinverse needs rows <= cols");
    require_finite(H, "pseudoinverse input");
    auto f = svd_decompose(H);
    if (!full_row_rank(f.S, H.rows()))
        throw Error(ErrorKind::rank_deficient, "pseudoinverse of rank-deficient matrix");
    const auto r = H.rows();
    // V1 S^{-1} U^H
    ComplexMatrix V1 = f.V.leftCols(r);
    return V1 * f.S.head(r).cwiseInverse().asDiagonal() * f.U.adjoint();
}

struct QrFactors {
    ComplexMatrix Q;  // rows x cols, orthonormal columns
    ComplexMatrix R;  // cols x cols, upper triangular, real non-negative diagonal
};

// Thin QR with the diagonal of R rotated onto the non-negative real axis.
inline QrFactors qr_decompose(const ComplexMatrix& A)
{
    if (A.rows() < A.cols())
        throw Error(ErrorKind::invalid_argument, "qr_decompose needs rows >= cols");
    require_finite(A, "qr input");
    const auto n = A.cols();
    Eigen::HouseholderQR<ComplexMatrix> qr(A);
    QrFactors f;
    f.Q = qr.householderQ() * ComplexMatrix::Identity(A.rows(), n);
    f.R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

    double rmax = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        rmax = std::max(rmax, std::abs(f.R(i, i)));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mag = std::abs(f.R(i, i));
        if (!(mag > tol::rank * rmax))
            throw Error(ErrorKind::rank_deficient, "qr input is not full column rank");
        const cdouble phase = f.R(i, i) / mag;
        f.R.row(i) *= std::conj(phase);
        f.Q.col(i) *= phase;
        f.R(i, i) = mag;
    }
    return f;
}

// |det A| via LU; zero for exactly singular input.
inline double abs_det(const ComplexMatrix& A)
{
    if (A.rows() != A.cols())
        throw Error(ErrorKind::invalid_argument, "abs_det needs a square matrix");
    if (A.size() == 0)
        return 1.0;
    Eigen::PartialPivLU<ComplexMatrix> lu(A);
    const auto& m = lu.matrixLU();
    double log_mag = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double d = std::abs(m(i, i));
        if (d == 0.0)
            return 0.0;
        log_mag += std::log(d);
    }
    return std::exp(log_mag);
}

inline double abs_det(const RealMatrix& A)
{
    return abs_det(ComplexMatrix(A.cast<cdouble>()));
}

// log sqrt(det(B^H B)): log-volume of the parallelotope spanned by B's columns.
inline double log_gram_volume(const ComplexMatrix& B)
{
    if (B.rows() < B.cols())
        throw Error(ErrorKind::invalid_argument, "gram volume needs rows >= cols");
    auto f = qr_decompose(B);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.R.rows(); ++i)
        acc += std::log(f.R(i, i).real());
    return acc;
}

// a+bi -> [[a, -b], [b, a]]; vectors interleave (re, im) per entry.
inline RealMatrix real_embedding(const ComplexMatrix& B)
{
    RealMatrix out(2 * B.rows(), 2 * B.cols());
    for (Eigen::Index i = 0; i < B.rows(); ++i) {
        for (Eigen::Index j = 0; j < B.cols(); ++j) {
            const double a = B(i, j).real();
            const double b = B(i, j).imag();
            out(2 * i, 2 * j) = a;
            out(2 * i, 2 * j + 1) = -b;
            out(2 * i + 1, 2 * j) = b;
            out(2 * i + 1, 2 * j + 1) = a;
        }
    }
    return out;
}

inline RealVector real_embedding(const ComplexVector& v)
{
    RealVector out(2 * v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out(2 * i) = v(i).real();
        out(2 * i + 1) = v(i).imag();
    }
    return out;
}

inline ComplexVector complex_from_real(const RealVector& r)
{
    if (r.size() % 2 != 0)
        throw Error(ErrorKind::invalid_argument, "real vector has odd length");
    ComplexVector out(r.size() / 2);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out(i) = cdouble(r(2 * i), r(2 * i + 1));
    return out;
}

} // namespace ansec

#endif // ANSEC_MATCORE_HPP
