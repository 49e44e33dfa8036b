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

// Random instance generators shared by the unit suites.

#ifndef ANSEC_TESTS_SUPPORT_HPP
#define ANSEC_TESTS_SUPPORT_HPP

#include "ansec/wiretap.hpp"

#include <random>

namespace ansec::testgen {

inline RealMatrix gaussian_real(Eigen::Index rows, Eigen::Index cols, Rng& rng)
{
    std::normal_distribution<double> nd;
    RealMatrix B(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) B(i, j) = nd(rng);
    return B;
}

inline RealVector gaussian_vector(Eigen::Index n, double scale, Rng& rng)
{
    std::normal_distribution<double> nd(0.0, scale);
    RealVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

inline ComplexVector complex_gaussian_vector(Eigen::Index n, Rng& rng)
{
    return sample_channel(n, 1, rng).col(0);
}

inline int uniform_int(int lo, int hi, Rng& rng)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace ansec::testgen

#endif
