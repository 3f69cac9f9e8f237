// Copyright 2026 The Phaselearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace phaselearn {

using cd = std::complex<double>;
using CMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<cd, Eigen::Dynamic, 1>;
using SparseCMatrix = Eigen::SparseMatrix<cd, Eigen::ColMajor, std::int64_t>;
using Triplet = Eigen::Triplet<cd, std::int64_t>;

namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
/// |0><1|: lowers |1> to |0>, the +1 eigenstate of Z.
CMatrix lowering();
/// Single-qubit Pauli by letter: 'I', 'X', 'Y' or 'Z'.
CMatrix by_letter(char letter);
}  // namespace pauli

CMatrix kron(const CMatrix& a, const CMatrix& b);
SparseCMatrix sparse_kron(const SparseCMatrix& a, const SparseCMatrix& b);
SparseCMatrix sparse_identity(std::int64_t dim);

/// Hermitian up to max-entry tolerance.
bool is_hermitian(const CMatrix& m, double tol);

/// Schatten-1 norm. Uses the Hermitian eigen-decomposition when possible.
double trace_norm(const CMatrix& m);

/// Largest singular value via power iteration on M^dagger M.
double operator_norm(const CMatrix& m, double tol = 1e-9, int max_iter = 10000);

/// Integer power for small exponents without floating round-off.
std::int64_t ipow(std::int64_t base, int exp);

}  // namespace phaselearn
