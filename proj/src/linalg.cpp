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

#include "phaselearn/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "phaselearn/rng.hpp"

namespace phaselearn {

namespace pauli {

CMatrix identity() { return CMatrix::Identity(2, 2); }

CMatrix x() {
  CMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

CMatrix y() {
  CMatrix m(2, 2);
  m << 0.0, cd(0.0, -1.0), cd(0.0, 1.0), 0.0;
  return m;
}

CMatrix z() {
  CMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

CMatrix lowering() {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

CMatrix by_letter(char letter) {
  switch (letter) {
    case 'I': return identity();
    case 'X': return x();
    case 'Y': return y();
    case 'Z': return z();
    default: throw std::invalid_argument(std::string("unknown Pauli letter '") + letter + "'");
  }
}

}  // namespace pauli

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

SparseCMatrix sparse_kron(const SparseCMatrix& a, const SparseCMatrix& b) {
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (std::int64_t ka = 0; ka < a.outerSize(); ++ka)
    for (SparseCMatrix::InnerIterator ia(a, ka); ia; ++ia)
      for (std::int64_t kb = 0; kb < b.outerSize(); ++kb)
        for (SparseCMatrix::InnerIterator ib(b, kb); ib; ++ib)
          entries.emplace_back(ia.row() * b.rows() + ib.row(),
                               ia.col() * b.cols() + ib.col(), ia.value() * ib.value());
  SparseCMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

SparseCMatrix sparse_identity(std::int64_t dim) {
  SparseCMatrix out(dim, dim);
  out.setIdentity();
  return out;
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double trace_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (is_hermitian(m, 1e-12 * scale)) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (m + m.adjoint()),
                                                  Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().sum();
  }
  Eigen::BDCSVD<CMatrix> svd(m);
  return svd.singularValues().sum();
}

double operator_norm(const CMatrix& m, double tol, int max_iter) {
  if (m.size() == 0) return 0.0;
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Rng rng(0x5eed);
  CVector v(m.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cd(rng.uniform(-1, 1), rng.uniform(-1, 1));
  v.normalize();
  double sigma2 = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    CVector w = m.adjoint() * (m * v);
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    v = w / next;
    if (std::abs(next - sigma2) <= tol * next) {
      sigma2 = next;
      break;
    }
    sigma2 = next;
  }
  return std::sqrt(sigma2);
}

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  while (u == 0.0) u = uniform();
  const double v = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u));
  const double angle = 2.0 * M_PI * v;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace phaselearn
