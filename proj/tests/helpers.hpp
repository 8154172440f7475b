#pragma once

#include <random>

#include "qcomb/tensor.hpp"

namespace qtest {

using qcomb::ComplexMatrix;
using qcomb::cplx;

inline ComplexMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  ComplexMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = cplx(n(g), n(g));
  return m;
}

inline ComplexMatrix random_hermitian(std::size_t d, std::mt19937_64& g) {
  const ComplexMatrix a = random_matrix(d, d, g);
  return (a + a.adjoint()) / 2.0;
}

inline ComplexMatrix random_density(std::size_t d, std::mt19937_64& g, std::size_t rank = 0) {
  const ComplexMatrix a = random_matrix(d, rank ? rank : d, g);
  ComplexMatrix r = a * a.adjoint();
  return r / r.trace().real();
}

inline ComplexMatrix random_unitary(std::size_t d, std::mt19937_64& g) {
  Eigen::HouseholderQR<ComplexMatrix> qr(random_matrix(d, d, g));
  return qr.householderQ();
}

inline Eigen::VectorXcd phi_plus_unnormalized(std::size_t d) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d * d);
  for (std::size_t i = 0; i < d; ++i) v(i * d + i) = 1.0;
  return v;
}

}  // namespace qtest
