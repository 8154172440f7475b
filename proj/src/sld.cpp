#include "qcomb/sld.hpp"

#include <cmath>
#include <stdexcept>

namespace qcomb {

namespace {

StatePair symmetrized(const StatePair& s) {
  s.validate();
  return {hermitian_part(s.rho), hermitian_part(s.drho)};
}

}  // namespace

void StatePair::validate() const {
  if (rho.rows() != rho.cols() || drho.rows() != rho.rows() || drho.cols() != rho.cols())
    throw std::invalid_argument("StatePair: rho and drho must be square and of equal size");
  if (!is_hermitian(rho, 1e-10)) throw std::invalid_argument("StatePair: rho is not Hermitian");
  if (std::abs(rho.trace() - cplx(1.0)) > 1e-10) throw std::invalid_argument("StatePair: Tr rho != 1");
  if (std::abs(drho.trace()) > 1e-8) throw std::invalid_argument("StatePair: Tr drho != 0");
  const auto e = herm_eig(hermitian_part(rho), 1.0);
  if (e.values(0) < -1e-9) throw std::invalid_argument("StatePair: rho is not positive semidefinite");
}

ComplexMatrix solve_sld(const StatePair& in) {
  const StatePair s = symmetrized(in);
  const auto e = herm_eig(s.rho);
  const ComplexMatrix d = e.vectors.adjoint() * s.drho * e.vectors;
  const Eigen::Index n = d.rows();
  ComplexMatrix l = ComplexMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double den = e.values(i) + e.values(j);
      if (den >= kSupportCutoff) l(i, j) = 2.0 * d(i, j) / den;
    }
  return hermitian_part(e.vectors * l * e.vectors.adjoint());
}

double qfi_of_state(const StatePair& s) {
  const ComplexMatrix l = solve_sld(s);
  return std::max(0.0, (s.rho * l * l).trace().real());
}

double pre_qfi(const StatePair& s, const ComplexMatrix& L) {
  if (L.rows() != s.rho.rows() || L.cols() != s.rho.cols()) throw std::invalid_argument("pre_qfi: dimension mismatch");
  return 2.0 * (s.drho * L).trace().real() - (s.rho * L * L).trace().real();
}

double sld_residual(const StatePair& in, const ComplexMatrix& L) {
  const StatePair s = symmetrized(in);
  const auto e = herm_eig(s.rho);
  const ComplexMatrix r = e.vectors.adjoint() * (s.rho * L + L * s.rho - 2.0 * s.drho) * e.vectors;
  double acc = 0;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j)
      if (e.values(i) + e.values(j) >= kSupportCutoff) acc += std::norm(r(i, j));
  return std::sqrt(acc);
}

}  // namespace qcomb
