#pragma once

#include "qcomb/tensor.hpp"

namespace qcomb {

struct StatePair {
  ComplexMatrix rho;
  ComplexMatrix drho;

  // Throws std::invalid_argument on shape, trace or positivity violations.
  void validate() const;
};

inline constexpr double kSupportCutoff = 1e-10;

// Solves rho L + L rho = 2 drho in the eigenbasis of rho; zero outside the support.
ComplexMatrix solve_sld(const StatePair& s);
double qfi_of_state(const StatePair& s);
// 2 Tr(drho L) - Tr(rho L^2)
double pre_qfi(const StatePair& s, const ComplexMatrix& L);
// ||rho L + L rho - 2 drho|| restricted to the support of rho.
double sld_residual(const StatePair& s, const ComplexMatrix& L);

}  // namespace qcomb
