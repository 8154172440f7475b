#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcomb/channels.hpp"
#include "qcomb/sdp.hpp"
#include "qcomb/sld.hpp"
#include "qcomb/strategy.hpp"

namespace qcomb {

// right_zero[k], right_plus[k] for k = 1..N+1 live on (H_k, [E_{k-1},] A_k); index N+1 holds the
// terminal blocks -(L^2)^T and 2 L^T on (K_N, A_N). left[k] is the left pair after k slots.
struct EnvironmentCache {
  std::size_t N = 0;
  std::vector<LabeledTensor> right_zero;
  std::vector<LabeledTensor> right_plus;
  std::vector<LeftPair> left;
  std::size_t left_valid = 0;  // left[0..left_valid) are current
};

EnvironmentCache update_right_envs(const Strategy& s, const std::vector<ChannelEvaluation>& channels,
                                   const ComplexMatrix& L);
void advance_left(EnvironmentCache& cache, const Strategy& s, const std::vector<ChannelEvaluation>& channels,
                  std::size_t k);
// S_k in the tooth order of s; the full pre-QFI equals Re Tr(P_k S_k^T).
ComplexMatrix assemble_Sk(const EnvironmentCache& cache, const Strategy& s, std::size_t k);
double tooth_objective(const ComplexMatrix& S, const ComplexMatrix& P);

struct ToothUpdate {
  ComplexMatrix tooth;
  double objective = 0;
  double previous_objective = 0;
  bool improved = false;
  bool solver_failed = false;
  sdp::Status status = sdp::Status::Optimal;
};

ToothUpdate optimize_tooth(const ComplexMatrix& S, const Strategy& s, std::size_t k, const ComplexMatrix& previous,
                           const sdp::Options& options = {});

struct IssConfig {
  std::size_t d_A = 2;
  std::vector<std::size_t> d_A_per_bond;  // overrides d_A when non-empty
  int max_sweeps = 400;
  double threshold = 1e-4;
  int window = 5;
  double q0 = 0.05;
  double gamma = 0.8;
  double q_negligible = 1e-5;
  std::uint64_t seed = 1;
  int restarts = 3;
  int fixed_sweeps = 0;  // > 0: run exactly this many sweeps and skip the convergence test
  double phi = 0.0;
  sdp::Options sdp;

  void validate() const;
  std::vector<std::size_t> bonds(std::size_t N) const;
  double q_at(int sweep) const;
};

struct SubstepRecord {
  int sweep = 0;
  double q = 0;
  double objective = 0;
};

struct OptimizationResult {
  double qfi = 0;
  Strategy strategy;
  ComplexMatrix L;
  std::vector<SubstepRecord> trace;
  std::vector<double> sweep_qfi;
  int sweeps = 0;
  double wall_seconds = 0;
  bool converged = false;
  std::string status;
  std::vector<double> restart_qfi;
  std::size_t best_restart = 0;
  int solver_failures = 0;
};

OptimizationResult optimize(const NoiseModelSpec& model, std::size_t N, const IssConfig& config);
// A single run started from the given strategy; restarts are ignored.
OptimizationResult optimize_from(const Strategy& initial, const NoiseModelSpec& model, const IssConfig& config);

}  // namespace qcomb
