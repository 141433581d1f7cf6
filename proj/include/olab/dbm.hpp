#pragma once

#include <string>
#include <vector>

#include "olab/ensembles.hpp"
#include "olab/momentflow.hpp"
#include "olab/overlaps.hpp"
#include "olab/spectral.hpp"

namespace olab {

enum class FlowMode { dbm, ou };

FlowMode parse_flow_mode(const std::string& name);

struct FlowParams {
  double dt = 1e-3;
  double horizon = 1.0;
  FlowMode mode = FlowMode::dbm;

  void validate() const;
};

struct FlowState {
  HermitianMatrix matrix;
  double time = 0.0;
  Engine rng;
};

/// N^{-1/2} ΔB for a Hermitian Brownian increment over time dt: real symmetric has
/// off-diagonal variance dt and diagonal 2 dt; complex Hermitian has E|ΔB_ab|^2 = dt,
/// E ΔB_ab^2 = 0 and real diagonal variance dt.
HermitianMatrix brownian_increment(int n, SymmetryClass cls, double dt, Engine& rng);

/// One step: dbm adds the increment; ou is Euler-Maruyama for dW = -W/2 dt + dB/sqrt(N).
/// dt = 0 leaves the state (and its RNG) untouched.
void flow_step(FlowState& state, double dt, FlowMode mode);

/// Steps from state.time to params.horizon (last step shortened).
void evolve(FlowState& state, const FlowParams& params);

/// c_ij = 1 / (N (λ_i - λ_j)^2) over the eigenvalues held by `es`, site k <-> eigen index es.first + k.
RateTable<double> environment_rates(const EigenSystem& es, int n_dim);

/// {0} ∪ {N^{-1+eps} 2^k : k = 0..count-1}
std::vector<double> relaxation_grid(int n_dim, double eps, int count);

struct RelaxationSpec {
  WignerSpec wigner;
  std::vector<double> times;
  std::vector<MomentSpec> specs;
  std::vector<Observable> observables;
  McOptions options;
};

struct RelaxationRow {
  double time;
  std::size_t moment_id;
  MomentReport report;
  /// |empirical - predicted|
  double deviation;
};

struct RelaxationReport {
  std::vector<RelaxationRow> rows;
  /// one line per moment: how the deviation at the last time compares with t = 0
  std::vector<std::string> trends;

  const RelaxationRow& at(std::size_t time_index, std::size_t moment_id) const;
};

/// Each path starts from an independent Wigner sample and is advanced between grid
/// times by one exact Gaussian DBM increment (the flow has independent Gaussian
/// increments, so this is exact in law). At every grid time the specs are evaluated
/// on fresh phases and compared with the Wick prediction.
RelaxationReport relaxation_experiment(const RelaxationSpec& spec);

}  // namespace olab
