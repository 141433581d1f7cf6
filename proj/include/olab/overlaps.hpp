#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "olab/ensembles.hpp"
#include "olab/spectral.hpp"

namespace olab {

/// Random eigenvector phases: e^{i theta} with theta uniform (beta = 2), a uniform
/// sign (beta = 1).
using PhaseVector = std::vector<Complex>;

PhaseVector draw_phases(int n, SymmetryClass cls, Engine& rng);
PhaseVector trivial_phases(int n);

/// Phi_N(A, i, j) = sqrt(N / <Å^2>) [conj(e_i) e_j <u_i, A u_j> - <A> delta_ij].
Complex phi(const EigenSystem& es, const PhaseVector& phases, const Observable& a, int i, int j);

/// Limit covariance E[Phi(A,i,j) Phi(B,k,l)] =
/// [delta_kj delta_li + (2/beta - 1) delta_ki delta_lj] <ÅB̊> / sqrt(<Å^2><B̊^2>).
double theoretical_cov(const Observable& a, int i, int j, const Observable& b, int k, int l, SymmetryClass cls);

/// One factor Phi(A_observable, i, j) of a mixed moment; `observable` indexes the
/// observable list passed alongside.
struct OverlapIndex {
  std::size_t observable = 0;
  int i = 0;
  int j = 0;

  friend bool operator==(const OverlapIndex&, const OverlapIndex&) = default;
};

using MomentSpec = std::vector<OverlapIndex>;

/// E[prod_k Phi(A_k, i_k, j_k)] for the limiting Gaussian field (Isserlis sum).
Complex wick_moment(const MomentSpec& spec, std::span<const Observable> observables, SymmetryClass cls);

struct MomentReport {
  MomentSpec spec;
  Complex empirical;
  /// Standard error of the complex sample mean: sqrt(sum |x - mean|^2 / (M (M - 1))).
  double std_error = 0.0;
  Complex predicted;
  std::size_t n_samples = 0;

  /// |empirical - predicted| <= sigmas * std_error + bias
  bool within(double sigmas, double bias = 0.0) const;
};

/// Two reports agree within `sigmas` combined standard errors.
bool agree(const MomentReport& a, const MomentReport& b, double sigmas);

struct McOptions {
  std::size_t n_samples = 1000;
  double bulk_fraction = 0.1;
  unsigned workers = 1;
};

/// Checks specs against the observables and the bulk window of size N; returns the
/// sorted distinct eigen indices they reference.
std::vector<int> moment_indices(std::span<const MomentSpec> specs, std::span<const Observable> observables, int n_dim,
                                double bulk_fraction);

/// Evaluates every spec on one eigensystem with the given phases (shared Phi cache).
std::vector<Complex> evaluate_moment_specs(std::span<const MomentSpec> specs, std::span<const Observable> observables,
                                           const EigenSystem& es, const PhaseVector& phases);

/// Accumulates complex samples into mean / standard error.
MomentReport summarize(const MomentSpec& spec, std::span<const Complex> samples, Complex predicted);

/// Monte-Carlo mixed moments over Wigner samples: each sample draws W, solves the
/// eigenpairs needed, draws fresh phases and evaluates every spec on the same sample.
std::vector<MomentReport> mc_mixed_moments(std::span<const MomentSpec> specs, std::span<const Observable> observables,
                                           const WignerSpec& wigner, const McOptions& options);

/// Orthonormal N x columns frame distributed as the first columns of a Haar
/// orthogonal (beta = 1) or unitary (beta = 2) matrix: QR of a Gaussian matrix with
/// the phases of diag(R) moved into Q.
Eigen::MatrixXcd haar_frame(int n, int columns, SymmetryClass cls, Engine& rng);

/// Same estimator with eigenvectors replaced by a Haar frame.
std::vector<MomentReport> haar_frame_moments(std::span<const MomentSpec> specs, std::span<const Observable> observables,
                                             int n_dim, SymmetryClass cls, std::uint64_t seed, const McOptions& options);

/// Raw Haar-frame moment E[prod_k <u_{x_{2k}}, Å_k u_{x_{2k+1}}>] for a configuration x
/// (0-based sites, one observable per edge). No normalization.
MomentReport haar_configuration_moment(std::span<const int> sites, std::span<const Observable> edge_observables,
                                       SymmetryClass cls, std::uint64_t seed, std::size_t n_samples, unsigned workers = 1);

/// Canonical text of a spec, used for hashing and reporting.
std::string describe(const MomentSpec& spec, std::span<const Observable> observables);

}  // namespace olab
