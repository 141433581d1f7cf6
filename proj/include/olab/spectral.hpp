#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "olab/ensembles.hpp"

namespace olab {

/// Sorted spectral decomposition of a Hermitian matrix, possibly restricted to a
/// contiguous index range [first, first + count). Indices are 0-based.
///
/// Eigenvectors are normalized so that their largest-magnitude component (first
/// one on ties) is real and positive; random phases are applied on top of this
/// in the overlap estimators.
struct EigenSystem {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
  int first = 0;
  int n_dim = 0;
  SymmetryClass cls = SymmetryClass::real_symmetric;
  /// Smallest gap between consecutive computed eigenvalues (infinity if < 2 computed).
  double min_gap = 0.0;

  int count() const { return static_cast<int>(eigenvalues.size()); }
  bool complete() const { return first == 0 && count() == n_dim; }
  bool covers(int i) const { return i >= first && i < first + count(); }
  double eigenvalue(int i) const;
  Eigen::MatrixXcd::ConstColXpr vector(int i) const;
};

/// Full eigendecomposition.
EigenSystem eigensolve(const HermitianMatrix& w);
/// Eigenpairs with indices lo..hi (inclusive, 0-based).
EigenSystem eigensolve_range(const HermitianMatrix& w, int lo, int hi);
/// Sorted eigenvalues only.
Eigen::VectorXd eigenvalues_only(const HermitianMatrix& w);

/// Gap below which a spectrum is treated as degenerate and the sample is redrawn.
inline constexpr double kDegenerateGap = 1e-12;

/// Semicircle law of variance 1 + t: the spectral density of W_t = W + B_t / sqrt(N).
class SemicircleModel {
 public:
  explicit SemicircleModel(double time = 0.0);

  double time() const { return time_; }
  /// 1 + t
  double variance() const { return 1.0 + time_; }
  /// Right edge 2 sqrt(1 + t).
  double edge() const;

  double density(double x) const;
  double cdf(double x) const;
  /// Solution of (1+t) m^2 + z m + 1 = 0 with Im m * Im z > 0.
  std::complex<double> stieltjes(std::complex<double> z) const;
  /// gamma_rank: the point where the CDF equals rank / n, rank in [1, n].
  double quantile(int rank, int n) const;
  /// Inverse CDF at probability p in [0, 1].
  double inverse_cdf(double p) const;

 private:
  double time_;
};

/// Spectral parameter z = E + i eta. `imaginary_part` selects Im G(z) instead of G(z)
/// in resolvent products.
struct SpectralPoint {
  double energy = 0.0;
  double eta = 1.0;
  double time = 0.0;
  bool imaginary_part = false;

  std::complex<double> z() const { return {energy, eta}; }
};

/// <G(z_1) Å_1 ... G(z_k) Å_k>, evaluated in the eigenbasis (requires a complete EigenSystem).
std::complex<double> resolvent_trace_product(const EigenSystem& es, std::span<const SpectralPoint> points,
                                             std::span<const Observable* const> observables);

struct RigidityReport {
  double max_scaled_deviation = 0.0;
  int argmax = 0;  // 0-based index of the worst eigenvalue
  double threshold = 0.0;
  bool pass = false;
};

/// max_i N^{2/3} î^{1/3} |lambda_i - gamma_i(t)| against N^xi, with î = min(i, N - i + 1).
RigidityReport rigidity_check(std::span<const double> eigenvalues, const SemicircleModel& model, double xi);
RigidityReport rigidity_check(const EigenSystem& es, const SemicircleModel& model, double xi);

/// Bulk rank window [max(1, floor(delta N)), min(N, ceil((1 - delta) N))], returned
/// as 0-based inclusive indices.
struct BulkWindow {
  int first = 0;
  int last = 0;
  bool contains(int i) const { return i >= first && i <= last; }
};
BulkWindow bulk_window(int n, double delta);

struct EthReport {
  double max_scaled_overlap = 0.0;
  int arg_i = 0;
  int arg_j = 0;
};

/// max over bulk i, j of sqrt(N / <Å^2>) |<u_i, Å u_j>|.
EthReport eth_check(const EigenSystem& es, const Observable& a, double bulk_fraction);

}  // namespace olab
