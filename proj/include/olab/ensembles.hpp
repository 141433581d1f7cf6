#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "olab/random.hpp"

namespace olab {

using Complex = std::complex<double>;

/// Dyson index: 1 for real symmetric, 2 for complex Hermitian.
enum class SymmetryClass : int { real_symmetric = 1, complex_hermitian = 2 };

int beta(SymmetryClass cls);
SymmetryClass symmetry_from_beta(int beta);

enum class EntryLawKind { gaussian, rademacher, uniform };

/// Entry distribution of a Wigner matrix. Every law in the catalog is normalized
/// to mean 0 and E|chi|^2 = 1 off the diagonal; in the complex case it also has
/// E chi^2 = 0.
struct EntryLaw {
  EntryLawKind kind = EntryLawKind::gaussian;
  std::vector<double> parameters;

  static EntryLaw parse(std::string_view name);
  std::string name() const;
};

struct WignerSpec {
  int n_dim = 2;
  SymmetryClass cls = SymmetryClass::real_symmetric;
  EntryLaw law;
  std::uint64_t seed = 0;
  /// Variance of chi_d; defaults to 2/beta so that the Gaussian law gives GOE/GUE.
  std::optional<double> diagonal_variance;

  double diag_variance() const;
  void validate() const;
};

/// Real symmetric or complex Hermitian matrix. Real matrices are stored as real
/// so that the eigensolvers can use the cheaper real routines.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(Eigen::MatrixXd real);
  explicit HermitianMatrix(Eigen::MatrixXcd complex);

  /// Checks W = W* to `tol` (relative to the largest entry) and throws DomainError otherwise.
  static HermitianMatrix checked(const Eigen::MatrixXcd& m, SymmetryClass cls, double tol = 1e-12);

  int dim() const;
  SymmetryClass symmetry() const { return is_real() ? SymmetryClass::real_symmetric : SymmetryClass::complex_hermitian; }
  bool is_real() const { return std::holds_alternative<Eigen::MatrixXd>(storage_); }

  const Eigen::MatrixXd& real() const { return std::get<Eigen::MatrixXd>(storage_); }
  Eigen::MatrixXd& real() { return std::get<Eigen::MatrixXd>(storage_); }
  const Eigen::MatrixXcd& complex() const { return std::get<Eigen::MatrixXcd>(storage_); }
  Eigen::MatrixXcd& complex() { return std::get<Eigen::MatrixXcd>(storage_); }

  Complex operator()(int a, int b) const;
  Eigen::MatrixXcd to_complex() const;
  /// max_ab |W_ab - conj(W_ba)|
  double hermiticity_defect() const;

 private:
  std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> storage_;
};

/// Draws W with w_ab = N^{-1/2} chi_od (a > b, conjugated above), w_aa = N^{-1/2} chi_d.
/// `sample_index` selects an independent reproducible sample under the same seed.
HermitianMatrix sample_wigner(const WignerSpec& spec, std::uint64_t sample_index = 0);
HermitianMatrix sample_wigner(const WignerSpec& spec, Engine& rng);

/// Single draws of the normalized entry laws.
double draw_real_entry(EntryLawKind kind, Engine& rng);
Complex draw_complex_entry(EntryLawKind kind, Engine& rng);

/// Deterministic test matrix A with cached traceless part and normalized-trace moments.
class Observable {
 public:
  Observable(Eigen::MatrixXcd matrix, std::string label);

  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  const Eigen::MatrixXcd& traceless() const { return traceless_; }
  /// <A> = N^{-1} Tr A
  double trace_mean() const { return trace_mean_; }
  /// <Å^2>
  double norm_sq() const { return norm_sq_; }
  const std::string& label() const { return label_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }
  bool is_diagonal() const { return diagonal_; }

  /// <u, A v> (antilinear in u).
  Complex sandwich(const Eigen::Ref<const Eigen::VectorXcd>& u, const Eigen::Ref<const Eigen::VectorXcd>& v) const;
  /// <u, Å v>
  Complex traceless_sandwich(const Eigen::Ref<const Eigen::VectorXcd>& u, const Eigen::Ref<const Eigen::VectorXcd>& v) const;

 private:
  Eigen::MatrixXcd matrix_;
  Eigen::MatrixXcd traceless_;
  double trace_mean_ = 0.0;
  double norm_sq_ = 0.0;
  std::string label_;
  bool diagonal_ = false;
};

/// <Å B̊>
double traceless_product(const Observable& a, const Observable& b);

enum class ObservableKind { diag_signs, rank_projector, random_hermitian };

ObservableKind parse_observable_kind(std::string_view name);

struct ObservableParams {
  int n_dim = 2;
  /// diag_signs: entry a gets sign (-1)^{floor(a / block)}; 0 means ceil(N/2).
  int block = 0;
  /// rank_projector: coordinate indices (0-based) of the projected subspace.
  std::vector<int> indices;
  /// random_hermitian
  SymmetryClass cls = SymmetryClass::real_symmetric;
  std::uint64_t seed = 0;
  std::string label;
};

Observable make_observable(ObservableKind kind, const ObservableParams& params);

}  // namespace olab
