#include "olab/ensembles.hpp"

#include <cmath>
#include <numbers>

#include "olab/errors.hpp"

namespace olab {

int beta(SymmetryClass cls) { return static_cast<int>(cls); }

SymmetryClass symmetry_from_beta(int b) {
  if (b == 1) return SymmetryClass::real_symmetric;
  if (b == 2) return SymmetryClass::complex_hermitian;
  throw ConfigError("beta must be 1 or 2, got " + std::to_string(b));
}

EntryLaw EntryLaw::parse(std::string_view name) {
  EntryLaw law;
  if (name == "gaussian") {
    law.kind = EntryLawKind::gaussian;
  } else if (name == "rademacher") {
    law.kind = EntryLawKind::rademacher;
  } else if (name == "uniform") {
    law.kind = EntryLawKind::uniform;
  } else {
    throw ConfigError("unsupported entry law '" + std::string(name) + "'");
  }
  return law;
}

std::string EntryLaw::name() const {
  switch (kind) {
    case EntryLawKind::gaussian: return "gaussian";
    case EntryLawKind::rademacher: return "rademacher";
    case EntryLawKind::uniform: return "uniform";
  }
  return "unknown";
}

double WignerSpec::diag_variance() const {
  return diagonal_variance.value_or(2.0 / beta(cls));
}

void WignerSpec::validate() const {
  if (n_dim < 2) throw ConfigError("Wigner dimension must be >= 2");
  if (cls != SymmetryClass::real_symmetric && cls != SymmetryClass::complex_hermitian)
    throw ConfigError("invalid symmetry class");
  if (!law.parameters.empty()) throw ConfigError("built-in entry laws take no parameters");
  if (diagonal_variance && !(*diagonal_variance >= 0.0)) throw ConfigError("diagonal variance must be >= 0");
}

HermitianMatrix::HermitianMatrix(Eigen::MatrixXd real) : storage_(std::move(real)) {}
HermitianMatrix::HermitianMatrix(Eigen::MatrixXcd complex) : storage_(std::move(complex)) {}

HermitianMatrix HermitianMatrix::checked(const Eigen::MatrixXcd& m, SymmetryClass cls, double tol) {
  if (m.rows() != m.cols()) throw DomainError("matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (defect > tol * scale) throw DomainError("matrix is not Hermitian (defect " + std::to_string(defect) + ")");
  if (cls == SymmetryClass::real_symmetric) {
    if (m.imag().cwiseAbs().maxCoeff() > tol * scale) throw DomainError("real symmetric class requires a real matrix");
    Eigen::MatrixXd r = m.real();
    return HermitianMatrix(Eigen::MatrixXd((r + r.transpose()) / 2.0));
  }
  Eigen::MatrixXcd c = (m + m.adjoint()) / 2.0;
  return HermitianMatrix(std::move(c));
}

int HermitianMatrix::dim() const {
  return std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, storage_);
}

Complex HermitianMatrix::operator()(int a, int b) const {
  return is_real() ? Complex(real()(a, b), 0.0) : complex()(a, b);
}

Eigen::MatrixXcd HermitianMatrix::to_complex() const {
  return is_real() ? Eigen::MatrixXcd(real().cast<Complex>()) : complex();
}

double HermitianMatrix::hermiticity_defect() const {
  if (is_real()) return (real() - real().transpose()).cwiseAbs().maxCoeff();
  return (complex() - complex().adjoint()).cwiseAbs().maxCoeff();
}

double draw_real_entry(EntryLawKind kind, Engine& rng) {
  switch (kind) {
    case EntryLawKind::gaussian: {
      std::normal_distribution<double> nd;
      return nd(rng);
    }
    case EntryLawKind::rademacher: {
      std::bernoulli_distribution coin;
      return coin(rng) ? 1.0 : -1.0;
    }
    case EntryLawKind::uniform: {
      std::uniform_real_distribution<double> ud(-std::sqrt(3.0), std::sqrt(3.0));
      return ud(rng);
    }
  }
  return 0.0;
}

Complex draw_complex_entry(EntryLawKind kind, Engine& rng) {
  switch (kind) {
    case EntryLawKind::gaussian: {
      std::normal_distribution<double> nd(0.0, std::numbers::sqrt2 / 2.0);
      const double re = nd(rng);
      return {re, nd(rng)};
    }
    case EntryLawKind::rademacher: {
      // unit-circle phase times a real sign: |chi| = 1 and E chi^2 = 0
      std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
      std::bernoulli_distribution coin;
      const double theta = angle(rng);
      const double sign = coin(rng) ? 1.0 : -1.0;
      return sign * std::polar(1.0, theta);
    }
    case EntryLawKind::uniform: {
      // uniform on the disk of radius sqrt(2)
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
      const double r = std::sqrt(2.0 * u01(rng));
      return std::polar(r, angle(rng));
    }
  }
  return {};
}

namespace {

double draw_diagonal(EntryLawKind kind, double variance, Engine& rng) {
  return std::sqrt(variance) * draw_real_entry(kind, rng);
}

}  // namespace

HermitianMatrix sample_wigner(const WignerSpec& spec, std::uint64_t sample_index) {
  Engine rng = make_engine(spec.seed, Stream::wigner, sample_index);
  return sample_wigner(spec, rng);
}

HermitianMatrix sample_wigner(const WignerSpec& spec, Engine& rng) {
  spec.validate();
  const int n = spec.n_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double dvar = spec.diag_variance();
  if (spec.cls == SymmetryClass::real_symmetric) {
    Eigen::MatrixXd w(n, n);
    for (int b = 0; b < n; ++b) {
      w(b, b) = scale * draw_diagonal(spec.law.kind, dvar, rng);
      for (int a = b + 1; a < n; ++a) {
        const double x = scale * draw_real_entry(spec.law.kind, rng);
        w(a, b) = x;
        w(b, a) = x;
      }
    }
    return HermitianMatrix(std::move(w));
  }
  Eigen::MatrixXcd w(n, n);
  for (int b = 0; b < n; ++b) {
    w(b, b) = scale * draw_diagonal(spec.law.kind, dvar, rng);
    for (int a = b + 1; a < n; ++a) {
      const Complex x = scale * draw_complex_entry(spec.law.kind, rng);
      w(a, b) = x;
      w(b, a) = std::conj(x);
    }
  }
  return HermitianMatrix(std::move(w));
}

Observable::Observable(Eigen::MatrixXcd matrix, std::string label)
    : matrix_(std::move(matrix)), label_(std::move(label)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) throw DomainError("observable must be a non-empty square matrix");
  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("observable '" + label_ + "' is not Hermitian");
  const double n = static_cast<double>(matrix_.rows());
  trace_mean_ = matrix_.trace().real() / n;
  traceless_ = matrix_;
  traceless_.diagonal().array() -= trace_mean_;
  // <Å^2> = N^{-1} sum_ab |Å_ab|^2 for Hermitian Å
  norm_sq_ = traceless_.squaredNorm() / n;
  Eigen::MatrixXcd off = matrix_;
  off.diagonal().setZero();
  diagonal_ = off.cwiseAbs().maxCoeff() == 0.0;
}

Complex Observable::sandwich(const Eigen::Ref<const Eigen::VectorXcd>& u, const Eigen::Ref<const Eigen::VectorXcd>& v) const {
  if (diagonal_) return (u.conjugate().array() * matrix_.diagonal().array() * v.array()).sum();
  return u.dot(matrix_ * v);
}

Complex Observable::traceless_sandwich(const Eigen::Ref<const Eigen::VectorXcd>& u,
                                       const Eigen::Ref<const Eigen::VectorXcd>& v) const {
  if (diagonal_) return (u.conjugate().array() * traceless_.diagonal().array() * v.array()).sum();
  return u.dot(traceless_ * v);
}

double traceless_product(const Observable& a, const Observable& b) {
  if (a.dim() != b.dim()) throw DomainError("observables have different dimensions");
  // Tr(Å B̊) = sum_ab Å_ab B̊_ba = sum_ab Å_ab conj(B̊_ab)
  const Complex tr = (a.traceless().array() * b.traceless().conjugate().array()).sum();
  return tr.real() / a.dim();
}

ObservableKind parse_observable_kind(std::string_view name) {
  if (name == "diag_signs") return ObservableKind::diag_signs;
  if (name == "rank_projector") return ObservableKind::rank_projector;
  if (name == "random_hermitian") return ObservableKind::random_hermitian;
  throw ConfigError("unknown observable kind '" + std::string(name) + "'");
}

Observable make_observable(ObservableKind kind, const ObservableParams& p) {
  const int n = p.n_dim;
  if (n < 1) throw ConfigError("observable dimension must be positive");
  switch (kind) {
    case ObservableKind::diag_signs: {
      const int block = p.block > 0 ? p.block : (n + 1) / 2;
      Eigen::VectorXcd d(n);
      for (int a = 0; a < n; ++a) d(a) = ((a / block) % 2 == 0) ? 1.0 : -1.0;
      return Observable(Eigen::MatrixXcd(d.asDiagonal()), p.label.empty() ? "diag_signs" : p.label);
    }
    case ObservableKind::rank_projector: {
      if (p.indices.empty() || static_cast<int>(p.indices.size()) > n)
        throw DomainError("rank_projector needs 1 <= |I| <= N");
      Eigen::VectorXcd d = Eigen::VectorXcd::Constant(n, -static_cast<double>(p.indices.size()) / n);
      std::vector<bool> seen(n, false);
      for (int idx : p.indices) {
        if (idx < 0 || idx >= n) throw DomainError("rank_projector index out of range");
        if (seen[idx]) throw DomainError("rank_projector indices must be distinct");
        seen[idx] = true;
        d(idx) += 1.0;
      }
      return Observable(Eigen::MatrixXcd(d.asDiagonal()), p.label.empty() ? "rank_projector" : p.label);
    }
    case ObservableKind::random_hermitian: {
      if (n < 2) throw ConfigError("random_hermitian needs N >= 2");
      WignerSpec spec{n, p.cls, EntryLaw{}, p.seed, std::nullopt};
      Engine rng = make_engine(p.seed, Stream::observable);
      const HermitianMatrix w = sample_wigner(spec, rng);
      Eigen::MatrixXcd m = w.to_complex();
      m = (m + m.adjoint()) / 2.0;
      return Observable(std::move(m), p.label.empty() ? "random_hermitian" : p.label);
    }
  }
  throw ConfigError("unknown observable kind");
}

}  // namespace olab
