#include "olab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <lapacke.h>

#include "olab/errors.hpp"

namespace olab {

namespace {

lapack_complex_double* as_lapack(Complex* p) { return reinterpret_cast<lapack_complex_double*>(p); }

void fix_phases(Eigen::MatrixXcd& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index arg = 0;
    u.col(c).cwiseAbs().maxCoeff(&arg);
    const Complex pivot = u(arg, c);
    if (std::abs(pivot) == 0.0) continue;
    u.col(c) *= std::conj(pivot) / std::abs(pivot);
    u(arg, c) = std::abs(u(arg, c));
  }
}

double smallest_gap(const Eigen::VectorXd& w) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 1; k < w.size(); ++k) gap = std::min(gap, w(k) - w(k - 1));
  return gap;
}

void check_info(lapack_int info, const char* routine) {
  if (info < 0) throw std::logic_error(std::string(routine) + ": invalid argument " + std::to_string(-info));
  if (info > 0) throw NumericError(std::string(routine) + " failed to converge (info " + std::to_string(info) + ")");
}

EigenSystem finish(Eigen::VectorXd values, Eigen::MatrixXcd vectors, int first, const HermitianMatrix& w) {
  EigenSystem es;
  fix_phases(vectors);
  es.min_gap = smallest_gap(values);
  es.eigenvalues = std::move(values);
  es.eigenvectors = std::move(vectors);
  es.first = first;
  es.n_dim = w.dim();
  es.cls = w.symmetry();
  return es;
}

}  // namespace

double EigenSystem::eigenvalue(int i) const {
  if (!covers(i)) throw DomainError("eigen index " + std::to_string(i) + " not computed");
  return eigenvalues(i - first);
}

Eigen::MatrixXcd::ConstColXpr EigenSystem::vector(int i) const {
  if (!covers(i)) throw DomainError("eigen index " + std::to_string(i) + " not computed");
  return eigenvectors.col(i - first);
}

EigenSystem eigensolve(const HermitianMatrix& w) {
  const int n = w.dim();
  if (n < 1) throw DomainError("empty matrix");
  Eigen::VectorXd values(n);
  if (w.is_real()) {
    Eigen::MatrixXd a = w.real();
    check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, values.data()), "dsyevd");
    return finish(std::move(values), a.cast<Complex>(), 0, w);
  }
  Eigen::MatrixXcd a = w.complex();
  check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, as_lapack(a.data()), n, values.data()), "zheevd");
  return finish(std::move(values), std::move(a), 0, w);
}

EigenSystem eigensolve_range(const HermitianMatrix& w, int lo, int hi) {
  const int n = w.dim();
  if (lo < 0 || hi >= n || lo > hi) throw DomainError("invalid eigen index range");
  const int count = hi - lo + 1;
  Eigen::VectorXd values(n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  lapack_int found = 0;
  if (w.is_real()) {
    Eigen::MatrixXd a = w.real();
    Eigen::MatrixXd z(n, count);
    check_info(LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, lo + 1, hi + 1, 0.0, &found,
                              values.data(), z.data(), n, support.data()),
               "dsyevr");
    if (found != count) throw NumericError("dsyevr returned an unexpected number of eigenpairs");
    return finish(values.head(count), z.cast<Complex>(), lo, w);
  }
  Eigen::MatrixXcd a = w.complex();
  Eigen::MatrixXcd z(n, count);
  check_info(LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, as_lapack(a.data()), n, 0.0, 0.0, lo + 1, hi + 1, 0.0,
                            &found, values.data(), as_lapack(z.data()), n, support.data()),
             "zheevr");
  if (found != count) throw NumericError("zheevr returned an unexpected number of eigenpairs");
  return finish(values.head(count), std::move(z), lo, w);
}

Eigen::VectorXd eigenvalues_only(const HermitianMatrix& w) {
  const int n = w.dim();
  Eigen::VectorXd values(n);
  if (w.is_real()) {
    Eigen::MatrixXd a = w.real();
    check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, values.data()), "dsyevd");
  } else {
    Eigen::MatrixXcd a = w.complex();
    check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n, as_lapack(a.data()), n, values.data()), "zheevd");
  }
  return values;
}

// ---------------------------------------------------------------------------
// Semicircle

SemicircleModel::SemicircleModel(double time) : time_(time) {
  if (!(time >= 0.0)) throw DomainError("semicircle time must be >= 0");
}

double SemicircleModel::edge() const { return 2.0 * std::sqrt(variance()); }

double SemicircleModel::density(double x) const {
  const double s = variance();
  const double r = 4.0 * s - x * x;
  return r <= 0.0 ? 0.0 : std::sqrt(r) / (2.0 * std::numbers::pi * s);
}

double SemicircleModel::cdf(double x) const {
  const double s = variance();
  const double r = edge();
  if (x <= -r) return 0.0;
  if (x >= r) return 1.0;
  return 0.5 + x * std::sqrt(4.0 * s - x * x) / (4.0 * std::numbers::pi * s) + std::asin(x / r) / std::numbers::pi;
}

std::complex<double> SemicircleModel::stieltjes(std::complex<double> z) const {
  if (z.imag() == 0.0) throw DomainError("stieltjes transform needs Im z != 0");
  const double s = variance();
  // roots of s m^2 + z m + 1 = 0; take the large root without cancellation and
  // recover the other from m1 m2 = 1 / s
  const std::complex<double> disc = std::sqrt(z * z - 4.0 * s);
  const std::complex<double> q = (std::real(std::conj(z) * disc) >= 0.0) ? -(z + disc) : -(z - disc);
  const std::complex<double> big = q / (2.0 * s);
  const std::complex<double> small = 1.0 / (s * big);
  return (big.imag() * z.imag() > 0.0) ? big : small;
}

double SemicircleModel::inverse_cdf(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0, 1]");
  const double r = edge();
  if (p == 0.0) return -r;
  if (p == 1.0) return r;
  auto f = [&](double x) { return cdf(x) - p; };
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12; };
  const auto [a, b] = boost::math::tools::bisect(f, -r, r, tol);
  return 0.5 * (a + b);
}

double SemicircleModel::quantile(int rank, int n) const {
  if (n < 1 || rank < 1 || rank > n) throw DomainError("quantile rank outside [1, N]");
  return inverse_cdf(static_cast<double>(rank) / n);
}

// ---------------------------------------------------------------------------
// Resolvent products and diagnostics

std::complex<double> resolvent_trace_product(const EigenSystem& es, std::span<const SpectralPoint> points,
                                             std::span<const Observable* const> observables) {
  if (points.empty() || points.size() != observables.size())
    throw DomainError("resolvent product needs matching, non-empty point and observable lists");
  if (!es.complete()) throw DomainError("resolvent product needs a complete eigensystem");
  const int n = es.n_dim;
  const auto k = points.size();

  std::vector<Eigen::VectorXcd> diag(k);
  std::vector<Eigen::MatrixXcd> rotated(k);
  for (std::size_t m = 0; m < k; ++m) {
    const Observable& a = *observables[m];
    if (a.dim() != n) throw DomainError("observable dimension mismatch");
    if (a.norm_sq() == 0.0) throw DomainError("observable '" + a.label() + "' has zero traceless part");
    if (!(points[m].eta > 0.0)) throw DomainError("spectral parameter needs eta > 0");
    const std::complex<double> z = points[m].z();
    diag[m].resize(n);
    for (int i = 0; i < n; ++i) {
      const std::complex<double> g = 1.0 / (es.eigenvalues(i) - z);
      diag[m](i) = points[m].imaginary_part ? std::complex<double>(g.imag(), 0.0) : g;
    }
    const Eigen::MatrixXcd& u = es.eigenvectors;
    if (a.is_diagonal()) {
      const Eigen::VectorXcd d = a.traceless().diagonal();
      rotated[m] = u.adjoint() * (d.asDiagonal() * u);
    } else {
      rotated[m] = u.adjoint() * a.traceless() * u;
    }
  }

  std::complex<double> trace;
  if (k == 1) {
    trace = (diag[0].array() * rotated[0].diagonal().array()).sum();
  } else if (k == 2) {
    // sum_ij d1_i B1_ij d2_j B2_ji
    const Eigen::MatrixXcd lhs = diag[0].asDiagonal() * rotated[0] * diag[1].asDiagonal();
    trace = (lhs.array() * rotated[1].transpose().array()).sum();
  } else {
    Eigen::MatrixXcd chain = diag[0].asDiagonal() * rotated[0];
    for (std::size_t m = 1; m < k; ++m) chain = chain * (diag[m].asDiagonal() * rotated[m]);
    trace = chain.trace();
  }
  return trace / static_cast<double>(n);
}

RigidityReport rigidity_check(std::span<const double> eigenvalues, const SemicircleModel& model, double xi) {
  const int n = static_cast<int>(eigenvalues.size());
  if (n < 1) throw DomainError("rigidity check needs eigenvalues");
  RigidityReport report;
  report.threshold = std::pow(static_cast<double>(n), xi);
  const double n23 = std::pow(static_cast<double>(n), 2.0 / 3.0);
  for (int i = 1; i <= n; ++i) {
    const double ihat = std::min(i, n - i + 1);
    const double dev = n23 * std::cbrt(ihat) * std::abs(eigenvalues[i - 1] - model.quantile(i, n));
    if (dev > report.max_scaled_deviation) {
      report.max_scaled_deviation = dev;
      report.argmax = i - 1;
    }
  }
  report.pass = report.max_scaled_deviation <= report.threshold;
  return report;
}

RigidityReport rigidity_check(const EigenSystem& es, const SemicircleModel& model, double xi) {
  if (!es.complete()) throw DomainError("rigidity check needs the full spectrum");
  return rigidity_check(std::span<const double>(es.eigenvalues.data(), es.eigenvalues.size()), model, xi);
}

BulkWindow bulk_window(int n, double delta) {
  if (n < 1) throw DomainError("bulk window needs N >= 1");
  if (!(delta > 0.0 && delta < 0.5)) throw DomainError("bulk fraction must lie in (0, 1/2)");
  const int lo_rank = std::max(1, static_cast<int>(std::floor(delta * n)));
  const int hi_rank = std::min(n, static_cast<int>(std::ceil((1.0 - delta) * n)));
  return {lo_rank - 1, hi_rank - 1};
}

EthReport eth_check(const EigenSystem& es, const Observable& a, double bulk_fraction) {
  if (a.norm_sq() == 0.0) throw DomainError("ETH check needs a nonzero traceless observable");
  if (a.dim() != es.n_dim) throw DomainError("observable dimension mismatch");
  const BulkWindow window = bulk_window(es.n_dim, bulk_fraction);
  if (!es.covers(window.first) || !es.covers(window.last)) throw DomainError("eigensystem does not cover the bulk window");
  const int count = window.last - window.first + 1;
  const auto u = es.eigenvectors.middleCols(window.first - es.first, count);
  Eigen::MatrixXcd overlaps;
  if (a.is_diagonal()) {
    const Eigen::VectorXcd d = a.traceless().diagonal();
    overlaps = u.adjoint() * (d.asDiagonal() * u);
  } else {
    overlaps = u.adjoint() * a.traceless() * u;
  }
  EthReport report;
  Eigen::Index r = 0, c = 0;
  const double biggest = overlaps.cwiseAbs().maxCoeff(&r, &c);
  report.max_scaled_overlap = std::sqrt(es.n_dim / a.norm_sq()) * biggest;
  report.arg_i = window.first + static_cast<int>(r);
  report.arg_j = window.first + static_cast<int>(c);
  return report;
}

}  // namespace olab
