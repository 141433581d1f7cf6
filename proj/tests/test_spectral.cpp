#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "olab/errors.hpp"
#include "olab/spectral.hpp"

using namespace olab;

namespace {

HermitianMatrix real_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd m(n, n);
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return HermitianMatrix(m);
}

double quad_mass(const SemicircleModel& model, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate([&](double x) { return model.density(x); }, a, b,
                                                                        15, 1e-13);
}

}  // namespace

TEST_CASE("eigensolve diagonal input") {
  const EigenSystem es = eigensolve(real_matrix({{3, 0, 0}, {0, 1, 0}, {0, 0, 2}}));
  CHECK(es.eigenvalues(0) == doctest::Approx(1));
  CHECK(es.eigenvalues(1) == doctest::Approx(2));
  CHECK(es.eigenvalues(2) == doctest::Approx(3));
  CHECK(std::abs(es.eigenvectors(1, 0) - 1.0) < 1e-14);
  CHECK(std::abs(es.eigenvectors(2, 1) - 1.0) < 1e-14);
  CHECK(std::abs(es.eigenvectors(0, 2) - 1.0) < 1e-14);
}

TEST_CASE("eigensolve 2x2 closed form and phase convention") {
  const EigenSystem es = eigensolve(real_matrix({{0, 1}, {1, 0}}));
  CHECK(es.eigenvalues(0) == doctest::Approx(-1));
  CHECK(es.eigenvalues(1) == doctest::Approx(1));
  const double s = 1.0 / std::numbers::sqrt2;
  CHECK(std::abs(es.eigenvectors(0, 0) - s) < 1e-14);
  CHECK(std::abs(es.eigenvectors(1, 0) + s) < 1e-14);
  CHECK(std::abs(es.eigenvectors(0, 1) - s) < 1e-14);
  CHECK(std::abs(es.eigenvectors(1, 1) - s) < 1e-14);
}

TEST_CASE("eigensystem invariants on GUE and GOE") {
  for (auto cls : {SymmetryClass::complex_hermitian, SymmetryClass::real_symmetric}) {
    const int n = 200;
    const HermitianMatrix w = sample_wigner({n, cls, {}, 77, std::nullopt});
    const EigenSystem es = eigensolve(w);
    const Eigen::MatrixXcd wc = w.to_complex();
    const Eigen::MatrixXcd& u = es.eigenvectors;
    CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10 * n);
    CHECK((wc * u - u * es.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() < 1e-8);
    for (int k = 1; k < n; ++k) CHECK(es.eigenvalues(k) >= es.eigenvalues(k - 1));
    // pivot component of each column is real and positive
    for (int c = 0; c < n; ++c) {
      Eigen::Index arg = 0;
      u.col(c).cwiseAbs().maxCoeff(&arg);
      CHECK(u(arg, c).imag() == 0.0);
      CHECK(u(arg, c).real() > 0.0);
    }
    // deterministic output
    CHECK((eigensolve(w).eigenvectors - u).cwiseAbs().maxCoeff() == 0.0);

    const EigenSystem part = eigensolve_range(w, 90, 110);
    CHECK(part.count() == 21);
    CHECK(part.first == 90);
    for (int i = 90; i <= 110; ++i) {
      CHECK(part.eigenvalue(i) == doctest::Approx(es.eigenvalue(i)).epsilon(1e-12));
      CHECK((part.vector(i) - es.vector(i)).cwiseAbs().maxCoeff() < 1e-8);
    }
    CHECK_THROWS_AS(part.vector(5), DomainError);
    const Eigen::VectorXd values = eigenvalues_only(w);
    CHECK((values - es.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Parseval identity for overlaps") {
  const int n = 40;
  const HermitianMatrix w = sample_wigner({n, SymmetryClass::complex_hermitian, {}, 3, std::nullopt});
  const EigenSystem es = eigensolve(w);
  const Observable a = make_observable(ObservableKind::random_hermitian, {n, 0, {}, SymmetryClass::complex_hermitian, 8, "A"});
  const Eigen::MatrixXcd a2 = a.matrix() * a.matrix();
  for (int j = 0; j < n; j += 7) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::norm(a.sandwich(es.vector(i), es.vector(j)));
    const double expected = (es.vector(j).adjoint() * a2 * es.vector(j))(0, 0).real();
    CHECK(sum == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("semicircle quantities") {
  for (double t : {0.0, 0.5, 2.0}) {
    const SemicircleModel m(t);
    const double e = m.edge();
    CHECK(e == doctest::Approx(2.0 * std::sqrt(1.0 + t)));
    CHECK(quad_mass(m, -e, e) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(m.density(e + 0.1) == 0.0);
    for (double x : {-0.9 * e, -0.3 * e, 0.0, 0.45 * e, 0.99 * e})
      CHECK(std::abs(m.cdf(x) - quad_mass(m, -e, x)) < 1e-9);
    for (double p = 0.01; p < 1.0; p += 0.07) CHECK(std::abs(m.cdf(m.inverse_cdf(p)) - p) < 1e-8);
    for (Complex z : {Complex(0.3, 1e-3), Complex(-1.5, 0.2), Complex(4.0, -0.5), Complex(0.0, 3.0), Complex(2.1, 1e-6)}) {
      const Complex s = m.stieltjes(z);
      CHECK(std::abs((1.0 + t) * s * s + z * s + 1.0) < 1e-12);
      CHECK(s.imag() * z.imag() > 0.0);
    }
  }
  const SemicircleModel m0;
  CHECK(std::abs(m0.quantile(128, 256)) < 1e-10);
  CHECK(std::abs(m0.stieltjes({0.0, 1.0}) - Complex(0.0, (std::sqrt(5.0) - 1.0) / 2.0)) < 1e-14);
  CHECK_THROWS_AS(m0.quantile(0, 10), DomainError);
  CHECK_THROWS_AS(m0.quantile(11, 10), DomainError);
}

TEST_CASE("resolvent trace product: diagonal closed form and dense inversion") {
  const Eigen::Vector4d lambda(-1.2, -0.1, 0.4, 1.3);
  const HermitianMatrix w(Eigen::MatrixXd(lambda.asDiagonal()));
  const EigenSystem es = eigensolve(w);
  const Observable a(Eigen::Vector4cd(1.0, 0.5, -2.0, 0.3).asDiagonal().toDenseMatrix(), "A");
  const SpectralPoint pt{0.2, 0.05, 0.0, false};
  const Observable* obs[] = {&a};
  const Complex got = resolvent_trace_product(es, std::span(&pt, 1), obs);
  Complex expected = 0.0;
  for (int k = 0; k < 4; ++k) expected += a.traceless()(k, k) / (lambda(k) - pt.z());
  CHECK(std::abs(got - expected / 4.0) < 1e-14);

  const int n = 48;
  const HermitianMatrix g = sample_wigner({n, SymmetryClass::complex_hermitian, {}, 12, std::nullopt});
  const EigenSystem eg = eigensolve(g);
  const Observable b = make_observable(ObservableKind::random_hermitian, {n, 0, {}, SymmetryClass::complex_hermitian, 4, "B"});
  const Observable c = make_observable(ObservableKind::diag_signs, {n, 0, {}, {}, 0, "C"});
  const std::vector<SpectralPoint> pts{{0.1, 0.02, 0.0, false}, {-0.3, 0.05, 0.0, true}, {0.7, 0.1, 0.0, false}};
  auto resolvent = [&](const SpectralPoint& p) {
    const Eigen::MatrixXcd inv = (g.to_complex() - p.z() * Eigen::MatrixXcd::Identity(n, n)).inverse();
    if (!p.imaginary_part) return inv;
    return Eigen::MatrixXcd((inv - inv.adjoint()) / Complex(0.0, 2.0));
  };
  for (std::size_t k = 1; k <= 3; ++k) {
    std::vector<const Observable*> os;
    Eigen::MatrixXcd prod = Eigen::MatrixXcd::Identity(n, n);
    for (std::size_t m = 0; m < k; ++m) {
      const Observable* o = (m % 2 == 0) ? &b : &c;
      os.push_back(o);
      prod = prod * resolvent(pts[m]) * o->traceless();
    }
    const Complex dense = prod.trace() / static_cast<double>(n);
    const Complex fast = resolvent_trace_product(eg, std::span(pts.data(), k), os);
    CHECK(std::abs(fast - dense) < 1e-8 * std::max(1.0, std::abs(dense)));
  }

  const Observable id(Eigen::MatrixXcd::Identity(n, n), "id");
  const Observable* bad[] = {&id};
  CHECK_THROWS_AS(resolvent_trace_product(eg, std::span(pts.data(), 1), bad), DomainError);
}

TEST_CASE("rigidity examples") {
  const int n = 4;
  const SemicircleModel m;
  const std::vector<double> zeros(n, 0.0);
  const RigidityReport r = rigidity_check(zeros, m, 0.01);
  double expected = 0.0;
  for (int i = 1; i <= n; ++i)
    expected = std::max(expected, std::pow(n, 2.0 / 3.0) * std::cbrt(std::min(i, n - i + 1)) * std::abs(m.quantile(i, n)));
  CHECK(r.max_scaled_deviation == doctest::Approx(expected));
  CHECK_FALSE(r.pass);

  std::vector<double> exact;
  for (int i = 1; i <= 50; ++i) exact.push_back(m.quantile(i, 50));
  const RigidityReport ok = rigidity_check(exact, m, 0.1);
  CHECK(ok.max_scaled_deviation == 0.0);
  CHECK(ok.pass);
}

TEST_CASE("bulk window rounding") {
  const BulkWindow w = bulk_window(256, 0.1);
  CHECK(w.first == 24);
  CHECK(w.last == 230);
  const BulkWindow tiny = bulk_window(2, 0.1);
  CHECK(tiny.first == 0);
  CHECK(tiny.last == 1);
  CHECK_THROWS_AS(bulk_window(10, 0.5), DomainError);
}

TEST_CASE("ETH examples") {
  const EigenSystem es = eigensolve(real_matrix({{0, 1}, {1, 0}}));
  const Observable a(Eigen::Vector2cd(1.0, -1.0).asDiagonal().toDenseMatrix(), "A");
  CHECK(eth_check(es, a, 0.1).max_scaled_overlap == doctest::Approx(std::numbers::sqrt2));
  const Observable zero(Eigen::MatrixXcd::Identity(2, 2), "id");
  CHECK_THROWS_AS(eth_check(es, zero, 0.1), DomainError);
}
