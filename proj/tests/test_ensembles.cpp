#include <doctest.h>

#include <cmath>

#include "olab/ensembles.hpp"
#include "olab/errors.hpp"

using namespace olab;

namespace {

struct PoolStats {
  double mean_abs2 = 0.0;
  double se_abs2 = 0.0;
  Complex mean_sq;
  double se_sq = 0.0;
};

/// N |w_ab|^2 and N w_ab^2 over the strict lower triangle of several samples.
PoolStats off_diagonal_pool(const WignerSpec& spec, int samples) {
  std::vector<double> a2;
  std::vector<Complex> sq;
  for (int s = 0; s < samples; ++s) {
    const HermitianMatrix w = sample_wigner(spec, static_cast<std::uint64_t>(s));
    for (int b = 0; b < spec.n_dim; ++b)
      for (int a = b + 1; a < spec.n_dim; ++a) {
        const Complex x = w(a, b) * std::sqrt(static_cast<double>(spec.n_dim));
        a2.push_back(std::norm(x));
        sq.push_back(x * x);
      }
  }
  PoolStats p;
  const double m = static_cast<double>(a2.size());
  for (std::size_t k = 0; k < a2.size(); ++k) {
    p.mean_abs2 += a2[k] / m;
    p.mean_sq += sq[k] / m;
  }
  double v1 = 0.0;
  double v2 = 0.0;
  for (std::size_t k = 0; k < a2.size(); ++k) {
    v1 += (a2[k] - p.mean_abs2) * (a2[k] - p.mean_abs2);
    v2 += std::norm(sq[k] - p.mean_sq);
  }
  p.se_abs2 = std::sqrt(v1 / (m * (m - 1)));
  p.se_sq = std::sqrt(v2 / (m * (m - 1)));
  return p;
}

}  // namespace

TEST_CASE("symmetry classes and laws") {
  CHECK(beta(SymmetryClass::real_symmetric) == 1);
  CHECK(beta(SymmetryClass::complex_hermitian) == 2);
  CHECK(symmetry_from_beta(2) == SymmetryClass::complex_hermitian);
  CHECK_THROWS_AS(symmetry_from_beta(4), ConfigError);
  CHECK(EntryLaw::parse("rademacher").kind == EntryLawKind::rademacher);
  CHECK(EntryLaw::parse("uniform").name() == "uniform");
  CHECK_THROWS_AS(EntryLaw::parse("cauchy"), ConfigError);
  WignerSpec bad{1, SymmetryClass::real_symmetric, {}, 0, std::nullopt};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("small real sample is symmetric") {
  const WignerSpec spec{2, SymmetryClass::real_symmetric, EntryLaw::parse("gaussian"), 42, std::nullopt};
  const HermitianMatrix w = sample_wigner(spec);
  REQUIRE(w.is_real());
  CHECK(w.real()(0, 1) == w.real()(1, 0));
}

TEST_CASE("samples are exactly Hermitian and reproducible") {
  for (auto cls : {SymmetryClass::real_symmetric, SymmetryClass::complex_hermitian})
    for (const char* law : {"gaussian", "rademacher", "uniform"}) {
      const WignerSpec spec{50, cls, EntryLaw::parse(law), 9, std::nullopt};
      const HermitianMatrix w = sample_wigner(spec, 3);
      CHECK(w.hermiticity_defect() == 0.0);
      CHECK((sample_wigner(spec, 3).to_complex() - w.to_complex()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((sample_wigner(spec, 4).to_complex() - w.to_complex()).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("real rademacher entries are exactly +-N^{-1/2}") {
  const WignerSpec spec{400, SymmetryClass::real_symmetric, EntryLaw::parse("rademacher"), 1, std::nullopt};
  const HermitianMatrix w = sample_wigner(spec);
  const double s = 1.0 / std::sqrt(400.0);
  bool ok = true;
  for (int b = 0; b < 400; ++b)
    for (int a = b + 1; a < 400; ++a) ok = ok && std::abs(w.real()(a, b)) == s;
  CHECK(ok);
}

TEST_CASE("GUE off-diagonal second moment at N = 400") {
  const WignerSpec spec{400, SymmetryClass::complex_hermitian, EntryLaw::parse("gaussian"), 5, std::nullopt};
  const PoolStats p = off_diagonal_pool(spec, 1);
  CHECK(std::abs(p.mean_abs2 - 1.0) < 0.05);
}

TEST_CASE("entry second moments for every law (5 SE)") {
  for (auto cls : {SymmetryClass::real_symmetric, SymmetryClass::complex_hermitian})
    for (const char* law : {"gaussian", "rademacher", "uniform"}) {
      const WignerSpec spec{120, cls, EntryLaw::parse(law), 17, std::nullopt};
      const PoolStats p = off_diagonal_pool(spec, 8);
      INFO(law << " beta=" << beta(cls));
      // a two-point law has |chi| = 1 exactly, so its pool variance is zero
      CHECK(std::abs(p.mean_abs2 - 1.0) <= 5.0 * p.se_abs2 + 1e-12);
      if (cls == SymmetryClass::complex_hermitian) CHECK(std::abs(p.mean_sq) <= 5.0 * p.se_sq);
    }
}

TEST_CASE("diagonal variance defaults to 2/beta and is overridable") {
  WignerSpec spec{2, SymmetryClass::real_symmetric, {}, 0, std::nullopt};
  CHECK(spec.diag_variance() == 2.0);
  spec.cls = SymmetryClass::complex_hermitian;
  CHECK(spec.diag_variance() == 1.0);
  spec.diagonal_variance = 0.0;
  spec.n_dim = 30;
  const HermitianMatrix w = sample_wigner(spec);
  CHECK(w.complex().diagonal().cwiseAbs().maxCoeff() == 0.0);
  spec.diagonal_variance = -1.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("observable examples") {
  const Observable a = make_observable(ObservableKind::diag_signs, {4, 0, {}, {}, 0, ""});
  CHECK(a.matrix().diagonal().real() == Eigen::Vector4d(1, 1, -1, -1));
  CHECK(a.trace_mean() == 0.0);
  CHECK(a.norm_sq() == doctest::Approx(1.0));

  const Observable p = make_observable(ObservableKind::rank_projector, {10, 0, {0, 4, 7}, {}, 0, ""});
  CHECK(std::abs(p.trace_mean()) < 1e-15);
  CHECK(p.norm_sq() == doctest::Approx(0.21));

  const Observable id(Eigen::MatrixXcd::Identity(5, 5), "id");
  CHECK(id.norm_sq() == 0.0);

  CHECK_THROWS_AS(make_observable(ObservableKind::rank_projector, {3, 0, {0, 1, 2, 0}, {}, 0, ""}), DomainError);
  CHECK_THROWS_AS(make_observable(ObservableKind::rank_projector, {3, 0, {0, 0}, {}, 0, ""}), DomainError);
  CHECK_THROWS_AS(parse_observable_kind("nope"), ConfigError);

  const Observable odd = make_observable(ObservableKind::diag_signs, {5, 0, {}, {}, 0, ""});
  CHECK(odd.trace_mean() == doctest::Approx(0.2));
  CHECK(std::abs(odd.traceless().trace()) < 1e-14);
}

TEST_CASE("observable invariants: Hermitian traceless part, shift invariance") {
  for (auto cls : {SymmetryClass::real_symmetric, SymmetryClass::complex_hermitian}) {
    const Observable a = make_observable(ObservableKind::random_hermitian, {12, 0, {}, cls, 3, "R"});
    CHECK((a.traceless() - a.traceless().adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(a.traceless().trace()) < 1e-13);
    CHECK(a.norm_sq() == doctest::Approx((a.traceless() * a.traceless()).trace().real() / 12.0).epsilon(1e-13));
    const Observable shifted(a.matrix() + 3.5 * Eigen::MatrixXcd::Identity(12, 12), "shifted");
    CHECK((shifted.traceless() - a.traceless()).cwiseAbs().maxCoeff() < 1e-13);
  }
  Eigen::MatrixXcd nonherm = Eigen::MatrixXcd::Zero(2, 2);
  nonherm(0, 1) = 1.0;
  CHECK_THROWS_AS(Observable(nonherm, "bad"), DomainError);
}

TEST_CASE("checked Hermitian construction") {
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, Complex(0, 1), Complex(0, -1), 2.0;
  CHECK(HermitianMatrix::checked(m, SymmetryClass::complex_hermitian).hermiticity_defect() == 0.0);
  CHECK_THROWS_AS(HermitianMatrix::checked(m, SymmetryClass::real_symmetric), DomainError);
  m(0, 1) = 5.0;
  CHECK_THROWS_AS(HermitianMatrix::checked(m, SymmetryClass::complex_hermitian), DomainError);
}
