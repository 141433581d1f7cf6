#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "olab/dbm.hpp"
#include "olab/errors.hpp"
#include "olab/random.hpp"

using namespace olab;

namespace {

struct Sample {
  double mean = 0.0;
  double se = 0.0;
};

Sample stats(const std::vector<double>& xs) {
  const double m = static_cast<double>(xs.size());
  Sample s;
  for (double x : xs) s.mean += x / m;
  double v = 0.0;
  for (double x : xs) v += (x - s.mean) * (x - s.mean);
  s.se = std::sqrt(v / (m * (m - 1)));
  return s;
}

}  // namespace

TEST_CASE("flow parameters and modes") {
  CHECK(parse_flow_mode("ou") == FlowMode::ou);
  CHECK_THROWS_AS(parse_flow_mode("langevin"), ConfigError);
  CHECK_THROWS_AS((FlowParams{0.0, 1.0, FlowMode::dbm}.validate()), ConfigError);
  CHECK_THROWS_AS((FlowParams{2.0, 1.0, FlowMode::dbm}.validate()), ConfigError);
  CHECK_NOTHROW((FlowParams{1.0, 1.0, FlowMode::ou}.validate()));
}

TEST_CASE("dt = 0 leaves the state untouched") {
  for (auto mode : {FlowMode::dbm, FlowMode::ou}) {
    FlowState s{sample_wigner({10, SymmetryClass::complex_hermitian, {}, 1, std::nullopt}), 0.3, make_engine(1, Stream::flow)};
    const Eigen::MatrixXcd before = s.matrix.to_complex();
    const Engine rng_before = s.rng;
    flow_step(s, 0.0, mode);
    CHECK(s.matrix.to_complex() == before);
    CHECK(s.time == 0.3);
    CHECK(s.rng == rng_before);
  }
}

TEST_CASE("DBM increments have the class-correct covariance (5 SE)") {
  const int n = 40;
  const double t = 0.3;
  for (auto cls : {SymmetryClass::real_symmetric, SymmetryClass::complex_hermitian}) {
    std::vector<double> off;
    std::vector<double> diag;
    std::vector<double> pseudo;
    for (int path = 0; path < 30; ++path) {
      const HermitianMatrix w0 = sample_wigner({n, cls, {}, 9, std::nullopt}, static_cast<std::uint64_t>(path));
      FlowState s{w0, 0.0, make_engine(9, Stream::flow, static_cast<std::uint64_t>(path))};
      evolve(s, {0.05, t, FlowMode::dbm});
      CHECK(s.time == t);
      CHECK(s.matrix.hermiticity_defect() == 0.0);
      const Eigen::MatrixXcd d = (s.matrix.to_complex() - w0.to_complex()) * std::sqrt(double(n) / t);
      for (int b = 0; b < n; ++b) {
        diag.push_back(std::norm(d(b, b)));
        for (int a = b + 1; a < n; ++a) {
          off.push_back(std::norm(d(a, b)));
          pseudo.push_back((d(a, b) * d(a, b)).real());
        }
      }
    }
    INFO("beta=" << beta(cls));
    const Sample so = stats(off);
    const Sample sd = stats(diag);
    CHECK(std::abs(so.mean - 1.0) < 5.0 * so.se);
    CHECK(std::abs(sd.mean - 2.0 / beta(cls)) < 5.0 * sd.se);
    if (cls == SymmetryClass::complex_hermitian) {
      const Sample sp = stats(pseudo);
      CHECK(std::abs(sp.mean) < 5.0 * sp.se);
    }
  }
}

TEST_CASE("increments over disjoint intervals are uncorrelated") {
  const int n = 30;
  std::vector<double> products;
  for (int path = 0; path < 40; ++path) {
    Engine rng = make_engine(4, Stream::flow, static_cast<std::uint64_t>(path));
    const Eigen::MatrixXd a = brownian_increment(n, SymmetryClass::real_symmetric, 0.1, rng).real() * std::sqrt(n / 0.1);
    const Eigen::MatrixXd b = brownian_increment(n, SymmetryClass::real_symmetric, 0.2, rng).real() * std::sqrt(n / 0.2);
    for (int c = 0; c < n; ++c)
      for (int r = c + 1; r < n; ++r) products.push_back(a(r, c) * b(r, c));
  }
  const Sample s = stats(products);
  CHECK(std::abs(s.mean) < 5.0 * s.se);
}

TEST_CASE("OU from GOE keeps the first two entry moments") {
  const int n = 48;
  std::vector<double> off;
  std::vector<double> off_mean;
  std::vector<double> diag;
  for (int path = 0; path < 20; ++path) {
    FlowState s{sample_wigner({n, SymmetryClass::real_symmetric, {}, 12, std::nullopt}, static_cast<std::uint64_t>(path)), 0.0,
                make_engine(12, Stream::flow, static_cast<std::uint64_t>(path))};
    evolve(s, {1e-3, 0.5, FlowMode::ou});
    CHECK(s.matrix.hermiticity_defect() == 0.0);
    const Eigen::MatrixXd& w = s.matrix.real();
    for (int b = 0; b < n; ++b) {
      diag.push_back(n * w(b, b) * w(b, b));
      for (int a = b + 1; a < n; ++a) {
        off.push_back(n * w(a, b) * w(a, b));
        off_mean.push_back(std::sqrt(double(n)) * w(a, b));
      }
    }
  }
  const Sample so = stats(off);
  const Sample sd = stats(diag);
  const Sample sm = stats(off_mean);
  CHECK(std::abs(so.mean - 1.0) < 5.0 * so.se);
  CHECK(std::abs(sd.mean - 2.0) < 5.0 * sd.se);
  CHECK(std::abs(sm.mean) < 5.0 * sm.se);
}

TEST_CASE("environment rates") {
  EigenSystem es;
  es.eigenvalues = Eigen::Vector2d(0.0, 1.0);
  es.eigenvectors = Eigen::MatrixXcd::Identity(2, 2);
  es.n_dim = 2;
  const RateTable<double> c = environment_rates(es, 2);
  CHECK(c(0, 1) == 0.5);
  CHECK(c(1, 0) == 0.5);
  CHECK(c(0, 0) == 0.0);

  const EigenSystem g = eigensolve(sample_wigner({20, SymmetryClass::real_symmetric, {}, 2, std::nullopt}));
  EigenSystem scaled = g;
  scaled.eigenvalues *= 3.0;
  const RateTable<double> r = environment_rates(g, 20);
  const RateTable<double> rs = environment_rates(scaled, 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      CHECK(r(i, j) == r(j, i));
      if (i != j) {
        CHECK(r(i, j) > 0.0);
        CHECK(rs(i, j) == doctest::Approx(r(i, j) / 9.0).epsilon(1e-12));
      }
    }

  es.eigenvalues(1) = 1e-12;
  CHECK_THROWS_AS(environment_rates(es, 2), DomainError);
}

TEST_CASE("bulk nearest-neighbour rates follow the semicircle gap scale") {
  const int n = 128;
  std::vector<double> rates;
  for (int s = 0; s < 20; ++s) {
    const EigenSystem es = eigensolve(sample_wigner({n, SymmetryClass::real_symmetric, {}, 6, std::nullopt}, static_cast<std::uint64_t>(s)));
    const RateTable<double> c = environment_rates(es, n);
    for (int i = 3 * n / 8; i < 5 * n / 8; ++i) rates.push_back(c(i, i + 1));
  }
  std::nth_element(rates.begin(), rates.begin() + rates.size() / 2, rates.end());
  const double median_rate = rates[rates.size() / 2];
  // mean bulk gap near the centre is 1 / (N rho(0)) = pi / N, so c ~ N / pi^2 up to an O(1) factor
  const double scale = n / (std::numbers::pi * std::numbers::pi);
  CHECK(median_rate > 0.5 * scale);
  CHECK(median_rate < 4.0 * scale);
}

TEST_CASE("relaxation grid") {
  const auto g = relaxation_grid(256, 0.5, 3);
  REQUIRE(g.size() == 4);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(1.0 / 16.0));
  CHECK(g[3] == doctest::Approx(0.25));
  CHECK_THROWS_AS(relaxation_grid(256, 0.0, 3), ConfigError);
}

TEST_CASE("relaxation experiment: second moment is law-insensitive") {
  const int n = 64;
  RelaxationSpec spec;
  spec.wigner = {n, SymmetryClass::complex_hermitian, EntryLaw::parse("rademacher"), 3, std::nullopt};
  spec.times = relaxation_grid(n, 0.5, 2);
  spec.observables = {make_observable(ObservableKind::diag_signs, {n, 0, {}, {}, 0, "A"})};
  spec.specs = {{{0, 32, 32}, {0, 32, 32}}};
  spec.options = {300, 0.1, 1};
  const RelaxationReport r = relaxation_experiment(spec);
  REQUIRE(r.rows.size() == 3);
  REQUIRE(r.trends.size() == 1);
  for (const auto& row : r.rows) {
    CHECK(row.report.predicted == Complex(1.0));
    CHECK(row.report.within(4.0, 10.0 / n));
  }
  CHECK(r.at(2, 0).time == spec.times[2]);

  spec.times = {0.1, 0.2};
  CHECK_THROWS_AS(relaxation_experiment(spec), ConfigError);
  spec.times = {0.0, 0.2, 0.2};
  CHECK_THROWS_AS(relaxation_experiment(spec), ConfigError);
}
