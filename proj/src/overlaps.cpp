#include "olab/overlaps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "olab/errors.hpp"
#include "olab/matching.hpp"
#include "olab/parallel.hpp"

namespace olab {

namespace {

constexpr int kMaxResamples = 16;

/// Evaluates the i <= j orientation and conjugates otherwise, so the Hermitian
/// relation holds bit for bit; diagonal values are real by construction.
template <class ColumnOf>
Complex phi_value(const Observable& a, int i, int j, const PhaseVector& phases, ColumnOf&& column) {
  if (a.norm_sq() == 0.0) throw DomainError("observable '" + a.label() + "' is finite-rank/trivial: <Å^2> = 0");
  if (i > j) return std::conj(phi_value(a, j, i, phases, column));
  const auto pi = phases[static_cast<std::size_t>(i)];
  const auto pj = phases[static_cast<std::size_t>(j)];
  // <e_i u_i, A e_j u_j> - <A> delta_ij equals the Å overlap for orthonormal u
  const Complex overlap = std::conj(pi) * pj * a.traceless_sandwich(column(i), column(j));
  const Complex v = std::sqrt(a.dim() / a.norm_sq()) * overlap;
  return i == j ? Complex(v.real(), 0.0) : v;
}

void check_observables(std::span<const Observable> observables, int n) {
  for (const auto& a : observables) {
    if (a.dim() != n) throw DomainError("observable '" + a.label() + "' has the wrong dimension");
    if (a.norm_sq() == 0.0) throw DomainError("observable '" + a.label() + "' is finite-rank/trivial: <Å^2> = 0");
  }
}

}  // namespace

std::vector<int> moment_indices(std::span<const MomentSpec> specs, std::span<const Observable> observables, int n,
                                double bulk_fraction) {
  check_observables(observables, n);
  const BulkWindow window = bulk_window(n, bulk_fraction);
  std::set<int> indices;
  for (const auto& spec : specs) {
    for (const auto& f : spec) {
      if (f.observable >= observables.size()) throw DomainError("moment spec references an unknown observable");
      for (int idx : {f.i, f.j}) {
        if (!window.contains(idx))
          throw DomainError("index " + std::to_string(idx) + " lies outside the bulk window [" +
                            std::to_string(window.first) + ", " + std::to_string(window.last) + "]");
        indices.insert(idx);
      }
    }
  }
  if (indices.empty()) throw DomainError("no moment specs given");
  return {indices.begin(), indices.end()};
}

namespace {

/// Evaluates every spec on one frame. `column(i)` returns the vector for eigen index i.
template <class ColumnOf>
std::vector<Complex> evaluate_specs(std::span<const MomentSpec> specs, std::span<const Observable> observables,
                                    const PhaseVector& phases, ColumnOf&& column) {
  std::map<std::tuple<std::size_t, int, int>, Complex> cache;
  std::vector<Complex> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    Complex prod = 1.0;
    for (const auto& f : spec) {
      const auto key = std::make_tuple(f.observable, f.i, f.j);
      auto it = cache.find(key);
      if (it == cache.end()) {
        const Complex v = phi_value(observables[f.observable], f.i, f.j, phases, column);
        it = cache.emplace(key, v).first;
      }
      prod *= it->second;
    }
    out.push_back(prod);
  }
  return out;
}

std::vector<MomentReport> aggregate(std::span<const MomentSpec> specs, std::span<const Observable> observables,
                                    const std::vector<std::vector<Complex>>& per_sample, SymmetryClass cls) {
  std::vector<MomentReport> reports;
  std::vector<Complex> column(per_sample.size());
  for (std::size_t s = 0; s < specs.size(); ++s) {
    for (std::size_t m = 0; m < per_sample.size(); ++m) column[m] = per_sample[m][s];
    reports.push_back(summarize(specs[s], column, wick_moment(specs[s], observables, cls)));
  }
  return reports;
}

}  // namespace

PhaseVector draw_phases(int n, SymmetryClass cls, Engine& rng) {
  PhaseVector phases(static_cast<std::size_t>(n));
  if (cls == SymmetryClass::complex_hermitian) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (auto& p : phases) p = std::polar(1.0, angle(rng));
  } else {
    std::bernoulli_distribution coin;
    for (auto& p : phases) p = coin(rng) ? 1.0 : -1.0;
  }
  return phases;
}

PhaseVector trivial_phases(int n) { return PhaseVector(static_cast<std::size_t>(n), Complex(1.0, 0.0)); }

Complex phi(const EigenSystem& es, const PhaseVector& phases, const Observable& a, int i, int j) {
  if (a.dim() != es.n_dim) throw DomainError("observable dimension mismatch");
  if (static_cast<int>(phases.size()) != es.n_dim) throw DomainError("phase vector has the wrong length");
  return phi_value(a, i, j, phases, [&](int k) { return es.vector(k); });
}

double theoretical_cov(const Observable& a, int i, int j, const Observable& b, int k, int l, SymmetryClass cls) {
  if (a.norm_sq() == 0.0 || b.norm_sq() == 0.0) throw DomainError("covariance needs observables with <Å^2> > 0");
  const double pattern = static_cast<double>(k == j && l == i) +
                         (2.0 / beta(cls) - 1.0) * static_cast<double>(k == i && l == j);
  if (pattern == 0.0) return 0.0;
  return pattern * traceless_product(a, b) / std::sqrt(a.norm_sq() * b.norm_sq());
}

Complex wick_moment(const MomentSpec& spec, std::span<const Observable> observables, SymmetryClass cls) {
  for (const auto& f : spec) {
    if (f.observable >= observables.size()) throw DomainError("moment spec references an unknown observable");
    if (observables[f.observable].norm_sq() == 0.0) throw DomainError("observable with <Å^2> = 0 in moment spec");
  }
  const int p = static_cast<int>(spec.size());
  if (p % 2 != 0) return 0.0;
  if (p == 0) return 1.0;
  // pairwise covariance table, then the Isserlis sum over matchings of the factors
  std::vector<double> cov(static_cast<std::size_t>(p * p));
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      const auto& fa = spec[static_cast<std::size_t>(a)];
      const auto& fb = spec[static_cast<std::size_t>(b)];
      cov[static_cast<std::size_t>(a * p + b)] =
          theoretical_cov(observables[fa.observable], fa.i, fa.j, observables[fb.observable], fb.i, fb.j, cls);
    }
  double total = 0.0;
  for_each_perfect_matching(p, [&](const Matching& m) {
    double term = 1.0;
    for (const auto& [a, b] : m.pairs()) {
      term *= cov[static_cast<std::size_t>(a * p + b)];
      if (term == 0.0) break;
    }
    total += term;
  });
  return total;
}

bool MomentReport::within(double sigmas, double bias) const {
  return std::abs(empirical - predicted) <= sigmas * std_error + bias;
}

bool agree(const MomentReport& a, const MomentReport& b, double sigmas) {
  const double combined = std::hypot(a.std_error, b.std_error);
  return std::abs(a.empirical - b.empirical) <= sigmas * combined;
}

std::vector<Complex> evaluate_moment_specs(std::span<const MomentSpec> specs, std::span<const Observable> observables,
                                           const EigenSystem& es, const PhaseVector& phases) {
  if (static_cast<int>(phases.size()) != es.n_dim) throw DomainError("phase vector has the wrong length");
  return evaluate_specs(specs, observables, phases, [&](int i) { return es.vector(i); });
}

MomentReport summarize(const MomentSpec& spec, std::span<const Complex> samples, Complex predicted) {
  const std::size_t m = samples.size();
  if (m < 2) throw DomainError("moment report needs at least two samples");
  Complex mean = 0.0;
  for (const auto& x : samples) mean += x;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (const auto& x : samples) ss += std::norm(x - mean);
  MomentReport r;
  r.spec = spec;
  r.empirical = mean;
  r.std_error = std::sqrt(ss / (static_cast<double>(m) * static_cast<double>(m - 1)));
  r.predicted = predicted;
  r.n_samples = m;
  return r;
}

std::vector<MomentReport> mc_mixed_moments(std::span<const MomentSpec> specs, std::span<const Observable> observables,
                                           const WignerSpec& wigner, const McOptions& options) {
  wigner.validate();
  if (options.n_samples < 100) throw ConfigError("Monte-Carlo estimators need n_samples >= 100");
  const int n = wigner.n_dim;
  check_observables(observables, n);
  const std::vector<int> indices = moment_indices(specs, observables, n, options.bulk_fraction);
  // one neighbor on each side so the degeneracy check sees the gaps around the indices
  const int lo = std::max(0, indices.front() - 1);
  const int hi = std::min(n - 1, indices.back() + 1);

  std::vector<std::vector<Complex>> per_sample(options.n_samples);
  parallel_for(options.n_samples, options.workers, [&](std::size_t s) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxResamples) throw NumericError("repeated near-degenerate spectra");
      Engine rng = make_engine(wigner.seed, Stream::wigner, s, static_cast<std::uint64_t>(attempt));
      const HermitianMatrix w = sample_wigner(wigner, rng);
      const EigenSystem es = eigensolve_range(w, lo, hi);
      if (es.min_gap < kDegenerateGap) continue;
      Engine phase_rng = make_engine(wigner.seed, Stream::phases, s);
      const PhaseVector phases = draw_phases(n, wigner.cls, phase_rng);
      per_sample[s] = evaluate_specs(specs, observables, phases, [&](int i) { return es.vector(i); });
      return;
    }
  });
  return aggregate(specs, observables, per_sample, wigner.cls);
}

Eigen::MatrixXcd haar_frame(int n, int columns, SymmetryClass cls, Engine& rng) {
  if (columns < 1 || columns > n) throw DomainError("Haar frame needs 1 <= columns <= N");
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd g(n, columns);
  if (cls == SymmetryClass::real_symmetric) {
    for (int c = 0; c < columns; ++c)
      for (int r = 0; r < n; ++r) g(r, c) = nd(rng);
  } else {
    const double s = std::numbers::sqrt2 / 2.0;
    for (int c = 0; c < columns; ++c)
      for (int r = 0; r < n; ++r) {
        const double re = nd(rng);
        g(r, c) = Complex(s * re, s * nd(rng));
      }
  }
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, columns);
  const Eigen::MatrixXcd& r = qr.matrixQR();
  for (int c = 0; c < columns; ++c) {
    const Complex d = r(c, c);
    if (std::abs(d) > 0.0) q.col(c) *= d / std::abs(d);
  }
  return q;
}

std::vector<MomentReport> haar_frame_moments(std::span<const MomentSpec> specs, std::span<const Observable> observables,
                                             int n_dim, SymmetryClass cls, std::uint64_t seed,
                                             const McOptions& options) {
  if (options.n_samples < 100) throw ConfigError("Monte-Carlo estimators need n_samples >= 100");
  check_observables(observables, n_dim);
  const std::vector<int> indices = moment_indices(specs, observables, n_dim, options.bulk_fraction);
  std::map<int, int> column_of;
  for (std::size_t c = 0; c < indices.size(); ++c) column_of[indices[c]] = static_cast<int>(c);

  std::vector<std::vector<Complex>> per_sample(options.n_samples);
  parallel_for(options.n_samples, options.workers, [&](std::size_t s) {
    Engine rng = make_engine(seed, Stream::haar, s);
    const Eigen::MatrixXcd frame = haar_frame(n_dim, static_cast<int>(indices.size()), cls, rng);
    Engine phase_rng = make_engine(seed, Stream::phases, s);
    const PhaseVector phases = draw_phases(n_dim, cls, phase_rng);
    per_sample[s] = evaluate_specs(specs, observables, phases, [&](int i) { return frame.col(column_of.at(i)); });
  });
  return aggregate(specs, observables, per_sample, cls);
}

MomentReport haar_configuration_moment(std::span<const int> sites, std::span<const Observable> edge_observables,
                                       SymmetryClass cls, std::uint64_t seed, std::size_t n_samples, unsigned workers) {
  if (sites.size() != 2 * edge_observables.size() || sites.empty())
    throw DomainError("configuration needs two sites per edge observable");
  const int n = edge_observables.front().dim();
  check_observables(edge_observables, n);
  std::map<int, int> column_of;
  for (int x : sites) {
    if (x < 0 || x >= n) throw DomainError("configuration site out of range");
    column_of.emplace(x, 0);
  }
  int c = 0;
  for (auto& [site, col] : column_of) col = c++;

  std::vector<Complex> samples(n_samples);
  parallel_for(n_samples, workers, [&](std::size_t s) {
    Engine rng = make_engine(seed, Stream::haar, s);
    const Eigen::MatrixXcd frame = haar_frame(n, static_cast<int>(column_of.size()), cls, rng);
    Complex prod = 1.0;
    for (std::size_t e = 0; e < edge_observables.size(); ++e)
      prod *= edge_observables[e].traceless_sandwich(frame.col(column_of.at(sites[2 * e])),
                                                     frame.col(column_of.at(sites[2 * e + 1])));
    samples[s] = prod;
  });
  MomentSpec spec;
  for (std::size_t e = 0; e < edge_observables.size(); ++e) spec.push_back({e, sites[2 * e], sites[2 * e + 1]});
  return summarize(spec, samples, Complex(std::nan(""), 0.0));
}

std::string describe(const MomentSpec& spec, std::span<const Observable> observables) {
  std::ostringstream os;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (k) os << '*';
    const auto& f = spec[k];
    os << "Phi(" << (f.observable < observables.size() ? observables[f.observable].label() : "?") << ',' << f.i << ','
       << f.j << ')';
  }
  return os.str();
}

}  // namespace olab
