#include "olab/dbm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "olab/errors.hpp"
#include "olab/parallel.hpp"

namespace olab {

FlowMode parse_flow_mode(const std::string& name) {
  if (name == "dbm") return FlowMode::dbm;
  if (name == "ou") return FlowMode::ou;
  throw ConfigError("unknown flow mode '" + name + "'");
}

void FlowParams::validate() const {
  if (!(dt > 0.0) || !(dt <= horizon)) throw ConfigError("flow parameters need 0 < dt <= T");
}

HermitianMatrix brownian_increment(int n, SymmetryClass cls, double dt, Engine& rng) {
  if (n < 1) throw DomainError("dimension must be positive");
  if (dt < 0.0) throw DomainError("time step must be >= 0");
  std::normal_distribution<double> nd;
  const double s = std::sqrt(dt / n);
  if (cls == SymmetryClass::real_symmetric) {
    Eigen::MatrixXd b(n, n);
    for (int c = 0; c < n; ++c) {
      b(c, c) = std::numbers::sqrt2 * s * nd(rng);
      for (int r = c + 1; r < n; ++r) {
        b(r, c) = s * nd(rng);
        b(c, r) = b(r, c);
      }
    }
    return HermitianMatrix(std::move(b));
  }
  const double h = s * std::numbers::sqrt2 / 2.0;
  Eigen::MatrixXcd b(n, n);
  for (int c = 0; c < n; ++c) {
    b(c, c) = s * nd(rng);
    for (int r = c + 1; r < n; ++r) {
      const double re = nd(rng);
      b(r, c) = Complex(h * re, h * nd(rng));
      b(c, r) = std::conj(b(r, c));
    }
  }
  return HermitianMatrix(std::move(b));
}

void flow_step(FlowState& state, double dt, FlowMode mode) {
  if (dt < 0.0) throw DomainError("time step must be >= 0");
  if (dt == 0.0) return;
  const HermitianMatrix inc = brownian_increment(state.matrix.dim(), state.matrix.symmetry(), dt, state.rng);
  const double drift = mode == FlowMode::ou ? 1.0 - dt / 2.0 : 1.0;
  // both updates keep the stored triangle pair conjugate, so Hermiticity is exact
  if (state.matrix.is_real())
    state.matrix.real() = drift * state.matrix.real() + inc.real();
  else
    state.matrix.complex() = drift * state.matrix.complex() + inc.complex();
  state.time += dt;
}

void evolve(FlowState& state, const FlowParams& params) {
  params.validate();
  while (state.time < params.horizon) {
    const double remaining = params.horizon - state.time;
    // absorb round-off so a grid of exact multiples does not leave a sliver step
    const double h = remaining <= params.dt * (1.0 + 1e-9) ? remaining : params.dt;
    flow_step(state, h, params.mode);
    if (h == remaining) state.time = params.horizon;
  }
}

RateTable<double> environment_rates(const EigenSystem& es, int n_dim) {
  if (n_dim < 1) throw DomainError("dimension must be positive");
  const int m = es.count();
  RateTable<double> t = RateTable<double>::constant(m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      const double gap = es.eigenvalues(a) - es.eigenvalues(b);
      if (std::abs(gap) < 1e-10) throw DomainError("near-degenerate eigenvalues: resample the environment");
      t(a, b) = t(b, a) = 1.0 / (n_dim * gap * gap);
    }
  return t;
}

std::vector<double> relaxation_grid(int n_dim, double eps, int count) {
  if (n_dim < 2 || count < 0 || !(eps > 0.0) || !(eps < 1.0)) throw ConfigError("relaxation grid needs N >= 2, 0 < eps < 1");
  std::vector<double> grid{0.0};
  const double base = std::pow(static_cast<double>(n_dim), -1.0 + eps);
  for (int k = 0; k < count; ++k) grid.push_back(base * std::ldexp(1.0, k));
  return grid;
}

const RelaxationRow& RelaxationReport::at(std::size_t time_index, std::size_t moment_id) const {
  for (const auto& r : rows)
    if (r.moment_id == moment_id && time_index-- == 0) return r;
  throw DomainError("no relaxation row for that time index and moment");
}

RelaxationReport relaxation_experiment(const RelaxationSpec& spec) {
  spec.wigner.validate();
  const auto& times = spec.times;
  if (times.empty() || times.front() != 0.0) throw ConfigError("relaxation grid must start at t = 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw ConfigError("relaxation grid must be strictly increasing");
  if (spec.options.n_samples < 100) throw ConfigError("Monte-Carlo estimators need n_samples >= 100");
  const int n = spec.wigner.n_dim;
  const std::vector<int> indices = moment_indices(spec.specs, spec.observables, n, spec.options.bulk_fraction);
  const int lo = std::max(0, indices.front() - 1);
  const int hi = std::min(n - 1, indices.back() + 1);
  const std::size_t n_times = times.size();
  const std::size_t n_specs = spec.specs.size();

  // per_sample[s][k] holds the spec values of path s at grid time k
  std::vector<std::vector<std::vector<Complex>>> per_sample(spec.options.n_samples);
  parallel_for(spec.options.n_samples, spec.options.workers, [&](std::size_t s) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == 16) throw NumericError("repeated near-degenerate spectra along a flow path");
      Engine init = make_engine(spec.wigner.seed, Stream::wigner, s, static_cast<std::uint64_t>(attempt));
      FlowState state{sample_wigner(spec.wigner, init), 0.0,
                      make_engine(spec.wigner.seed, Stream::flow, s, static_cast<std::uint64_t>(attempt))};
      std::vector<std::vector<Complex>> values;
      bool degenerate = false;
      for (double t : times) {
        flow_step(state, t - state.time, FlowMode::dbm);
        state.time = t;
        const EigenSystem es = eigensolve_range(state.matrix, lo, hi);
        if (es.min_gap < kDegenerateGap) {
          degenerate = true;
          break;
        }
        const PhaseVector phases = draw_phases(n, spec.wigner.cls, state.rng);
        values.push_back(evaluate_moment_specs(spec.specs, spec.observables, es, phases));
      }
      if (degenerate) continue;
      per_sample[s] = std::move(values);
      return;
    }
  });

  RelaxationReport report;
  std::vector<Complex> column(spec.options.n_samples);
  for (std::size_t k = 0; k < n_times; ++k)
    for (std::size_t m = 0; m < n_specs; ++m) {
      for (std::size_t s = 0; s < column.size(); ++s) column[s] = per_sample[s][k][m];
      MomentReport r = summarize(spec.specs[m], column, wick_moment(spec.specs[m], spec.observables, spec.wigner.cls));
      const double dev = std::abs(r.empirical - r.predicted);
      report.rows.push_back({times[k], m, std::move(r), dev});
    }
  for (std::size_t m = 0; m < n_specs; ++m) {
    const auto& first = report.at(0, m);
    const auto& last = report.at(n_times - 1, m);
    const double se = std::hypot(first.report.std_error, last.report.std_error);
    std::ostringstream os;
    os << "moment " << m << ": deviation " << first.deviation << " at t=0 -> " << last.deviation << " at t=" << last.time
       << " (";
    if (last.deviation < first.deviation - se)
      os << "decreasing";
    else if (last.deviation > first.deviation + se)
      os << "increasing";
    else
      os << "flat within combined SE";
    os << ")";
    report.trends.push_back(os.str());
  }
  return report;
}

}  // namespace olab
