#include "olab/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include "olab/dbm.hpp"
#include "olab/errors.hpp"
#include "olab/momentflow.hpp"
#include "olab/report.hpp"
#include "olab/spectral.hpp"

namespace olab {

using nlohmann::json;

ExperimentKind parse_experiment_kind(const std::string& name) {
  static const std::map<std::string, ExperimentKind> kinds{
      {"covariance", ExperimentKind::covariance},       {"mixed-moments", ExperimentKind::mixed_moments},
      {"kernel-check", ExperimentKind::kernel_check},   {"flow-relaxation", ExperimentKind::flow_relaxation},
      {"eth-check", ExperimentKind::eth_check},         {"local-law", ExperimentKind::local_law},
      {"haar-oracle", ExperimentKind::haar_oracle}};
  const auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown experiment '" + name + "'");
  return it->second;
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::covariance: return "covariance";
    case ExperimentKind::mixed_moments: return "mixed-moments";
    case ExperimentKind::kernel_check: return "kernel-check";
    case ExperimentKind::flow_relaxation: return "flow-relaxation";
    case ExperimentKind::eth_check: return "eth-check";
    case ExperimentKind::local_law: return "local-law";
    case ExperimentKind::haar_oracle: return "haar-oracle";
  }
  return "unknown";
}

std::string ExperimentConfig::hash() const {
  json h = resolved;
  h.erase("output");
  h.erase("workers");
  return hex64(fnv1a64(h.dump()));
}

namespace {

/// Reads `key` from `in` (or the default), records it in `out` and type-checks it.
template <class T>
T take(const json& in, json& out, const std::string& key, const T& fallback) {
  T value = fallback;
  if (in.contains(key) && !in.at(key).is_null()) {
    try {
      value = in.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  out[key] = value;
  return value;
}

template <class T>
T require(const json& in, json& out, const std::string& key) {
  if (!in.contains(key)) throw ConfigError("config key '" + key + "' is required");
  return take<T>(in, out, key, T{});
}

void check_known_keys(const json& in, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : in.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

Observable build_observable(const std::string& name, const json& in, json& out, int n, SymmetryClass cls) {
  if (!in.is_object()) throw ConfigError("observable '" + name + "' must be an object");
  check_known_keys(in, {"kind", "block", "indices", "seed", "beta"}, "observable '" + name + "'");
  ObservableParams p;
  p.n_dim = n;
  p.label = name;
  const auto kind = parse_observable_kind(require<std::string>(in, out, "kind"));
  switch (kind) {
    case ObservableKind::diag_signs:
      p.block = take<int>(in, out, "block", 0);
      if (p.block < 0) throw ConfigError("observable '" + name + "': block must be >= 0");
      break;
    case ObservableKind::rank_projector:
      p.indices = require<std::vector<int>>(in, out, "indices");
      break;
    case ObservableKind::random_hermitian:
      p.seed = take<std::uint64_t>(in, out, "seed", 0);
      p.cls = symmetry_from_beta(take<int>(in, out, "beta", beta(cls)));
      break;
  }
  return make_observable(kind, p);
}

std::size_t observable_id(const ExperimentConfig& c, const std::string& name) {
  for (std::size_t k = 0; k < c.observable_names.size(); ++k)
    if (c.observable_names[k] == name) return k;
  throw ConfigError("unknown observable id '" + name + "'");
}

std::vector<MomentSpec> covariance_specs(const std::vector<int>& indices, std::size_t n_observables) {
  std::vector<MomentSpec> specs;
  for (std::size_t a = 0; a < n_observables; ++a) {
    for (int i : indices) specs.push_back({{a, i, i}, {a, i, i}});
    for (std::size_t p = 0; p < indices.size(); ++p)
      for (std::size_t q = p + 1; q < indices.size(); ++q) {
        const int i = indices[p];
        const int j = indices[q];
        specs.push_back({{a, i, j}, {a, j, i}});
        specs.push_back({{a, i, j}, {a, i, j}});
      }
  }
  return specs;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

std::string moments_csv(const ExperimentConfig& c, const std::vector<MomentReport>& reports) {
  std::ostringstream os;
  write_moment_csv_header(os);
  write_moment_csv(os, c.hash(), reports, c.observables);
  return os.str();
}

ExitCode run_moments(const ExperimentConfig& c, std::ostream& log) {
  const auto reports = mc_mixed_moments(c.moments, c.observables, c.wigner, c.mc);
  bool pass = true;
  json records = json::array();
  for (const auto& r : reports) {
    const bool ok = r.within(c.thresholds.sigmas, c.thresholds.bias);
    pass = pass && ok;
    json j = to_json(r, c.observables);
    j["within_threshold"] = ok;
    records.push_back(j);
    log << (ok ? "PASS " : "FAIL ") << describe(r.spec, c.observables) << " empirical=" << r.empirical
        << " se=" << r.std_error << " predicted=" << r.predicted << '\n';
  }
  write_file(c.output / "moments.csv", moments_csv(c, reports));
  write_file(c.output / "moments.json", json{{"config_hash", c.hash()}, {"pass", pass}, {"moments", records}}.dump(2));
  return pass ? ExitCode::pass : ExitCode::acceptance_failure;
}

ExitCode run_haar_oracle(const ExperimentConfig& c, std::ostream& log) {
  const auto wig = mc_mixed_moments(c.moments, c.observables, c.wigner, c.mc);
  const auto haar = haar_frame_moments(c.moments, c.observables, c.wigner.n_dim, c.wigner.cls, c.seed, c.mc);
  bool pass = true;
  json records = json::array();
  for (std::size_t k = 0; k < wig.size(); ++k) {
    const bool ok = agree(wig[k], haar[k], c.thresholds.sigmas);
    pass = pass && ok;
    const double combined = std::hypot(wig[k].std_error, haar[k].std_error);
    records.push_back(to_json(DiagnosticRecord{"haar_agreement",
                                               {{"spec", describe(wig[k].spec, c.observables)}, {"sigmas", c.thresholds.sigmas}},
                                               std::abs(wig[k].empirical - haar[k].empirical),
                                               c.thresholds.sigmas * combined, ok}));
    log << (ok ? "PASS " : "FAIL ") << describe(wig[k].spec, c.observables) << " wigner=" << wig[k].empirical
        << " haar=" << haar[k].empirical << '\n';
  }
  write_file(c.output / "moments_wigner.csv", moments_csv(c, wig));
  write_file(c.output / "moments_haar.csv", moments_csv(c, haar));
  write_file(c.output / "diagnostics.json", json{{"config_hash", c.hash()}, {"pass", pass}, {"records", records}}.dump(2));
  return pass ? ExitCode::pass : ExitCode::acceptance_failure;
}

ExitCode run_kernel(const ExperimentConfig& c, std::ostream& log) {
  const StateSpace space(c.kernel.sites, c.kernel.n);
  bool pass = true;
  json evaluations = json::array();
  for (int e = 0; e < c.kernel.evaluations; ++e) {
    const std::uint64_t trace_seed = c.seed + static_cast<std::uint64_t>(e);
    const auto traces = random_trace_table(c.kernel.n, trace_seed);
    const KernelReport report = kernel_check(space, ansatz_values(space, traces, Rational(c.kernel.sites)));
    pass = pass && report.pass();
    evaluations.push_back({{"trace_seed", trace_seed}, {"pass", report.pass()}, {"pairs", to_json(report)}});
  }
  json chi = json::array();
  if (2 * c.kernel.n <= 8) {
    for (const auto& m : perfect_matchings(2 * c.kernel.n)) {
      const KernelReport report = kernel_check(space, chi_values(space, m));
      pass = pass && report.pass();
      chi.push_back({{"matching", m.pairs()}, {"pass", report.pass()}});
    }
  }
  log << "kernel-check on " << space.size() << " states: " << (pass ? "all residuals zero" : "NONZERO residual") << '\n';
  write_file(c.output / "kernel_report.json",
             json{{"config_hash", c.hash()}, {"states", space.size()}, {"pass", pass}, {"ansatz", evaluations}, {"chi", chi}}
                 .dump(2));
  return pass ? ExitCode::pass : ExitCode::acceptance_failure;
}

ExitCode run_relaxation(const ExperimentConfig& c, std::ostream& log) {
  RelaxationSpec spec{c.wigner, c.relaxation.times, c.moments, c.observables, c.mc};
  const RelaxationReport report = relaxation_experiment(spec);
  std::ostringstream csv;
  write_relaxation_csv(csv, c.hash(), report);
  write_file(c.output / "relaxation.csv", csv.str());
  for (const auto& t : report.trends) log << t << '\n';
  write_file(c.output / "relaxation.json", json{{"config_hash", c.hash()}, {"trends", report.trends}}.dump(2));
  // trend report only; not an acceptance check
  return ExitCode::pass;
}

ExitCode run_eth(const ExperimentConfig& c, std::ostream& log) {
  const Observable& a = c.observables[observable_id(c, c.spectral.observable)];
  const int n = c.wigner.n_dim;
  const double threshold = c.spectral.eth_factor * std::sqrt(std::log(static_cast<double>(n)));
  json records = json::array();
  std::size_t passed = 0;
  for (std::size_t s = 0; s < c.mc.n_samples; ++s) {
    DiagnosticRecord r{"eth", {{"sample", s}, {"observable", a.label()}}, 0.0, threshold, false};
    try {
      const EthReport eth = eth_check(eigensolve(sample_wigner(c.wigner, s)), a, c.mc.bulk_fraction);
      r.statistic = eth.max_scaled_overlap;
      r.pass = eth.max_scaled_overlap <= threshold;
    } catch (const NumericError& e) {
      r.parameters["error"] = e.what();
    }
    passed += r.pass ? 1 : 0;
    records.push_back(to_json(r));
  }
  const double fraction = static_cast<double>(passed) / static_cast<double>(c.mc.n_samples);
  const bool pass = fraction >= c.spectral.required_fraction;
  log << "eth: " << passed << "/" << c.mc.n_samples << " samples within " << threshold << '\n';
  write_file(c.output / "diagnostics.json",
             json{{"config_hash", c.hash()}, {"pass", pass}, {"fraction", fraction}, {"records", records}}.dump(2));
  return pass ? ExitCode::pass : ExitCode::acceptance_failure;
}

ExitCode run_local_law(const ExperimentConfig& c, std::ostream& log) {
  const int n = c.wigner.n_dim;
  const SemicircleModel model(0.0);
  json records = json::array();
  std::size_t rigid = 0;
  for (std::size_t s = 0; s < c.mc.n_samples; ++s) {
    DiagnosticRecord r{"rigidity", {{"sample", s}, {"xi", c.spectral.xi}}, 0.0, std::pow(n, c.spectral.xi), false};
    try {
      const Eigen::VectorXd ev = eigenvalues_only(sample_wigner(c.wigner, s));
      const RigidityReport rep = rigidity_check(std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())),
                                                model, c.spectral.xi);
      r.statistic = rep.max_scaled_deviation;
      r.pass = rep.pass;
    } catch (const NumericError& e) {
      r.parameters["error"] = e.what();
    }
    rigid += r.pass ? 1 : 0;
    records.push_back(to_json(r));
  }
  const double fraction = static_cast<double>(rigid) / static_cast<double>(c.mc.n_samples);
  bool pass = fraction >= c.spectral.required_fraction;
  log << "rigidity: " << rigid << "/" << c.mc.n_samples << " samples within N^xi\n";

  if (!c.spectral.observable.empty()) {
    const Observable& a = c.observables[observable_id(c, c.spectral.observable)];
    const double eta = std::pow(n, c.spectral.eta_exponent);
    for (std::size_t s = 0; s < std::min(c.spectral.resolvent_samples, c.mc.n_samples); ++s) {
      const EigenSystem es = eigensolve(sample_wigner(c.wigner, s));
      for (double e : c.spectral.energies) {
        const std::vector<SpectralPoint> pts{{e, eta, 0.0, true}, {e, eta, 0.0, true}};
        const std::vector<const Observable*> obs{&a, &a};
        DiagnosticRecord r{"two_resolvent", {{"sample", s}, {"energy", e}, {"eta", eta}}, 0.0,
                           c.spectral.resolvent_bound, false};
        try {
          r.statistic = resolvent_trace_product(es, pts, obs).real() / a.norm_sq();
          r.pass = r.statistic <= c.spectral.resolvent_bound;
        } catch (const NumericError& ex) {
          r.parameters["error"] = ex.what();
        }
        pass = pass && r.pass;
        log << "two-resolvent E=" << e << ": " << r.statistic << (r.pass ? " ok" : " EXCEEDS") << '\n';
        records.push_back(to_json(r));
      }
    }
  }
  write_file(c.output / "diagnostics.json",
             json{{"config_hash", c.hash()}, {"pass", pass}, {"rigidity_fraction", fraction}, {"records", records}}.dump(2));
  return pass ? ExitCode::pass : ExitCode::acceptance_failure;
}

}  // namespace

ExperimentConfig parse_config(const json& input, const RunOverrides& overrides) {
  if (!input.is_object()) throw ConfigError("config must be a JSON object");
  check_known_keys(input,
                   {"experiment", "seed", "workers", "output", "ensemble", "bulk_fraction", "n_samples", "observables",
                    "moments", "indices", "thresholds", "kernel", "relaxation", "spectral"},
                   "config");
  ExperimentConfig c;
  json& out = c.resolved;
  c.kind = parse_experiment_kind(require<std::string>(input, out, "experiment"));
  c.seed = take<std::uint64_t>(input, out, "seed", 0);
  if (overrides.seed) out["seed"] = c.seed = *overrides.seed;
  c.workers = take<unsigned>(input, out, "workers", 1);
  if (overrides.workers) out["workers"] = c.workers = *overrides.workers;
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  c.output = take<std::string>(input, out, "output", "olab_out");
  if (overrides.output) {
    c.output = *overrides.output;
    out["output"] = c.output.string();
  }

  if (c.kind == ExperimentKind::kernel_check) {
    const json k = input.value("kernel", json::object());
    check_known_keys(k, {"sites", "n", "evaluations"}, "kernel");
    json& ko = out["kernel"];
    c.kernel.sites = take<int>(k, ko, "sites", 3);
    c.kernel.n = take<int>(k, ko, "n", 2);
    c.kernel.evaluations = take<int>(k, ko, "evaluations", 3);
    if (c.kernel.sites < 2 || c.kernel.n < 1 || c.kernel.evaluations < 1)
      throw ConfigError("kernel-check needs sites >= 2, n >= 1, evaluations >= 1");
    if (lambda_cardinality(c.kernel.sites, c.kernel.n) > Integer(static_cast<unsigned long>(kStateBudget)))
      throw ConfigError("kernel-check state space exceeds the budget");
    return c;
  }

  const json ens = input.value("ensemble", json::object());
  check_known_keys(ens, {"n_dim", "beta", "law", "diagonal_variance"}, "ensemble");
  json& eo = out["ensemble"];
  c.wigner.n_dim = require<int>(ens, eo, "n_dim");
  c.wigner.cls = symmetry_from_beta(take<int>(ens, eo, "beta", 1));
  c.wigner.law = EntryLaw::parse(take<std::string>(ens, eo, "law", "gaussian"));
  if (ens.contains("diagonal_variance") && !ens.at("diagonal_variance").is_null())
    c.wigner.diagonal_variance = take<double>(ens, eo, "diagonal_variance", 0.0);
  else
    eo["diagonal_variance"] = c.wigner.diag_variance();
  c.wigner.seed = c.seed;
  c.wigner.validate();

  c.mc.workers = c.workers;
  c.mc.bulk_fraction = take<double>(input, out, "bulk_fraction", 0.1);
  c.mc.n_samples = take<std::size_t>(input, out, "n_samples", 1000);
  if (!(c.mc.bulk_fraction > 0.0 && c.mc.bulk_fraction < 0.5)) throw ConfigError("bulk_fraction must lie in (0, 1/2)");
  if (c.mc.n_samples < 1) throw ConfigError("n_samples must be >= 1");

  const json obs = input.value("observables", json::object());
  if (!obs.is_object()) throw ConfigError("observables must be an object keyed by id");
  for (const auto& [name, def] : obs.items()) {
    c.observable_names.push_back(name);
    c.observables.push_back(build_observable(name, def, out["observables"][name], c.wigner.n_dim, c.wigner.cls));
  }

  const json th = input.value("thresholds", json::object());
  check_known_keys(th, {"sigmas", "bias"}, "thresholds");
  c.thresholds.sigmas = take<double>(th, out["thresholds"], "sigmas", 4.0);
  c.thresholds.bias = take<double>(th, out["thresholds"], "bias", 0.0);

  const bool needs_moments = c.kind == ExperimentKind::covariance || c.kind == ExperimentKind::mixed_moments ||
                             c.kind == ExperimentKind::haar_oracle || c.kind == ExperimentKind::flow_relaxation;
  if (needs_moments) {
    if (c.observables.empty()) throw ConfigError("at least one observable is required");
    if (c.kind == ExperimentKind::covariance) {
      const int mid = c.wigner.n_dim / 2;
      const auto indices = take<std::vector<int>>(input, out, "indices", {mid, mid + 1});
      c.moments = covariance_specs(indices, c.observables.size());
    } else {
      if (!input.contains("moments") || !input.at("moments").is_array() || input.at("moments").empty())
        throw ConfigError("'moments' must be a non-empty list of factor lists");
      for (const auto& m : input.at("moments")) {
        if (!m.is_array() || m.empty()) throw ConfigError("each moment is a non-empty list of factors");
        MomentSpec spec;
        for (const auto& f : m) {
          json fo;
          const auto name = require<std::string>(f, fo, "observable");
          spec.push_back({observable_id(c, name), require<int>(f, fo, "i"), require<int>(f, fo, "j")});
        }
        c.moments.push_back(spec);
      }
      out["moments"] = input.at("moments");
    }
    // index and bulk-window validation happens here, before any artifact exists
    moment_indices(c.moments, c.observables, c.wigner.n_dim, c.mc.bulk_fraction);
    if (c.mc.n_samples < 100) throw ConfigError("Monte-Carlo experiments need n_samples >= 100");
  }

  if (c.kind == ExperimentKind::flow_relaxation) {
    const json r = input.value("relaxation", json::object());
    check_known_keys(r, {"times", "eps", "count"}, "relaxation");
    json& ro = out["relaxation"];
    if (r.contains("times")) {
      c.relaxation.times = take<std::vector<double>>(r, ro, "times", {});
    } else {
      const double eps = take<double>(r, ro, "eps", 0.5);
      const int count = take<int>(r, ro, "count", 2);
      c.relaxation.times = relaxation_grid(c.wigner.n_dim, eps, count);
      ro["times"] = c.relaxation.times;
    }
    if (c.relaxation.times.empty() || c.relaxation.times.front() != 0.0)
      throw ConfigError("relaxation times must start at 0");
    for (std::size_t k = 1; k < c.relaxation.times.size(); ++k)
      if (!(c.relaxation.times[k] > c.relaxation.times[k - 1])) throw ConfigError("relaxation times must increase");
  }

  if (c.kind == ExperimentKind::eth_check || c.kind == ExperimentKind::local_law) {
    const json sp = input.value("spectral", json::object());
    check_known_keys(sp,
                     {"xi", "energies", "eta_exponent", "resolvent_bound", "resolvent_samples", "eth_factor",
                      "required_fraction", "observable"},
                     "spectral");
    json& so = out["spectral"];
    auto& s = c.spectral;
    s.xi = take<double>(sp, so, "xi", s.xi);
    s.energies = take<std::vector<double>>(sp, so, "energies", s.energies);
    s.eta_exponent = take<double>(sp, so, "eta_exponent", s.eta_exponent);
    s.resolvent_bound = take<double>(sp, so, "resolvent_bound", s.resolvent_bound);
    s.resolvent_samples = take<std::size_t>(sp, so, "resolvent_samples", s.resolvent_samples);
    s.eth_factor = take<double>(sp, so, "eth_factor", s.eth_factor);
    s.required_fraction = take<double>(sp, so, "required_fraction", s.required_fraction);
    s.observable = take<std::string>(sp, so, "observable", "");
    if (c.kind == ExperimentKind::eth_check && s.observable.empty())
      throw ConfigError("eth-check needs spectral.observable");
    if (!s.observable.empty()) {
      const Observable& a = c.observables[observable_id(c, s.observable)];
      if (a.norm_sq() == 0.0) throw DomainError("observable '" + s.observable + "' has <Å^2> = 0");
    }
    if (!(s.required_fraction >= 0.0 && s.required_fraction <= 1.0)) throw ConfigError("required_fraction must lie in [0, 1]");
  }
  return c;
}

ExitCode execute(const ExperimentConfig& c, std::ostream& log) {
  std::filesystem::create_directories(c.output);
  write_file(c.output / "resolved_config.json", c.resolved.dump(2) + "\n");
  switch (c.kind) {
    case ExperimentKind::covariance:
    case ExperimentKind::mixed_moments: return run_moments(c, log);
    case ExperimentKind::haar_oracle: return run_haar_oracle(c, log);
    case ExperimentKind::kernel_check: return run_kernel(c, log);
    case ExperimentKind::flow_relaxation: return run_relaxation(c, log);
    case ExperimentKind::eth_check: return run_eth(c, log);
    case ExperimentKind::local_law: return run_local_law(c, log);
  }
  return ExitCode::config_error;
}

ExitCode run_config_file(const std::filesystem::path& path, const RunOverrides& overrides, std::ostream& log,
                         std::ostream& err) {
  ExperimentConfig config;
  try {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    json input;
    try {
      input = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    config = parse_config(input, overrides);
  } catch (const std::exception& e) {
    err << json{{"error", "configuration"}, {"message", e.what()}, {"config", path.string()}}.dump() << '\n';
    return ExitCode::config_error;
  }
  log << "seed " << config.seed << " config_hash " << config.hash() << '\n' << config.resolved.dump(2) << '\n';
  try {
    return execute(config, log);
  } catch (const ConfigError& e) {
    err << json{{"error", "configuration"}, {"message", e.what()}}.dump() << '\n';
    return ExitCode::config_error;
  } catch (const std::exception& e) {
    err << json{{"error", "numeric"}, {"message", e.what()}}.dump() << '\n';
    return ExitCode::numeric_error;
  }
}

}  // namespace olab
