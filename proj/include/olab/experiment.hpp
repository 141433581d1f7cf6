#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "olab/ensembles.hpp"
#include "olab/overlaps.hpp"

namespace olab {

enum class ExitCode : int { pass = 0, acceptance_failure = 1, config_error = 2, numeric_error = 3 };

enum class ExperimentKind { covariance, mixed_moments, kernel_check, flow_relaxation, eth_check, local_law, haar_oracle };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

struct Thresholds {
  double sigmas = 4.0;
  double bias = 0.0;
};

struct KernelSettings {
  int sites = 3;
  int n = 2;
  int evaluations = 3;
};

struct RelaxationSettings {
  std::vector<double> times;
};

struct SpectralSettings {
  double xi = 0.3;
  std::vector<double> energies{-1.0, -0.5, 0.0, 0.5, 1.0};
  double eta_exponent = -0.9;
  double resolvent_bound = 1.5;
  std::size_t resolvent_samples = 1;
  double eth_factor = 4.0;
  double required_fraction = 0.95;
  std::string observable;
};

/// Fully resolved and validated run description. `resolved` is the canonical JSON
/// with every default filled in; the config hash is taken over it minus the
/// output location and worker count, which do not affect results.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::covariance;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::filesystem::path output;
  WignerSpec wigner;
  McOptions mc;
  std::vector<std::string> observable_names;
  std::vector<Observable> observables;
  std::vector<MomentSpec> moments;
  Thresholds thresholds;
  KernelSettings kernel;
  RelaxationSettings relaxation;
  SpectralSettings spectral;
  nlohmann::json resolved;

  std::string hash() const;
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::filesystem::path> output;
};

/// Parses and validates; throws ConfigError or DomainError before anything is written.
ExperimentConfig parse_config(const nlohmann::json& input, const RunOverrides& overrides = {});

/// Runs a validated config, writes its artifacts and returns the exit code.
ExitCode execute(const ExperimentConfig& config, std::ostream& log);

/// Reads, validates and runs a config file, mapping failures to exit codes.
ExitCode run_config_file(const std::filesystem::path& path, const RunOverrides& overrides, std::ostream& log,
                         std::ostream& err);

}  // namespace olab
