#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "olab/dbm.hpp"
#include "olab/momentflow.hpp"
#include "olab/overlaps.hpp"

namespace olab {

/// 64-bit FNV-1a
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

/// Shortest round-trip text of a double, independent of locale.
std::string format_number(double value);

struct DiagnosticRecord {
  std::string check;
  nlohmann::json parameters;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

nlohmann::json to_json(const DiagnosticRecord& record);
nlohmann::json to_json(const MomentReport& report, std::span<const Observable> observables);
nlohmann::json to_json(const KernelReport& report);

void write_moment_csv_header(std::ostream& os);
void write_moment_csv(std::ostream& os, const std::string& config_hash, std::span<const MomentReport> reports,
                      std::span<const Observable> observables);

void write_relaxation_csv(std::ostream& os, const std::string& config_hash, const RelaxationReport& report);

}  // namespace olab
