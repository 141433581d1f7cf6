#include "olab/report.hpp"

#include <charconv>
#include <cmath>

namespace olab {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, value, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const DiagnosticRecord& r) {
  return {{"check", r.check}, {"parameters", r.parameters}, {"statistic", r.statistic}, {"threshold", r.threshold},
          {"pass", r.pass}};
}

nlohmann::json to_json(const MomentReport& r, std::span<const Observable> observables) {
  const std::string text = describe(r.spec, observables);
  return {{"spec", text},
          {"spec_hash", hex64(fnv1a64(text))},
          {"p", r.spec.size()},
          {"empirical", {r.empirical.real(), r.empirical.imag()}},
          {"std_error", r.std_error},
          {"predicted", {r.predicted.real(), r.predicted.imag()}},
          {"n_samples", r.n_samples}};
}

nlohmann::json to_json(const KernelReport& report) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : report.pairs) {
    nlohmann::json entry{{"n", report.n},
                         {"sites", report.n_sites},
                         {"pair", {p.i + 1, p.j + 1}},
                         {"residual_zero", p.residual_zero},
                         {"max_abs_residual", p.max_abs_residual.get_str()}};
    if (p.worst) {
      std::vector<int> one_based(p.worst->begin(), p.worst->end());
      for (int& s : one_based) ++s;
      entry["worst_configuration"] = one_based;
    }
    pairs.push_back(std::move(entry));
  }
  return pairs;
}

void write_moment_csv_header(std::ostream& os) {
  os << "config_hash,spec_hash,spec,p,empirical_re,empirical_im,std_error,predicted_re,predicted_im,n_samples\n";
}

void write_moment_csv(std::ostream& os, const std::string& config_hash, std::span<const MomentReport> reports,
                      std::span<const Observable> observables) {
  for (const auto& r : reports) {
    const std::string text = describe(r.spec, observables);
    os << config_hash << ',' << hex64(fnv1a64(text)) << ",\"" << text << "\"," << r.spec.size() << ','
       << format_number(r.empirical.real()) << ',' << format_number(r.empirical.imag()) << ','
       << format_number(r.std_error) << ',' << format_number(r.predicted.real()) << ','
       << format_number(r.predicted.imag()) << ',' << r.n_samples << '\n';
  }
}

void write_relaxation_csv(std::ostream& os, const std::string& config_hash, const RelaxationReport& report) {
  os << "config_hash,t,moment_id,empirical,empirical_im,std_error,predicted,deviation\n";
  for (const auto& row : report.rows)
    os << config_hash << ',' << format_number(row.time) << ',' << row.moment_id << ','
       << format_number(row.report.empirical.real()) << ',' << format_number(row.report.empirical.imag()) << ','
       << format_number(row.report.std_error) << ',' << format_number(row.report.predicted.real()) << ','
       << format_number(row.deviation) << '\n';
}

}  // namespace olab
