#include "olab/matching.hpp"

#include <string>

#include "olab/errors.hpp"

namespace olab {

Matching::Matching(std::vector<int> partner) : partner_(std::move(partner)) {
  const int m = size();
  for (int a = 0; a < m; ++a) {
    const int b = partner_[static_cast<std::size_t>(a)];
    if (b < 0 || b >= m || b == a || partner_[static_cast<std::size_t>(b)] != a)
      throw DomainError("not a perfect matching at element " + std::to_string(a));
  }
}

Matching Matching::from_pairs(const std::vector<std::pair<int, int>>& pairs) {
  std::vector<int> partner(2 * pairs.size(), -1);
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= static_cast<int>(partner.size()) || b >= static_cast<int>(partner.size()))
      throw DomainError("matching element out of range");
    if (partner[static_cast<std::size_t>(a)] != -1 || partner[static_cast<std::size_t>(b)] != -1)
      throw DomainError("element appears twice in matching");
    partner[static_cast<std::size_t>(a)] = b;
    partner[static_cast<std::size_t>(b)] = a;
  }
  return Matching(std::move(partner));
}

std::vector<std::pair<int, int>> Matching::pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < size(); ++a)
    if (a < partner_[static_cast<std::size_t>(a)]) out.emplace_back(a, partner_[static_cast<std::size_t>(a)]);
  return out;
}

std::uint64_t matching_count(int m) {
  if (m < 0 || m % 2 != 0) return 0;
  std::uint64_t c = 1;
  for (int k = m - 1; k > 1; k -= 2) c *= static_cast<std::uint64_t>(k);
  return c;
}

namespace {

void extend(std::vector<int>& partner, const std::function<void(const Matching&)>& visit) {
  int first = -1;
  for (int a = 0; a < static_cast<int>(partner.size()); ++a)
    if (partner[static_cast<std::size_t>(a)] < 0) {
      first = a;
      break;
    }
  if (first < 0) {
    visit(Matching(partner));
    return;
  }
  for (int b = first + 1; b < static_cast<int>(partner.size()); ++b) {
    if (partner[static_cast<std::size_t>(b)] >= 0) continue;
    partner[static_cast<std::size_t>(first)] = b;
    partner[static_cast<std::size_t>(b)] = first;
    extend(partner, visit);
    partner[static_cast<std::size_t>(first)] = -1;
    partner[static_cast<std::size_t>(b)] = -1;
  }
}

}  // namespace

void for_each_perfect_matching(int m, const std::function<void(const Matching&)>& visit) {
  if (m > kMaxMatchingSize) throw ResourceError("perfect matchings of more than 16 elements exceed the enumeration budget");
  if (m < 0 || m % 2 != 0) return;
  std::vector<int> partner(static_cast<std::size_t>(m), -1);
  extend(partner, visit);
}

std::vector<Matching> perfect_matchings(int m) {
  std::vector<Matching> out;
  out.reserve(matching_count(m));
  for_each_perfect_matching(m, [&](const Matching& p) { out.push_back(p); });
  return out;
}

}  // namespace olab
