#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace olab {

/// Perfect matching of {0, ..., m-1}, stored as a fixed-point-free involution.
class Matching {
 public:
  Matching() = default;
  /// Throws DomainError unless `partner` is a fixed-point-free involution.
  explicit Matching(std::vector<int> partner);
  static Matching from_pairs(const std::vector<std::pair<int, int>>& pairs);

  int size() const { return static_cast<int>(partner_.size()); }
  int operator()(int a) const { return partner_[static_cast<std::size_t>(a)]; }
  const std::vector<int>& partner() const { return partner_; }
  /// Pairs (a, b) with a < b, sorted by a.
  std::vector<std::pair<int, int>> pairs() const;

  friend bool operator==(const Matching&, const Matching&) = default;

 private:
  std::vector<int> partner_;
};

/// (m - 1)!! for even m, 0 for odd m.
std::uint64_t matching_count(int m);

inline constexpr int kMaxMatchingSize = 16;

/// Visits every perfect matching of {0..m-1} exactly once, in a fixed order
/// (0 is paired with 1, 2, ... in turn, then recursively). Odd m visits nothing.
void for_each_perfect_matching(int m, const std::function<void(const Matching&)>& visit);
std::vector<Matching> perfect_matchings(int m);

}  // namespace olab
