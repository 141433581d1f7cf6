#include "olab/momentflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <type_traits>

#include <unsupported/Eigen/MatrixFunctions>

#include "olab/errors.hpp"
#include "olab/random.hpp"

namespace olab {

std::vector<int> occupations(const Configuration& x, int n_sites) {
  std::vector<int> occ(static_cast<std::size_t>(n_sites), 0);
  for (int site : x) {
    if (site < 0 || site >= n_sites) throw DomainError("configuration site out of range");
    ++occ[static_cast<std::size_t>(site)];
  }
  return occ;
}

bool in_lambda(const Configuration& x, int n_sites) {
  if (x.empty() || x.size() % 2 != 0) return false;
  for (int site : x)
    if (site < 0 || site >= n_sites) return false;
  const auto occ = occupations(x, n_sites);
  return std::all_of(occ.begin(), occ.end(), [](int c) { return c % 2 == 0; });
}

Integer lambda_cardinality(int n_sites, int n) {
  if (n_sites < 1 || n < 1) throw ConfigError("need N_sites >= 1 and n >= 1");
  Integer total = 0;
  Integer binom = 1;
  for (int k = 0; k <= n_sites; ++k) {
    Integer base = n_sites - 2 * k;
    Integer term;
    mpz_pow_ui(term.get_mpz_t(), base.get_mpz_t(), static_cast<unsigned long>(2 * n));
    total += binom * term;
    binom = binom * (n_sites - k) / (k + 1);
  }
  Integer denom;
  mpz_ui_pow_ui(denom.get_mpz_t(), 2, static_cast<unsigned long>(n_sites));
  return total / denom;
}

std::vector<Configuration> enumerate_configs(int n_sites, int n, std::size_t budget) {
  const Integer card = lambda_cardinality(n_sites, n);
  if (card > Integer(static_cast<unsigned long>(budget)))
    throw ResourceError("|Lambda^n| = " + card.get_str() + " exceeds the state budget of " + std::to_string(budget));
  const int len = 2 * n;
  std::vector<Configuration> out;
  out.reserve(card.get_ui());
  Configuration x(static_cast<std::size_t>(len));
  std::vector<int> occ(static_cast<std::size_t>(n_sites), 0);
  int odd = 0;
  // odd sites still need a partner, so prune when they outnumber the free slots
  auto dfs = [&](auto&& self, int pos) -> void {
    if (pos == len) {
      if (odd == 0) out.push_back(x);
      return;
    }
    for (int s = 0; s < n_sites; ++s) {
      auto& c = occ[static_cast<std::size_t>(s)];
      const int new_odd = odd + (c % 2 == 0 ? 1 : -1);
      if (new_odd > len - pos - 1) continue;
      const int prev = odd;
      x[static_cast<std::size_t>(pos)] = s;
      ++c;
      odd = new_odd;
      self(self, pos + 1);
      --c;
      odd = prev;
    }
  };
  dfs(dfs, 0);
  return out;
}

StateSpace::StateSpace(int n_sites, int n, std::size_t budget)
    : n_sites_(n_sites), n_(n), states_(enumerate_configs(n_sites, n, budget)) {
  const double bits = 2.0 * n * std::log2(static_cast<double>(n_sites));
  if (bits > 62.0) throw ResourceError("state space too wide for the 64-bit index key");
  index_.reserve(states_.size());
  for (std::size_t k = 0; k < states_.size(); ++k) index_.emplace(key(states_[k]), k);
}

std::uint64_t StateSpace::key(const Configuration& x) const {
  std::uint64_t k = 0;
  for (int site : x) k = k * static_cast<std::uint64_t>(n_sites_) + static_cast<std::uint64_t>(site);
  return k;
}

std::size_t StateSpace::index_of(const Configuration& x) const {
  if (static_cast<int>(x.size()) != 2 * n_) throw DomainError("configuration has the wrong length");
  for (int site : x)
    if (site < 0 || site >= n_sites_) throw DomainError("configuration site out of range");
  const auto it = index_.find(key(x));
  if (it == index_.end()) throw DomainError("configuration is not in Lambda^n");
  return it->second;
}

Integer double_factorial(int k) {
  if (k < -1 || k % 2 == 0) throw DomainError("double factorial is taken of odd k >= -1 only");
  Integer r = 1;
  for (int m = k; m > 1; m -= 2) r *= m;
  return r;
}

Integer sqrt_pi(const Configuration& x, int n_sites) {
  Integer r = 1;
  for (int c : occupations(x, n_sites)) {
    if (c % 2 != 0) throw DomainError("odd site occupation: configuration not in Lambda^n");
    r *= double_factorial(c - 1);
  }
  return r;
}

Integer pi_measure(const Configuration& x, int n_sites) {
  const Integer s = sqrt_pi(x, n_sites);
  return s * s;
}

namespace {

void check_move(const Configuration& x, int a, int b, int i, int j) {
  const int len = static_cast<int>(x.size());
  if (a == b || i == j || a < 0 || b < 0 || a >= len || b >= len)
    throw DomainError("moves need a != b, i != j and slots in range");
}

}  // namespace

Configuration apply_move_m(const Configuration& x, int a, int b, int i, int j) {
  check_move(x, a, b, i, j);
  Configuration y = x;
  if (x[static_cast<std::size_t>(a)] == i && x[static_cast<std::size_t>(b)] == i) {
    y[static_cast<std::size_t>(a)] = j;
    y[static_cast<std::size_t>(b)] = j;
  }
  return y;
}

Configuration apply_move_s(const Configuration& x, int a, int b, int i, int j) {
  check_move(x, a, b, i, j);
  Configuration y = x;
  if (x[static_cast<std::size_t>(a)] == i && x[static_cast<std::size_t>(b)] == j) {
    y[static_cast<std::size_t>(a)] = j;
    y[static_cast<std::size_t>(b)] = i;
  }
  return y;
}

ConfigGraph ConfigGraph::from(const Configuration& x, const std::vector<int>& labels) {
  if (x.size() % 2 != 0 || x.empty()) throw DomainError("configuration needs an even, positive length");
  if (labels.size() != x.size() / 2) throw DomainError("need one observable label per edge");
  ConfigGraph g;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const int s = x[2 * k];
    const int t = x[2 * k + 1];
    g.edges.push_back({s, t, labels[k]});
    const int lo = std::min(s, t);
    const int hi = std::max(s, t);
    auto it = std::find_if(g.classes.begin(), g.classes.end(), [&](const EdgeClass& c) { return c.low == lo && c.high == hi; });
    if (it == g.classes.end()) {
      g.classes.push_back({lo, hi, {}});
      it = std::prev(g.classes.end());
    }
    it->block.push_back(static_cast<int>(k));
  }
  return g;
}

Configuration ConfigGraph::flatten() const {
  Configuration x;
  for (const auto& e : edges) {
    x.push_back(e.first);
    x.push_back(e.second);
  }
  return x;
}

template <class Scalar>
void TraceTable<Scalar>::set(int a, int b, Scalar value) {
  values_[{std::min(a, b), std::max(a, b)}] = std::move(value);
}

template <class Scalar>
const Scalar& TraceTable<Scalar>::get(int a, int b) const {
  const auto it = values_.find({std::min(a, b), std::max(a, b)});
  if (it == values_.end())
    throw DomainError("missing trace entry <A_" + std::to_string(a) + " A_" + std::to_string(b) + ">");
  return it->second;
}

template <class Scalar>
bool TraceTable<Scalar>::has(int a, int b) const {
  return values_.count({std::min(a, b), std::max(a, b)}) > 0;
}

namespace {

template <class Scalar>
Scalar power(const Scalar& base, int e) {
  Scalar r = 1;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

template <class Scalar>
Scalar from_integer(const Integer& z) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return z.get_d();
  } else {
    return Scalar(z);
  }
}

}  // namespace

template <class Scalar>
Scalar ansatz_F(const ConfigGraph& g, const TraceTable<Scalar>& traces, const Scalar& n_scale) {
  for (const auto& cls : g.classes)
    if (cls.multiplicity() % 2 != 0) return Scalar(0);
  // every class even, so n is even and N^{n/2} is an integer power
  Scalar numerator = 1;
  for (const auto& cls : g.classes) {
    Scalar sum = 0;
    for_each_perfect_matching(cls.multiplicity(), [&](const Matching& m) {
      Scalar term = 1;
      for (const auto& [p, q] : m.pairs())
        term *= traces.get(g.edges[static_cast<std::size_t>(cls.block[static_cast<std::size_t>(p)])].label,
                           g.edges[static_cast<std::size_t>(cls.block[static_cast<std::size_t>(q)])].label);
      sum += term;
    });
    if (cls.loop()) sum *= power(Scalar(2), cls.multiplicity() / 2);
    numerator *= sum;
  }
  std::map<int, int> occ;
  for (const auto& e : g.edges) {
    ++occ[e.first];
    ++occ[e.second];
  }
  Integer norm = 1;
  for (const auto& [site, c] : occ) norm *= double_factorial(c - 1);
  return numerator / (power(n_scale, g.n() / 2) * from_integer<Scalar>(norm));
}

template <class Scalar>
void SparseOperator<Scalar>::add(std::size_t row, std::size_t col, const Scalar& value) {
  rows_[row].push_back({col, value});
}

template <class Scalar>
void SparseOperator<Scalar>::compress() {
  for (auto& r : rows_) {
    std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
    std::vector<Entry> merged;
    for (auto& e : r) {
      if (!merged.empty() && merged.back().col == e.col)
        merged.back().value += e.value;
      else
        merged.push_back(std::move(e));
    }
    std::erase_if(merged, [](const Entry& e) { return e.value == 0; });
    r = std::move(merged);
  }
}

template <class Scalar>
std::vector<Scalar> SparseOperator<Scalar>::apply(const std::vector<Scalar>& f) const {
  if (f.size() != rows_.size()) throw DomainError("operator/vector dimension mismatch");
  std::vector<Scalar> out(rows_.size(), Scalar(0));
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (const auto& e : rows_[r]) out[r] += e.value * f[e.col];
  return out;
}

template <class Scalar>
std::size_t SparseOperator<Scalar>::nonzeros() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.size();
  return n;
}

template <class Scalar>
void SparseOperator<Scalar>::write_coordinates(std::ostream& os) const {
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (const auto& e : rows_[r]) {
      if constexpr (std::is_same_v<Scalar, Rational>)
        os << r << ' ' << e.col << ' ' << e.value.get_num() << ' ' << e.value.get_den() << '\n';
      else
        os << r << ' ' << e.col << ' ' << e.value << '\n';
    }
}

SparseOperator<double> to_double(const SparseOperator<Rational>& op) {
  SparseOperator<double> out(op.dim());
  for (std::size_t r = 0; r < op.dim(); ++r)
    for (const auto& e : op.row(r)) out.add(r, e.col, e.value.get_d());
  return out;
}

Eigen::MatrixXd to_dense(const SparseOperator<double>& op) {
  const auto n = static_cast<Eigen::Index>(op.dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t r = 0; r < op.dim(); ++r)
    for (const auto& e : op.row(r)) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e.col)) += e.value;
  return m;
}

double sup_norm(const SparseOperator<double>& op) {
  double best = 0.0;
  for (std::size_t r = 0; r < op.dim(); ++r) {
    double s = 0.0;
    for (const auto& e : op.row(r)) s += std::abs(e.value);
    best = std::max(best, s);
  }
  return best;
}

template <class Scalar>
RateTable<Scalar> RateTable<Scalar>::constant(int n_sites, const Scalar& c) {
  RateTable t;
  t.n_sites = n_sites;
  t.values.assign(static_cast<std::size_t>(n_sites * n_sites), c);
  return t;
}

namespace {

/// Shared assembly: `rate(src, dst)` returns {allowed, c} for the unordered pair.
template <class Scalar, class RateFn>
SparseOperator<Scalar> assemble(const StateSpace& space, RateFn&& rate) {
  const int n_sites = space.n_sites();
  const int len = 2 * space.n();
  SparseOperator<Scalar> op(space.size());
  for (std::size_t r = 0; r < space.size(); ++r) {
    const Configuration& x = space[r];
    const auto occ = occupations(x, n_sites);
    Scalar diag = 0;
    for (int a = 0; a < len; ++a) {
      for (int b = 0; b < len; ++b) {
        if (a == b) continue;
        const int xa = x[static_cast<std::size_t>(a)];
        const int xb = x[static_cast<std::size_t>(b)];
        if (xa == xb) {
          const int src = xa;
          const int n_src = occ[static_cast<std::size_t>(src)];
          if (n_src - 1 == 0) throw std::logic_error("m-move fired with n_src = 1");
          for (int dst = 0; dst < n_sites; ++dst) {
            if (dst == src) continue;
            const auto [allowed, c] = rate(src, dst);
            if (!allowed) continue;
            const Scalar coef = c * Scalar(occ[static_cast<std::size_t>(dst)] + 1) / Scalar(n_src - 1);
            op.add(r, space.index_of(apply_move_m(x, a, b, src, dst)), coef);
            diag -= coef;
          }
        } else {
          const auto [allowed, c] = rate(xa, xb);
          if (!allowed) continue;
          op.add(r, space.index_of(apply_move_s(x, a, b, xa, xb)), -c);
          diag += c;
        }
      }
    }
    op.add(r, r, diag);
  }
  op.compress();
  return op;
}

}  // namespace

template <class Scalar>
SparseOperator<Scalar> build_pair_generator(const StateSpace& space, int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= space.n_sites() || j >= space.n_sites())
    throw DomainError("pair generator needs distinct sites in range");
  return assemble<Scalar>(space, [&](int s, int t) {
    const bool hit = (s == i && t == j) || (s == j && t == i);
    return std::pair<bool, Scalar>(hit, Scalar(hit ? 1 : 0));
  });
}

template <class Scalar>
SparseOperator<Scalar> build_generator(const StateSpace& space, const RateTable<Scalar>& rates,
                                       const GeneratorOptions& options) {
  const int n_sites = space.n_sites();
  if (rates.n_sites != n_sites || rates.values.size() != static_cast<std::size_t>(n_sites * n_sites))
    throw DomainError("rate table does not match the state space");
  if (options.range_limit && *options.range_limit < 1) throw ConfigError("range limit must be >= 1");
  std::vector<bool> in_window(static_cast<std::size_t>(n_sites), !options.site_window.has_value());
  if (options.site_window)
    for (int s : *options.site_window) {
      if (s < 0 || s >= n_sites) throw DomainError("site window index out of range");
      in_window[static_cast<std::size_t>(s)] = true;
    }
  for (int i = 0; i < n_sites; ++i)
    for (int j = i + 1; j < n_sites; ++j)
      if (!(rates(i, j) == rates(j, i)) || rates(i, j) < 0) throw DomainError("rates must be symmetric and >= 0");
  return assemble<Scalar>(space, [&](int s, int t) {
    bool allowed = in_window[static_cast<std::size_t>(s)] && in_window[static_cast<std::size_t>(t)];
    if (options.range_limit) allowed = allowed && std::abs(s - t) <= *options.range_limit;
    return std::pair<bool, Scalar>(allowed, allowed ? rates(s, t) : Scalar(0));
  });
}

bool pi_symmetric(const StateSpace& space, const SparseOperator<Rational>& op) {
  std::vector<Integer> pi(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) pi[k] = pi_measure(space[k], space.n_sites());
  auto entry = [&](std::size_t r, std::size_t c) -> Rational {
    for (const auto& e : op.row(r))
      if (e.col == c) return e.value;
    return 0;
  };
  for (std::size_t r = 0; r < op.dim(); ++r)
    for (const auto& e : op.row(r))
      if (Rational(pi[r]) * e.value != Rational(pi[e.col]) * entry(e.col, r)) return false;
  return true;
}

Rational pi_inner(const StateSpace& space, const std::vector<Rational>& f, const std::vector<Rational>& g) {
  if (f.size() != space.size() || g.size() != space.size()) throw DomainError("function dimension mismatch");
  Rational s = 0;
  for (std::size_t k = 0; k < space.size(); ++k) s += Rational(pi_measure(space[k], space.n_sites())) * f[k] * g[k];
  return s;
}

bool KernelReport::pass() const {
  return std::all_of(pairs.begin(), pairs.end(), [](const PairResidual& p) { return p.residual_zero; });
}

KernelReport kernel_check(const StateSpace& space, const std::vector<Rational>& f) {
  if (f.size() != space.size()) throw DomainError("function dimension mismatch");
  KernelReport report{space.n_sites(), space.n(), {}};
  for (int i = 0; i < space.n_sites(); ++i)
    for (int j = i + 1; j < space.n_sites(); ++j) {
      const auto lf = build_pair_generator<Rational>(space, i, j).apply(f);
      PairResidual pr{i, j, true, 0, std::nullopt};
      for (std::size_t k = 0; k < lf.size(); ++k) {
        const Rational r = abs(lf[k]);
        if (r > pr.max_abs_residual) {
          pr.max_abs_residual = r;
          pr.worst = space[k];
        }
      }
      pr.residual_zero = pr.max_abs_residual == 0;
      report.pairs.push_back(std::move(pr));
    }
  return report;
}

std::vector<Rational> ansatz_values(const StateSpace& space, const TraceTable<Rational>& traces,
                                    const Rational& n_scale) {
  std::vector<int> labels(static_cast<std::size_t>(space.n()));
  for (int k = 0; k < space.n(); ++k) labels[static_cast<std::size_t>(k)] = k;
  std::vector<Rational> out;
  out.reserve(space.size());
  for (const auto& x : space.states()) out.push_back(ansatz_F(ConfigGraph::from(x, labels), traces, n_scale));
  return out;
}

TraceTable<Rational> random_trace_table(int n, std::uint64_t seed) {
  Engine rng = make_engine(seed, Stream::test_values);
  std::uniform_int_distribution<long> num(-50, 50);
  std::uniform_int_distribution<long> den(1, 20);
  TraceTable<Rational> t;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      Rational v(num(rng), den(rng));
      v.canonicalize();
      t.set(a, b, v);
    }
  return t;
}

bool stabilizes(const Matching& pi, const Configuration& x) {
  if (pi.size() != static_cast<int>(x.size())) throw DomainError("matching size differs from the configuration length");
  for (int a = 0; a < pi.size(); ++a)
    if (x[static_cast<std::size_t>(a)] != x[static_cast<std::size_t>(pi(a))]) return false;
  return true;
}

std::vector<Rational> chi_values(const StateSpace& space, const Matching& pi) {
  std::vector<Rational> out;
  out.reserve(space.size());
  for (const auto& x : space.states())
    out.push_back(stabilizes(pi, x) ? Rational(1, 1) / Rational(sqrt_pi(x, space.n_sites())) : Rational(0));
  return out;
}

ChiExpansion expand_F_in_chi(int n, const TraceTable<Rational>& traces) {
  if (n < 1) throw ConfigError("n must be >= 1");
  ChiExpansion ex;
  ex.n = n;
  for_each_perfect_matching(2 * n, [&](const Matching& m) {
    Rational coef = 1;
    for (int k = 0; k < n; ++k) {
      const int p = m(2 * k) / 2;
      const int q = m(2 * k + 1) / 2;
      if (p != q || p == k) return;
      if (k < p) coef *= traces.get(k, p);
    }
    ex.matchings.push_back(m);
    ex.coefficients.push_back(coef);
  });
  return ex;
}

std::vector<std::vector<std::pair<int, int>>> edge_stabilizers(const ConfigGraph& g, const ConfigGraph::EdgeClass& cls) {
  std::vector<std::vector<std::pair<int, int>>> out;
  const int m = cls.multiplicity();
  for_each_perfect_matching(m, [&](const Matching& sigma) {
    // orientation choices per edge pair: two for a loop, the site-matching one otherwise
    std::vector<std::vector<std::pair<int, int>>> partial{{}};
    for (const auto& [p, q] : sigma.pairs()) {
      const int k = cls.block[static_cast<std::size_t>(p)];
      const int kk = cls.block[static_cast<std::size_t>(q)];
      std::vector<std::vector<std::pair<int, int>>> choices;
      const std::vector<std::pair<int, int>> straight{{2 * k, 2 * kk}, {2 * k + 1, 2 * kk + 1}};
      const std::vector<std::pair<int, int>> crossed{{2 * k, 2 * kk + 1}, {2 * k + 1, 2 * kk}};
      if (cls.loop()) {
        choices = {straight, crossed};
      } else {
        const bool same = g.edges[static_cast<std::size_t>(k)].first == g.edges[static_cast<std::size_t>(kk)].first;
        choices = {same ? straight : crossed};
      }
      std::vector<std::vector<std::pair<int, int>>> next;
      for (const auto& base : partial)
        for (const auto& c : choices) {
          auto v = base;
          v.insert(v.end(), c.begin(), c.end());
          next.push_back(std::move(v));
        }
      partial = std::move(next);
    }
    for (auto& v : partial) out.push_back(std::move(v));
  });
  return out;
}

ChiCheckReport verify_chi_expansion(const StateSpace& space, const TraceTable<Rational>& traces,
                                    const Rational& n_scale) {
  const int n = space.n();
  const ChiExpansion ex = expand_F_in_chi(n, traces);
  const std::vector<Rational> direct = ansatz_values(space, traces, n_scale);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) labels[static_cast<std::size_t>(k)] = k;

  ChiCheckReport report;
  for (std::size_t s = 0; s < space.size(); ++s) {
    const Configuration& x = space[s];
    const ConfigGraph g = ConfigGraph::from(x, labels);
    auto fail = [&](bool& flag) {
      flag = false;
      if (!report.failure) report.failure = x;
    };

    Rational recon = 0;
    std::size_t stabilizing = 0;
    for (std::size_t k = 0; k < ex.matchings.size(); ++k)
      if (stabilizes(ex.matchings[k], x)) {
        recon += ex.coefficients[k];
        ++stabilizing;
      }
    if (n % 2 == 0) recon /= power(n_scale, n / 2) * Rational(sqrt_pi(x, space.n_sites()));
    if (recon != direct[s]) fail(report.reconstruction_exact);

    // 𝒢-Stab assembled block by block, independently of the expansion above
    std::vector<std::vector<std::pair<int, int>>> gstab{{}};
    for (const auto& cls : g.classes) {
      const auto block = edge_stabilizers(g, cls);
      if (block.empty() != (cls.multiplicity() % 2 != 0)) fail(report.block_counts_consistent);
      std::vector<std::vector<std::pair<int, int>>> next;
      for (const auto& base : gstab)
        for (const auto& b : block) {
          auto v = base;
          v.insert(v.end(), b.begin(), b.end());
          next.push_back(std::move(v));
        }
      gstab = std::move(next);
    }
    for (const auto& pairs : gstab)
      if (!stabilizes(Matching::from_pairs(pairs), x)) fail(report.gstab_in_stab);
    if (gstab.size() != stabilizing) fail(report.gstab_in_stab);
    ++report.states_checked;
  }
  return report;
}

SparseOperator<Rational> averaging_op(const StateSpace& space, const Configuration& center, int k) {
  if (k < 1) throw ConfigError("averaging range K must be >= 1");
  if (center.size() != static_cast<std::size_t>(2 * space.n())) throw DomainError("center has the wrong length");
  SparseOperator<Rational> op(space.size());
  for (std::size_t r = 0; r < space.size(); ++r) {
    long d = 0;
    for (std::size_t a = 0; a < center.size(); ++a) d += std::abs(space[r][a] - center[a]);
    // #{j in [K, 2K-1] : d <= j}
    const long count = std::clamp<long>(2L * k - d, 0L, static_cast<long>(k));
    Rational v(count, k);
    v.canonicalize();
    op.add(r, r, v);
  }
  op.compress();
  return op;
}

double flow_normalizer(const std::vector<double>& norm_sq, int n_dim) {
  if (n_dim < 1) throw DomainError("dimension must be positive");
  double r = 1.0;
  for (double v : norm_sq) {
    if (v < 0.0) throw DomainError("<A^2> must be >= 0");
    r *= std::sqrt(v / n_dim);
  }
  return r;
}

std::vector<double> pi_weights(const StateSpace& space) {
  std::vector<double> w;
  w.reserve(space.size());
  for (const auto& x : space.states()) w.push_back(pi_measure(x, space.n_sites()).get_d());
  return w;
}

namespace {

Eigen::VectorXd multiply(const SparseOperator<double>& op, const Eigen::VectorXd& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.size());
  for (std::size_t r = 0; r < op.dim(); ++r) {
    double s = 0.0;
    for (const auto& e : op.row(r)) s += e.value * g(static_cast<Eigen::Index>(e.col));
    out(static_cast<Eigen::Index>(r)) = s;
  }
  return out;
}

}  // namespace

std::vector<FlowCheckpoint> flow_evolve(const SparseOperator<double>& op, const Eigen::VectorXd& g0,
                                        const std::vector<double>& checkpoints, const FlowOptions& options) {
  if (static_cast<std::size_t>(g0.size()) != op.dim()) throw DomainError("initial data dimension mismatch");
  if (!options.weights.empty() && options.weights.size() != op.dim()) throw DomainError("weight vector dimension mismatch");
  for (std::size_t k = 0; k < checkpoints.size(); ++k)
    if (checkpoints[k] < 0.0 || (k > 0 && checkpoints[k] < checkpoints[k - 1]))
      throw ConfigError("checkpoints must be non-negative and non-decreasing");

  const double sup0 = g0.cwiseAbs().maxCoeff();
  auto record = [&](double t, Eigen::VectorXd g) {
    double pn = 0.0;
    for (Eigen::Index k = 0; k < g.size(); ++k)
      pn += (options.weights.empty() ? 1.0 : options.weights[static_cast<std::size_t>(k)]) * g(k) * g(k);
    const double sup = g.cwiseAbs().maxCoeff();
    return FlowCheckpoint{t, std::move(g), sup, std::sqrt(pn), sup <= sup0 * (1.0 + 1e-12) + 1e-300};
  };

  std::vector<FlowCheckpoint> out;
  const bool exact = options.method == FlowMethod::exact ||
                     (options.method == FlowMethod::automatic && op.dim() <= kExactFlowMaxDim);
  if (exact) {
    const Eigen::MatrixXd dense = to_dense(op);
    for (double t : checkpoints) {
      const Eigen::MatrixXd e = (dense * t).exp();
      out.push_back(record(t, e * g0));
    }
    return out;
  }

  if (!(options.dt > 0.0)) throw ConfigError("integrator step must be positive");
  if (options.dt * sup_norm(op) > 0.1) throw ConfigError("step size violates dt * ||op||_inf <= 0.1");
  Eigen::VectorXd g = g0;
  double t = 0.0;
  for (double target : checkpoints) {
    while (t < target) {
      const double h = std::min(options.dt, target - t);
      const Eigen::VectorXd k1 = multiply(op, g);
      const Eigen::VectorXd k2 = multiply(op, g + 0.5 * h * k1);
      const Eigen::VectorXd k3 = multiply(op, g + 0.5 * h * k2);
      const Eigen::VectorXd k4 = multiply(op, g + h * k3);
      g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = (target - t <= options.dt) ? target : t + h;
    }
    out.push_back(record(target, g));
  }
  return out;
}

template class TraceTable<double>;
template class TraceTable<Rational>;
template class SparseOperator<double>;
template class SparseOperator<Rational>;
template struct RateTable<double>;
template struct RateTable<Rational>;
template double ansatz_F(const ConfigGraph&, const TraceTable<double>&, const double&);
template Rational ansatz_F(const ConfigGraph&, const TraceTable<Rational>&, const Rational&);
template SparseOperator<double> build_pair_generator(const StateSpace&, int, int);
template SparseOperator<Rational> build_pair_generator(const StateSpace&, int, int);
template SparseOperator<double> build_generator(const StateSpace&, const RateTable<double>&, const GeneratorOptions&);
template SparseOperator<Rational> build_generator(const StateSpace&, const RateTable<Rational>&, const GeneratorOptions&);

}  // namespace olab
