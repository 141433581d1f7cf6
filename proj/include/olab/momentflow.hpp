#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <gmpxx.h>
#include <Eigen/Dense>

#include "olab/matching.hpp"

namespace olab {

using Rational = mpq_class;
using Integer = mpz_class;

/// Particle configuration x in [N_sites]^{2n}. Sites are 0-based here.
using Configuration = std::vector<int>;

std::vector<int> occupations(const Configuration& x, int n_sites);
bool in_lambda(const Configuration& x, int n_sites);

/// |Λ^n| = 2^{-N} sum_k C(N,k) (N - 2k)^{2n}
Integer lambda_cardinality(int n_sites, int n);

inline constexpr std::size_t kStateBudget = 1'000'000;

/// Lexicographically ordered enumeration of Λ^n with a reverse lookup.
class StateSpace {
 public:
  StateSpace(int n_sites, int n, std::size_t budget = kStateBudget);

  int n_sites() const { return n_sites_; }
  int n() const { return n_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<Configuration>& states() const { return states_; }
  const Configuration& operator[](std::size_t k) const { return states_[k]; }
  /// Throws DomainError when x is not in the space.
  std::size_t index_of(const Configuration& x) const;

 private:
  std::uint64_t key(const Configuration& x) const;

  int n_sites_;
  int n_;
  std::vector<Configuration> states_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Pruned depth-first enumeration in lexicographic order; ResourceError if |Λ^n| exceeds the budget.
std::vector<Configuration> enumerate_configs(int n_sites, int n, std::size_t budget = kStateBudget);

/// k!! for odd k >= -1
Integer double_factorial(int k);
/// π(x) = prod_i [(n_i - 1)!!]^2
Integer pi_measure(const Configuration& x, int n_sites);
/// sqrt(π(x)) = prod_i (n_i - 1)!!
Integer sqrt_pi(const Configuration& x, int n_sites);

/// m^{ij}_{ab}: moves the pair (a, b) from site i to site j when both sit at i.
Configuration apply_move_m(const Configuration& x, int a, int b, int i, int j);
/// s^{ij}_{ab}: sends particle a from i to j and b from j to i when x_a = i, x_b = j.
Configuration apply_move_s(const Configuration& x, int a, int b, int i, int j);

/// Edge e_k = {x_{2k}, x_{2k+1}} carrying observable label A_k. Edges with the same
/// unordered site pair form one class; its block lists the edge indices.
struct ConfigGraph {
  struct Edge {
    int first;
    int second;
    int label;
    bool loop() const { return first == second; }
  };
  struct EdgeClass {
    int low;
    int high;
    std::vector<int> block;
    bool loop() const { return low == high; }
    int multiplicity() const { return static_cast<int>(block.size()); }
  };

  std::vector<Edge> edges;
  std::vector<EdgeClass> classes;

  static ConfigGraph from(const Configuration& x, const std::vector<int>& labels);
  Configuration flatten() const;
  int n() const { return static_cast<int>(edges.size()); }
};

/// Symmetric table of <A_a A_b> keyed by observable label.
template <class Scalar>
class TraceTable {
 public:
  void set(int a, int b, Scalar value);
  const Scalar& get(int a, int b) const;
  bool has(int a, int b) const;

 private:
  std::map<std::pair<int, int>, Scalar> values_;
};

/// F(x) = [N^{n/2} prod_i (n_i - 1)!!]^{-1} prod_{classes} 2^{(n(e)/2) 1_loop} sum_{PM[n(e)]} prod <A A>.
/// `n_scale` is N; odd-multiplicity classes make F vanish.
template <class Scalar>
Scalar ansatz_F(const ConfigGraph& g, const TraceTable<Scalar>& traces, const Scalar& n_scale);

/// Sparse row-major operator indexed by a StateSpace.
template <class Scalar>
class SparseOperator {
 public:
  struct Entry {
    std::size_t col;
    Scalar value;
  };

  explicit SparseOperator(std::size_t dim = 0) : rows_(dim) {}

  std::size_t dim() const { return rows_.size(); }
  void add(std::size_t row, std::size_t col, const Scalar& value);
  /// Merges duplicate columns and drops zeros; call once after assembly.
  void compress();
  const std::vector<Entry>& row(std::size_t r) const { return rows_[r]; }
  std::vector<Scalar> apply(const std::vector<Scalar>& f) const;
  std::size_t nonzeros() const;
  /// Coordinate-list text: "row col numerator denominator" (Rational) or "row col value" (double).
  void write_coordinates(std::ostream& os) const;

 private:
  std::vector<std::vector<Entry>> rows_;
};

SparseOperator<double> to_double(const SparseOperator<Rational>& op);
Eigen::MatrixXd to_dense(const SparseOperator<double>& op);
/// max row sum of |entries|
double sup_norm(const SparseOperator<double>& op);

/// Symmetric jump rates c_ij on n_sites sites (diagonal unused).
template <class Scalar>
struct RateTable {
  int n_sites = 0;
  std::vector<Scalar> values;

  static RateTable constant(int n_sites, const Scalar& c);
  Scalar& operator()(int i, int j) { return values[static_cast<std::size_t>(i * n_sites + j)]; }
  const Scalar& operator()(int i, int j) const { return values[static_cast<std::size_t>(i * n_sites + j)]; }
};

struct GeneratorOptions {
  /// keep only pairs with |i - j| <= range_limit
  std::optional<int> range_limit;
  /// keep only pairs with both sites in the window
  std::optional<std::vector<int>> site_window;
};

/// L_ij = M_ij - E_ij. M sums over ordered pairs a != b with coefficients
/// (n_j + 1)/(n_i - 1) for i -> j and (n_i + 1)/(n_j - 1) for j -> i. E sums over
/// ordered pairs a != b and exchanges whenever {x_a, x_b} = {i, j}, so each unordered
/// swap carries weight 2; only this weighting keeps F and χ_Π in the kernel.
template <class Scalar>
SparseOperator<Scalar> build_pair_generator(const StateSpace& space, int i, int j);

/// sum_{allowed i<j} c_ij L_ij
template <class Scalar>
SparseOperator<Scalar> build_generator(const StateSpace& space, const RateTable<Scalar>& rates,
                                       const GeneratorOptions& options = {});

/// π(x) L(x, y) = π(y) L(y, x) for every entry, which is π-self-adjointness on all f, g.
bool pi_symmetric(const StateSpace& space, const SparseOperator<Rational>& op);
/// sum_x π(x) f(x) g(x)
Rational pi_inner(const StateSpace& space, const std::vector<Rational>& f, const std::vector<Rational>& g);

struct PairResidual {
  int i;
  int j;
  bool residual_zero;
  Rational max_abs_residual;
  std::optional<Configuration> worst;
};

struct KernelReport {
  int n_sites = 0;
  int n = 0;
  std::vector<PairResidual> pairs;
  bool pass() const;
};

/// Checks L_ij f = 0 exactly for every pair i < j separately.
KernelReport kernel_check(const StateSpace& space, const std::vector<Rational>& f);

/// F on every state for edge labels 0..n-1 and the given trace values.
std::vector<Rational> ansatz_values(const StateSpace& space, const TraceTable<Rational>& traces,
                                    const Rational& n_scale);

/// Random trace table for labels 0..n-1 with rational entries p/q, |p| <= 50, 1 <= q <= 20.
TraceTable<Rational> random_trace_table(int n, std::uint64_t seed);

/// Π ∈ Stab(x) iff x_a = x_{Π(a)} for every a.
bool stabilizes(const Matching& pi, const Configuration& x);
/// χ_Π(x) = 1_{Π∈Stab(x)} / sqrt(π(x))
std::vector<Rational> chi_values(const StateSpace& space, const Matching& pi);

/// F = N^{-n/2} sum_Π c_Π χ_Π with x-independent coefficients, supported on matchings
/// that send each edge onto a different edge (the edge-preserving matchings).
struct ChiExpansion {
  int n = 0;
  std::vector<Matching> matchings;
  std::vector<Rational> coefficients;
};

/// Edge-preserving matchings of the 2n particle slots and their trace weights.
ChiExpansion expand_F_in_chi(int n, const TraceTable<Rational>& traces);

struct ChiCheckReport {
  std::size_t states_checked = 0;
  bool reconstruction_exact = true;
  bool gstab_in_stab = true;
  /// ℰ-Stab(B_e) is non-empty exactly when n(e) is even, for every block seen.
  bool block_counts_consistent = true;
  std::optional<Configuration> failure;
  bool pass() const { return reconstruction_exact && gstab_in_stab && block_counts_consistent; }
};

/// ℰ-Stab(B_e) built from the block structure alone: an edge pairing of the block plus
/// an orientation per pair (two for loops, the site-matching one otherwise). Each
/// element is returned as the list of slot pairs it induces.
std::vector<std::vector<std::pair<int, int>>> edge_stabilizers(const ConfigGraph& g, const ConfigGraph::EdgeClass& cls);

/// Compares the χ expansion with ansatz_F on every state and checks that every
/// block-built 𝒢-Stab element stabilizes x.
ChiCheckReport verify_chi_expansion(const StateSpace& space, const TraceTable<Rational>& traces,
                                    const Rational& n_scale);

/// Av(x; K, y): (1/K) #{j in [K, 2K-1] : ||x - y||_1 <= j} on the diagonal.
SparseOperator<Rational> averaging_op(const StateSpace& space, const Configuration& center, int k);

/// Φ_A = prod_k sqrt(<A_k^2> / N)
double flow_normalizer(const std::vector<double>& norm_sq, int n_dim);

enum class FlowMethod { automatic, exact, rk4 };

struct FlowOptions {
  FlowMethod method = FlowMethod::automatic;
  double dt = 1e-3;
  /// π weights for the π-norm; empty means unit weights
  std::vector<double> weights;
};

inline constexpr std::size_t kExactFlowMaxDim = 2000;

struct FlowCheckpoint {
  double time;
  Eigen::VectorXd values;
  double sup_norm;
  double pi_norm;
  /// ||g_t||_inf <= ||g_0||_inf up to 1e-12 relative
  bool contraction;
};

/// g_t = exp(t op) g0 at each checkpoint: matrix exponential for dim <= 2000 (or when
/// requested), otherwise classical RK4 with dt * ||op||_inf <= 0.1.
std::vector<FlowCheckpoint> flow_evolve(const SparseOperator<double>& op, const Eigen::VectorXd& g0,
                                        const std::vector<double>& checkpoints, const FlowOptions& options = {});

std::vector<double> pi_weights(const StateSpace& space);

}  // namespace olab
