#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gal/common.hpp"
#include "gal/tensor.hpp"

namespace gal {

// Finite distribution over real support points.
struct DiscreteDist {
  std::vector<double> points;
  std::vector<double> probs;

  // Sizes match, no negative mass, total within 1e-12 of 1.
  void validate() const;
};

// Half L1 distance between distributions on a common support.
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);
double tv_distance(const DiscreteDist& p, const DiscreteDist& q);

// Best distinguishing advantage over every binary classifier on the support:
// max_S |p(S) - q(S)|, enumerated over all 2^n subsets (n <= 16).
double advantage_bruteforce(const std::vector<double>& p, const std::vector<double>& q);
double advantage_bruteforce(const DiscreteDist& p, const DiscreteDist& q);

// Transport distance between Bernoulli(p) and Bernoulli(q): |p - q|.
double w1_bernoulli(double p, double q);

// Exact optimal-transport cost between weighted point sets (supports <= 64),
// solved as a min-cost flow with successive shortest paths on masses scaled
// to integers. cost[i][j] is the unit cost from p-point i to q-point j.
double w1_transport(const std::vector<double>& p_probs, const std::vector<double>& q_probs,
                    const std::vector<std::vector<double>>& cost);
// Same, with |x - y| costs from the supports' coordinates.
double w1_discrete(const DiscreteDist& p, const DiscreteDist& q);

// Exact 1D transport between equal-size empirical samples: mean absolute
// difference of the sorted lists.
double w1_sorted_1d(std::vector<double> samples0, std::vector<double> samples1);

// Sliced estimate of the transport distance between the two attribute
// groups' embedding clouds: mean over random unit projections of the exact
// 1D distance between equal-size subsamples.
double estimate_w1_embeddings(const Tensor& embeddings, const std::vector<int>& labels,
                              int projections, Rng& rng);

// -x lg x - (1-x) lg(1-x), in bits.
double binary_entropy_bits(double x);

// H(A|Z) in bits from a joint table: rows index z, columns index a.
double conditional_entropy_bits(const std::vector<std::vector<double>>& joint);

// Calabro-style closed-form lower bound on the inverse binary entropy:
// returns s / (2 lg(6/s)) for s in (0, 1].
double inv_entropy_lower_bound(double s);

// A small discrete world where every bound quantity is exactly computable:
// Y and A are binary with an explicit joint table, Z has finite real support
// with per-attribute conditionals, and Y is independent of Z given A.
struct BoundInstance {
  std::vector<double> z_support;       // points, all within [-radius, radius]
  std::vector<double> z_given_a0;      // p(z | A = 0)
  std::vector<double> z_given_a1;      // p(z | A = 1)
  std::array<std::array<double, 2>, 2> joint_ya{};  // joint_ya[y][a] = p(Y=y, A=a)
  double lipschitz = 1.0;              // classifier Lipschitz budget C
  double radius = 1.0;                 // feature-space radius bound R

  void validate() const;
  double prob_a0() const;                       // alpha
  double prob_y1_given(int a) const;
  double delta() const;                         // |Pr(Y=1|A=0) - Pr(Y=1|A=1)|
  double entropy_bits() const;                  // H(A|Z)
  double w1() const;                            // W1(Z|A=0, Z|A=1)
  std::vector<std::vector<double>> joint_za() const;  // rows z, cols a
};

BoundInstance random_bound_instance(Rng& rng, std::size_t support_size);

// A random soft classifier on the instance support obeying the Lipschitz
// budget: h(z) = clamp(b + w z) with |w| <= C, squeezed into (0, 1) so
// cross-entropy stays finite.
std::vector<double> random_lipschitz_classifier(const BoundInstance& inst, Rng& rng);

// Accuracy/obfuscation trade-off check: the summed conditional cross-entropy
// errors of h must dominate delta - C*W1, which must dominate
// delta - 2*R*C*Adv. `h` gives the classifier's value on each support point.
struct TradeoffReport {
  double eps_a0 = 0.0;       // conditional cross-entropy error given A = 0
  double eps_a1 = 0.0;
  double lhs = 0.0;          // eps_a0 + eps_a1
  double rhs_w1 = 0.0;       // delta - C * W1
  double rhs_adv = 0.0;      // delta - 2 * R * C * Adv
  bool holds = false;
  double slack_w1 = 0.0;     // lhs - rhs_w1
  double slack_chain = 0.0;  // rhs_w1 - rhs_adv
};
TradeoffReport check_tradeoff_bound(const BoundInstance& inst, const std::vector<double>& h);

// Minimum misclassification probability over all 2^n deterministic
// adversaries f: support -> {0, 1}; mass0/mass1 are the joint masses
// p(z, A=0) and p(z, A=1).
double min_error_exhaustive(const std::vector<double>& mass0, const std::vector<double>& mass1);

// Minimum misclassification probability over soft classifiers whose outputs
// live on the grid {0, 1/(levels-1), ..., 1} under the pairwise constraint
// |f_i - f_j| <= C d(z_i, z_j) (floored to grid steps). Solved exactly as a
// single min-cut over per-level indicator chains.
double min_error_lipschitz_grid(const std::vector<double>& points,
                                const std::vector<double>& mass0,
                                const std::vector<double>& mass1, double lipschitz, int levels);

// Leakage floor check: (1) every deterministic adversary errs at least
// H*/(2 lg(6/H*)); (2) every C-Lipschitz adversary errs at least
// min{alpha, 1-alpha} (1 - C W1*).
struct LeakageReport {
  double min_error_all = 0.0;
  double bound_entropy = 0.0;
  double min_error_lipschitz = 0.0;
  double bound_w1 = 0.0;
  bool holds = false;
  double slack_entropy = 0.0;
  double slack_w1 = 0.0;
};
LeakageReport check_leakage_bound(const BoundInstance& inst);

// Identity check: 1 - advantage equals the least achievable sum of type-I
// and type-II errors over all binary classifiers (within 1e-12).
bool check_error_decomposition(const DiscreteDist& p, const DiscreteDist& q);

// Pushforward of a distribution under a deterministic index map; the image
// distribution lives on new_points with mass accumulated per image index.
DiscreteDist pushforward(const DiscreteDist& dist, const std::vector<int>& image_index,
                         const std::vector<double>& new_points);

// Dirichlet(1,...,1) sample: normalized exponentials.
std::vector<double> random_simplex(Rng& rng, std::size_t size);

}  // namespace gal
