#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "etc/ets.hpp"
#include "etc/graph.hpp"
#include "etc/mas_model.hpp"

namespace etc {

struct DisturbanceSpec {
  enum class Kind { Zero, Sequence, Random } kind = Kind::Zero;
  // Sequence: one nd x horizon matrix per agent (leader first).
  std::vector<Eigen::MatrixXd> sequence;
  // Random: entries uniform in [-bound, bound].
  double bound = 0.0;
  std::uint64_t seed = 0;
};

struct SimConfig {
  int horizon = 100;
  std::vector<Eigen::VectorXd> x0;  // leader first
  DisturbanceSpec disturbance;
  // eta held at zero: the static rule rho < 0
  bool static_rule = false;
};

struct SimTrace {
  int horizon = 0, h = 1;
  std::vector<Eigen::MatrixXd> x;  // n x (horizon + 1)
  std::vector<Eigen::MatrixXd> u;  // m x horizon
  std::vector<Eigen::MatrixXd> d;  // nd x horizon (nd may be 0)
  // agents x (horizon + 1); NaN off sampling instants. rho is the value after broadcasts.
  Eigen::MatrixXd eta, rho;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> broadcast;  // agents x (horizon + 1)

  int agents() const { return static_cast<int>(x.size()); }
  bool sampling(int t) const { return t % h == 0; }
};

// Per-agent evaluation of the dynamic trigger at multiples of h, zero-order hold in between.
SimTrace run_closed_loop(const std::vector<AgentModel>& models, const BlockGain& gains,
                         const EtsParams& ets, const DirectedGraph& g, const SimConfig& cfg);

// max_i |x_i(t) - x_0(t)| for t = 0..horizon.
Eigen::VectorXd consensus_error(const SimTrace& tr);

Eigen::VectorXi broadcast_counts(const SimTrace& tr, bool include_initial = false);

// Lifted error [x_1 - x_0; ...; x_N - x_0; x_0] at step t.
Eigen::VectorXd lifted_error(const SimTrace& tr, int t);

// sqrt(sum |z|^2 / sum |d|^2) with z = weight * lifted error (identity when absent).
double empirical_l2_gain(const SimTrace& tr,
                         const std::optional<Eigen::MatrixXd>& weight = std::nullopt);

struct DecreaseStep {
  int t = 0;             // sampling instant tau_v
  double eps_norm = 0.0;  // |eps(tau_v)|
  double margin = 0.0;    // W(tau_{v+1}) - W(tau_v)
};

// W = eps' P eps + h * sum_i eta_i at consecutive sampling instants.
std::vector<DecreaseStep> lyapunov_decrease_check(const SimTrace& tr, const Eigen::MatrixXd& P);

void write_trace_csv(std::ostream& os, const SimTrace& tr);
SimTrace read_trace_csv(std::istream& is);

}  // namespace etc
