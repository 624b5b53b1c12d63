#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "etc/graph.hpp"

namespace etc {

struct EtsParams {
  double sigma0 = 0.02;
  std::map<std::pair<int, int>, double> sigma;  // (i, j): i listens to j
  Eigen::VectorXd theta, lambda;                // per agent, leader first
  std::vector<Eigen::MatrixXd> Omega;
  int h = 1;
  Eigen::VectorXd eta0;

  int agents() const { return static_cast<int>(Omega.size()); }
};

struct EtsState {
  double eta = 0.0;
  Eigen::VectorXd last_broadcast;
  int last_broadcast_time = -1;
  int broadcast_count = 0;
};

struct Violation {
  int agent = -1;  // -1 when not tied to an agent
  std::string what;
};

// Never throws.
std::vector<Violation> validate_params(const EtsParams& p, const DirectedGraph& g);

// Leader (i = 0): sigma0 * xh0' W xh0 - e0' W e0, e0 = current - xh0.
// Follower: sum_j sigma_ij (xh_i - xh_j)' W_i (xh_i - xh_j) - e_i' W_i e_i over neighbors j.
double compute_rho(int i, const Eigen::VectorXd& current,
                   const std::optional<Eigen::VectorXd>& own_last,
                   const std::map<int, Eigen::VectorXd>& neighbor_last, const EtsParams& p,
                   const DirectedGraph& g);

inline double update_eta(double eta, double rho, double lambda) {
  return (1.0 - lambda) * eta + rho;
}

inline bool check_trigger(double eta, double rho, double theta) { return eta + theta * rho < 0.0; }

}  // namespace etc
