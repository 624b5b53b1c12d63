#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "etc/data.hpp"
#include "etc/graph.hpp"
#include "etc/mas_model.hpp"

namespace fixtures {

inline Eigen::MatrixXd randn(std::mt19937_64& rng, int r, int c, double s = 1.0) {
  std::normal_distribution<double> nd(0.0, s);
  Eigen::MatrixXd M(r, c);
  for (auto& v : M.reshaped()) v = nd(rng);
  return M;
}

// Leader 0 -> 1 -> 2 -> ... chain.
inline etc::DirectedGraph chain(int agents) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(agents, agents);
  for (int i = 1; i < agents; ++i) c(i, i - 1) = 1;
  return etc::DirectedGraph(c);
}

inline etc::AgentModel agent(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double d = 0.01) {
  etc::AgentModel a;
  a.A = A;
  a.B = B;
  a.D = d * Eigen::MatrixXd::Identity(A.rows(), A.rows());
  return a;
}

// Lightly perturbed rotations with random inputs, n = 2, m = 1.
inline std::vector<etc::AgentModel> random_agents(std::mt19937_64& rng, int agents) {
  std::vector<etc::AgentModel> out;
  Eigen::MatrixXd A0(2, 2);
  A0 << 1, 0.1, -0.1, 1;
  for (int i = 0; i < agents; ++i)
    out.push_back(agent(A0 + randn(rng, 2, 2, 0.05), randn(rng, 2, 1)));
  return out;
}

inline std::vector<Eigen::VectorXd> random_states(std::mt19937_64& rng, int agents, int n) {
  std::vector<Eigen::VectorXd> x;
  for (int i = 0; i < agents; ++i) x.push_back(randn(rng, n, 1));
  return x;
}

// Lifted noise matrix and true [A B] of a model set.
struct Lifted {
  etc::LiftedSystem sys;
};

inline etc::ThetaAB theta(const std::vector<etc::AgentModel>& models, const etc::DirectedGraph& g,
                          const etc::DataSet& ds, double wbar) {
  auto sys = etc::lift_error_system(models, g);
  auto dm = etc::build_data_matrices(ds);
  auto nm = etc::build_noise_multiplier(ds.rho, wbar, std::nullopt, static_cast<int>(sys.D.cols()));
  return etc::build_theta_AB(dm, sys.D, nm);
}

// Explicit noise reconstruction: least-norm W solving E+ - A E - B U = B_w W, then the
// bound W diag(q) W' <= sum(q) wbar^2 I. Returns the bound margin, -inf when no W exists.
inline double noise_oracle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const etc::DataMatrices& dm, const Eigen::MatrixXd& Bw,
                           const Eigen::VectorXd& q, double wbar) {
  Eigen::MatrixXd R = dm.E_plus - A * dm.E - B * dm.U;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Bw);
  Eigen::MatrixXd W = cod.solve(R);
  if ((Bw * W - R).norm() > 1e-9 * (1.0 + R.norm())) return -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd S = q.sum() * wbar * wbar * Eigen::MatrixXd::Identity(W.rows(), W.rows()) -
                      W * q.asDiagonal() * W.transpose();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace fixtures
