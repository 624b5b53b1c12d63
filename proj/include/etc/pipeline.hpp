#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "etc/data.hpp"
#include "etc/ets.hpp"
#include "etc/graph.hpp"
#include "etc/lmi/solver.hpp"
#include "etc/lmi/theorems.hpp"
#include "etc/mas_model.hpp"
#include "etc/sim.hpp"

namespace etc {

struct AgentSpec {
  Eigen::MatrixXd A, B;
  bool continuous = true;
};

struct RunConfig {
  double Tk = 0.01;
  std::vector<AgentSpec> agents;  // leader first
  double noise_scale = 0.01;      // D_i = noise_scale * I_n, also B_d for the H-inf design
  Eigen::MatrixXd adjacency;

  double sigma0 = 0.02;
  std::map<std::pair<int, int>, double> sigma;
  Eigen::VectorXd theta, lambda, eta0;
  int h = 1;

  int rho = 40;
  double wbar = 1e-3;
  double u_lo = -1.0, u_hi = 1.0;
  std::uint64_t seed = 1;
  std::vector<Eigen::VectorXd> data_x0;  // defaults to the simulation initial states

  double eps_feas = 1e-6;
  double eps_D = 2.0;
  bool free_q = true;
  bool precondition = true;
  bool scale_leader_block = true;

  int horizon = 100;
  std::vector<Eigen::VectorXd> x0;
  DisturbanceSpec disturbance;

  // H-inf checks: bounded random disturbances from a zero initial state
  int hinf_horizon = 500;
  int hinf_runs = 10;
  double hinf_bound = 1.0;

  std::string out = "out";
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
// Four mass-spring-damper agents, leader plus three followers.
nlohmann::json example1_json();

std::vector<AgentModel> build_models(const RunConfig& c);
DirectedGraph build_graph(const RunConfig& c);
lmi::DesignParams design_params(const RunConfig& c);
EtsParams ets_params(const RunConfig& c, const std::vector<Eigen::MatrixXd>& Omega);
SimConfig sim_config(const RunConfig& c);

DataSet collect(const RunConfig& c);
// B_w is the lifted noise matrix.
ThetaAB theta_of(const RunConfig& c, const DataSet& ds);

lmi::SolverOptions solver_options(const RunConfig& c);

struct DesignRun {
  lmi::LmiProblem lp;
  lmi::Solution sol;
  std::optional<lmi::Design> design;  // recovered whenever G is invertible
  double seconds = 0.0;
  std::string note;
};

DesignRun design_model(const RunConfig& c);
DesignRun design_data(const RunConfig& c, const DataSet& ds);

struct HinfRun {
  DesignRun stage1, stage2;
  double gamma = 0.0;
  std::vector<std::pair<double, bool>> history;  // (gamma, feasible)
};

// Stage one: data-driven design for G. Stage two: fixed G, bisection on gamma to 1e-2
// relative width unless gamma is given.
HinfRun design_hinf(const RunConfig& c, const DataSet& ds, std::optional<double> gamma);

nlohmann::json design_to_json(const DesignRun& r, const std::string& method);

struct LoadedDesign {
  std::string method;
  std::string status;
  bool feasible = false;
  lmi::Design design;
};
LoadedDesign design_from_json(const nlohmann::json& j, const DirectedGraph& g);

nlohmann::json matrix_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd json_matrix(const nlohmann::json& j);

}  // namespace etc
