#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "etc/lmi/affine.hpp"

namespace etc::lmi {

enum class Status { Feasible, Infeasible, NumericalFailure };

const char* status_name(Status s);

struct SolverOptions {
  double eps_feas = 1e-6;     // strict blocks must reach eps_feas * dim
  double box = 1e4;           // |scaled atom| <= box
  int max_iter = 120;
  double tol = 1e-8;          // relative gap and infeasibility for convergence
  // Stop as soon as the verified point is certified; keeps solves short in bisections.
  bool stop_when_certified = false;
  bool verbose = false;
};

// Reads ETC_SOLVER_TOL when set.
SolverOptions default_options();

struct BlockReport {
  std::string label;
  Kind kind;
  int dim = 0;
  double margin = 0.0;   // NegDef: -lambda_max, PosDef/Psd: lambda_min, NonNeg: min entry
  double required = 0.0;
  bool ok = false;
};

struct Solution {
  Status status = Status::NumericalFailure;
  Eigen::VectorXd x;  // atom values in original units
  double t = 0.0;     // solver margin in scaled units
  int iterations = 0;
  double primal_infeas = 0.0, dual_infeas = 0.0, rel_gap = 0.0;
  double rescale = 1.0;  // homogeneous rescaling applied to reach the required margins
  std::vector<BlockReport> blocks;
  std::string message;

  bool feasible() const { return status == Status::Feasible; }
  double min_strict_margin() const;
};

// Maximizes a common margin t over the strict blocks inside a box on the scaled atoms,
// then verifies every block at the returned point.
Solution solve_feasibility(const Problem& p, const SolverOptions& opt = default_options());

// Block margins of p at x.
std::vector<BlockReport> verify(const Problem& p, const Eigen::VectorXd& x, double eps_feas);

}  // namespace etc::lmi
