#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "etc/data.hpp"
#include "etc/graph.hpp"
#include "etc/lmi/affine.hpp"
#include "etc/lmi/solver.hpp"
#include "etc/mas_model.hpp"

namespace etc::lmi {

struct Dims {
  int N = 0, n = 0, m = 0;
  int L() const { return (N + 1) * n; }
  int Lm() const { return (N + 1) * m; }
};

Dims dims_of(const LiftedSystem& s);

// H_i picks block i (1-based) of xi = [e(t); e(t+1); e(tau_v); e(tau_v+1); e(t_k)].
struct Selectors {
  std::array<Eigen::MatrixXd, 5> H;
  const Eigen::MatrixXd& operator[](int i) const { return H.at(i - 1); }
};
Selectors selectors(int L);

struct DesignParams {
  double sigma0 = 0.02;
  std::map<std::pair<int, int>, double> sigma;  // follower edges (i, j)
  Eigen::VectorXd lambda, theta;                // per agent 0..N
  double h_lo = 1.0, h_hi = 1.0;
  double eps_D = 2.0;
  bool free_q = true;
  // sigma_0 * Omega_0 in the leader block of Omega_a; false puts Omega_0 there.
  bool scale_leader_block = true;
  // Exact congruences on the data LMIs (centering, whitening); off gives the verbatim form.
  bool precondition = true;
};

// Throws LambdaThetaViolation or SigmaPatternMismatch.
void validate_design_params(const DesignParams& p, const DirectedGraph& g);

struct CoreVars {
  VarId P, R1, R2, S, M1, M2;
};
CoreVars add_core_vars(Problem& p, int L);

struct XiBlocks {
  Expr Xi0, Xi1, Xi2;
};
XiBlocks build_xi_blocks(const Problem& p, const CoreVars& v, const Selectors& H);

struct EtsWeights {
  Expr Oa, Ob;
};
// Om[i] is the n x n weight of agent i (0 = leader).
EtsWeights build_ets_weights(const std::vector<Expr>& Om, const DesignParams& prm,
                             const DirectedGraph& g);
Expr build_trigger_block(const EtsWeights& w, const Selectors& H);

// Numeric Omega_a, Omega_b.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> ets_weight_matrices(
    const std::vector<Eigen::MatrixXd>& Om, const DesignParams& prm, const DirectedGraph& g);

enum class Theorem { Analysis = 1, ModelDesign = 2, DataDesign = 3, HinfDesign = 4 };

struct LmiProblem {
  Problem prob;
  Theorem theorem = Theorem::Analysis;
  Dims dims;
  DesignParams params;
  std::vector<std::pair<int, int>> edges;
  CoreVars core;
  std::optional<VarId> F, G, Kc, Qd, gscale;
  std::vector<VarId> Om;
  Eigen::MatrixXd G_fixed;  // H-inf stage two: G = gscale * G_fixed
  double gamma = 0.0;
};

LmiProblem assemble_theorem1(const LiftedSystem& sys, const BlockGain& K,
                             const std::vector<Eigen::MatrixXd>& Om, const DesignParams& prm,
                             const DirectedGraph& g);
LmiProblem assemble_theorem2(const LiftedSystem& sys, const DesignParams& prm,
                             const DirectedGraph& g);
LmiProblem assemble_theorem3(const ThetaAB& theta, const Dims& d, const DesignParams& prm,
                             const DirectedGraph& g);
// Stage two of the H-infinity design; G_fixed comes from a data-based solution.
LmiProblem assemble_theorem4(const ThetaAB& theta, const Dims& d, const Eigen::MatrixXd& Bd,
                             double gamma, const std::optional<Eigen::MatrixXd>& G_fixed,
                             const DesignParams& prm, const DirectedGraph& g);

// Certificate in the original error coordinates (analysis variables).
struct Certificate {
  Eigen::MatrixXd P, R1, R2, S, M1, M2, F;
};

struct Design {
  Theorem theorem = Theorem::ModelDesign;
  BlockGain gain;
  std::vector<Eigen::MatrixXd> Omega;  // per agent, original coordinates
  Eigen::MatrixXd Omega_a, Omega_b;
  Eigen::MatrixXd G;
  Certificate cert;
  Eigen::VectorXd q;
  double gamma = 0.0;
};

// Analysis check of a recovered design. The trigger is unchanged when every Omega_i (and
// eta) is scaled by the same factor, so the weights enter as kappa * Omega_i with a scalar
// kappa > 0 left to the solver.
LmiProblem assemble_analysis(const LiftedSystem& sys, const Design& d, const DesignParams& prm,
                             const DirectedGraph& g);

// K = Kc G^-1, Omega_i = G_i^-T Omegabar_i G_i^-1. Throws SingularG.
Design recover_design(const LmiProblem& lp, const Solution& sol, const DirectedGraph& g);

}  // namespace etc::lmi
