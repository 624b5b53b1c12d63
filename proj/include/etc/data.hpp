#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "etc/mas_model.hpp"

namespace etc {

struct DataSet {
  std::vector<Eigen::MatrixXd> states;  // agent i: n x (rho + 1)
  std::vector<Eigen::MatrixXd> inputs;  // agent i: m x rho
  int rho = 0;

  int agents() const { return static_cast<int>(states.size()); }
};

struct DataMatrices {
  Eigen::MatrixXd E_plus, E, U;
};

struct InputPolicy {
  double lo = -1.0, hi = 1.0;
};

struct NoisePolicy {
  double wbar = 0.0;  // bound on the stacked noise vector
};

struct NoiseMultiplier {
  Eigen::VectorXd q;
  double wbar = 0.0;
  int nw_total = 0;
  bool free = false;

  int rho() const { return static_cast<int>(q.size()); }
  Eigen::MatrixXd Qd() const;
};

// Theta = sum_T q_T (-c_T c_T^T + wbar^2 b b^T) where c_T = [-e_T; -u_T; e+_T] and
// b = [0; 0; B_w]. Rows ordered [eps (L); u (Lm); eps+ (L)].
struct ThetaAB {
  Eigen::MatrixXd Theta;  // evaluated at the multiplier's q
  Eigen::MatrixXd C;      // columns c_T
  Eigen::MatrixXd Bw;     // [0; 0; B_w]
  double wbar = 0.0;
  int L = 0, Lm = 0;

  int dim() const { return static_cast<int>(Theta.rows()); }
  Eigen::MatrixXd at(const Eigen::VectorXd& q) const;
};

struct Membership {
  bool member = false;
  double min_eig = 0.0;
};

DataSet collect_trajectory(const std::vector<AgentModel>& models, const InputPolicy& in,
                           const NoisePolicy& noise, int rho, std::uint64_t seed,
                           const std::vector<Eigen::VectorXd>& x0);

DataMatrices build_data_matrices(const DataSet& ds);

NoiseMultiplier build_noise_multiplier(int rho, double wbar,
                                       const std::optional<Eigen::VectorXd>& q, int nw_total);

ThetaAB build_theta_AB(const DataMatrices& dm, const Eigen::MatrixXd& Bw,
                       const NoiseMultiplier& nm);

Membership check_membership(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const ThetaAB& theta, double tol = 1e-8);

// Smallest over largest singular value of [E; U].
double excitation_ratio(const DataMatrices& dm);

void write_dataset_csv(std::ostream& os, const DataSet& ds);
DataSet read_dataset_csv(std::istream& is);

}  // namespace etc
