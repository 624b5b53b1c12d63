#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <unsupported/Eigen/MatrixFunctions>
#include <utility>
#include <vector>

#include "etc/error.hpp"
#include "etc/graph.hpp"

namespace etc {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct AgentModelT {
  MatX<Scalar> A, B, D;
  MatX<Scalar> Bd;  // may be empty

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int nw() const { return static_cast<int>(D.cols()); }
  int nd() const { return static_cast<int>(Bd.cols()); }
};
using AgentModel = AgentModelT<double>;

template <typename Scalar>
struct LiftedSystemT {
  MatX<Scalar> A, B, D, Bd;
  int N = 0, n = 0, m = 0, nw = 0, nd = 0;

  int L() const { return (N + 1) * n; }
  int Lm() const { return (N + 1) * m; }
};
using LiftedSystem = LiftedSystemT<double>;

struct BlockGain {
  Eigen::MatrixXd K;
  Eigen::MatrixXd K0;
  std::map<std::pair<int, int>, Eigen::MatrixXd> pair;
};

// Zero-order hold. A = exp(Ac T), B = top-right block of exp([[Ac, Bc], [0, 0]] T).
template <typename DA, typename DB>
std::pair<MatX<typename DA::Scalar>, MatX<typename DA::Scalar>> discretize(
    const Eigen::MatrixBase<DA>& Ac, const Eigen::MatrixBase<DB>& Bc, double Tk) {
  using S = typename DA::Scalar;
  if (!(Tk > 0)) throw Error(Errc::NonFinite, "time step must be positive");
  if (!Ac.allFinite() || !Bc.allFinite()) throw Error(Errc::NonFinite, "non-finite model entry");
  if (Ac.rows() != Ac.cols() || Bc.rows() != Ac.rows())
    throw Error(Errc::DimensionMismatch, "discretize: A must be square, B must match");
  const Eigen::Index n = Ac.rows(), m = Bc.cols();
  MatX<S> aug = MatX<S>::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = Ac * S(Tk);
  aug.topRightCorner(n, m) = Bc * S(Tk);
  MatX<S> e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

// Continuous mass-spring-damper: f spring, phi mass, varphi damping.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> mass_spring(double f, double phi,
                                                               double varphi) {
  Eigen::MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, -f / phi, -varphi / phi;
  B << 0, 1 / phi;
  return {A, B};
}

// Block pattern shared by B, D, Bd: diag(X_1..X_N) with -X_0 in the last block column,
// X_0 in the bottom-right corner.
template <typename Scalar>
MatX<Scalar> lift_input_blocks(const std::vector<MatX<Scalar>>& X) {
  const int N = static_cast<int>(X.size()) - 1;
  const auto n = X[0].rows(), r = X[0].cols();
  MatX<Scalar> out = MatX<Scalar>::Zero((N + 1) * n, (N + 1) * r);
  for (int i = 1; i <= N; ++i) {
    if (X[i].rows() != n || X[i].cols() != r)
      throw Error(Errc::DimensionMismatch, "agent block sizes differ");
    out.block((i - 1) * n, (i - 1) * r, n, r) = X[i];
    out.block((i - 1) * n, N * r, n, r) = -X[0];
  }
  out.block(N * n, N * r, n, r) = X[0];
  return out;
}

template <typename Scalar>
LiftedSystemT<Scalar> lift_error_system(const std::vector<AgentModelT<Scalar>>& models,
                                        const DirectedGraph& g) {
  if (models.empty()) throw Error(Errc::DimensionMismatch, "no agents");
  if (static_cast<int>(models.size()) != g.size())
    throw Error(Errc::DimensionMismatch, "agent count differs from graph size");
  const int N = static_cast<int>(models.size()) - 1;
  const auto& m0 = models[0];
  const int n = m0.n(), m = m0.m(), nw = m0.nw(), nd = m0.nd();
  std::vector<MatX<Scalar>> As, Bs, Ds, Bds;
  for (const auto& a : models) {
    if (a.A.rows() != n || a.A.cols() != n || a.B.rows() != n || a.B.cols() != m ||
        a.D.rows() != n || a.D.cols() != nw || a.nd() != nd || (nd > 0 && a.Bd.rows() != n))
      throw Error(Errc::DimensionMismatch, "agents must share n, m, n_w, n_d");
    Bs.push_back(a.B);
    Ds.push_back(a.D);
    Bds.push_back(nd > 0 ? a.Bd : MatX<Scalar>::Zero(n, 0));
  }
  LiftedSystemT<Scalar> s;
  s.N = N;
  s.n = n;
  s.m = m;
  s.nw = nw;
  s.nd = nd;
  s.A = MatX<Scalar>::Zero((N + 1) * n, (N + 1) * n);
  for (int i = 1; i <= N; ++i) {
    s.A.block((i - 1) * n, (i - 1) * n, n, n) = models[i].A;
    s.A.block((i - 1) * n, N * n, n, n) = models[i].A - m0.A;
  }
  s.A.block(N * n, N * n, n, n) = m0.A;
  s.B = lift_input_blocks(Bs);
  s.D = lift_input_blocks(Ds);
  s.Bd = lift_input_blocks(Bds);
  return s;
}

// Follower rows: diag block sum_j K_ij, block (i, j) = -K_ij for follower j. Edge (i, 0)
// only contributes to the diagonal. Leader row: K_0 in the last block.
BlockGain lift_controller(const Eigen::MatrixXd& K0,
                          const std::map<std::pair<int, int>, Eigen::MatrixXd>& pair_gains,
                          const DirectedGraph& g);

// Rank test used for the D_i invariant.
bool full_column_rank(const Eigen::MatrixXd& D, double tol = 1e-10);

void validate_agent(const AgentModel& a);

// Lifted state [x_1 - x_0; ...; x_N - x_0; x_0] from per-agent states.
Eigen::VectorXd lift_state(const std::vector<Eigen::VectorXd>& x);
// Stacked [v_1; ...; v_N; v_0].
Eigen::VectorXd stack_follower_first(const std::vector<Eigen::VectorXd>& v);

}  // namespace etc
