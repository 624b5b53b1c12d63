#include "etc/data.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace etc {

Eigen::MatrixXd NoiseMultiplier::Qd() const {
  const int r = rho();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(r + nw_total, r + nw_total);
  Q.topLeftCorner(r, r) = -q.asDiagonal().toDenseMatrix();
  Q.bottomRightCorner(nw_total, nw_total).diagonal().setConstant(q.sum() * wbar * wbar);
  return Q;
}

Eigen::MatrixXd ThetaAB::at(const Eigen::VectorXd& q) const {
  Eigen::MatrixXd T = -C * q.asDiagonal() * C.transpose();
  T.noalias() += (q.sum() * wbar * wbar) * Bw * Bw.transpose();
  return 0.5 * (T + T.transpose());
}

DataSet collect_trajectory(const std::vector<AgentModel>& models, const InputPolicy& in,
                           const NoisePolicy& noise, int rho, std::uint64_t seed,
                           const std::vector<Eigen::VectorXd>& x0) {
  if (rho < 1) throw Error(Errc::Config, "rho must be >= 1");
  if (x0.size() != models.size()) throw Error(Errc::DimensionMismatch, "initial states");
  if (noise.wbar < 0) throw Error(Errc::NegativeWeight, "noise bound must be nonnegative");
  const int N = static_cast<int>(models.size()) - 1;
  const int nw = models[0].nw();
  const int dim = (N + 1) * nw;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uu(in.lo, in.hi), unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  DataSet ds;
  ds.rho = rho;
  for (int i = 0; i <= N; ++i) {
    if (x0[i].size() != models[i].n()) throw Error(Errc::DimensionMismatch, "initial state size");
    ds.states.push_back(Eigen::MatrixXd::Zero(models[i].n(), rho + 1));
    ds.inputs.push_back(Eigen::MatrixXd::Zero(models[i].m(), rho));
    ds.states[i].col(0) = x0[i];
  }
  Eigen::VectorXd w(dim);
  for (int t = 0; t < rho; ++t) {
    for (int i = 0; i <= N; ++i)
      for (int k = 0; k < models[i].m(); ++k) ds.inputs[i](k, t) = uu(rng);
    // uniform on the ball of radius wbar, stacked [w_1; ...; w_N; w_0]
    for (int k = 0; k < dim; ++k) w(k) = gauss(rng);
    double r = noise.wbar * std::pow(unit(rng), 1.0 / dim);
    double nrm = w.norm();
    w = nrm > 0 ? Eigen::VectorXd(w * (r / nrm)) : Eigen::VectorXd::Zero(dim);
    for (int i = 0; i <= N; ++i) {
      const auto& a = models[i];
      int slot = i == 0 ? N : i - 1;
      Eigen::VectorXd xn = a.A * ds.states[i].col(t) + a.B * ds.inputs[i].col(t) +
                           a.D * w.segment(slot * nw, nw);
      if (!xn.allFinite() || xn.norm() > 1e12)
        throw Error(Errc::NonFinite, "state diverged during collection");
      ds.states[i].col(t + 1) = xn;
    }
  }
  return ds;
}

DataMatrices build_data_matrices(const DataSet& ds) {
  const int N = ds.agents() - 1;
  if (N < 0) throw Error(Errc::DimensionMismatch, "empty data set");
  const auto n = ds.states[0].rows(), m = ds.inputs[0].rows();
  for (int i = 0; i <= N; ++i)
    if (ds.states[i].rows() != n || ds.states[i].cols() != ds.rho + 1 ||
        ds.inputs[i].rows() != m || ds.inputs[i].cols() != ds.rho)
      throw Error(Errc::DimensionMismatch, "data sequence lengths inconsistent");
  DataMatrices dm;
  dm.E.resize((N + 1) * n, ds.rho);
  dm.E_plus.resize((N + 1) * n, ds.rho);
  dm.U.resize((N + 1) * m, ds.rho);
  for (int i = 1; i <= N; ++i) {
    auto err = ds.states[i] - ds.states[0];
    dm.E.middleRows((i - 1) * n, n) = err.leftCols(ds.rho);
    dm.E_plus.middleRows((i - 1) * n, n) = err.rightCols(ds.rho);
    dm.U.middleRows((i - 1) * m, m) = ds.inputs[i];
  }
  dm.E.middleRows(N * n, n) = ds.states[0].leftCols(ds.rho);
  dm.E_plus.middleRows(N * n, n) = ds.states[0].rightCols(ds.rho);
  dm.U.middleRows(N * m, m) = ds.inputs[0];
  return dm;
}

NoiseMultiplier build_noise_multiplier(int rho, double wbar,
                                       const std::optional<Eigen::VectorXd>& q, int nw_total) {
  if (wbar < 0) throw Error(Errc::NegativeWeight, "wbar must be nonnegative");
  NoiseMultiplier nm;
  nm.wbar = wbar;
  nm.nw_total = nw_total;
  if (q) {
    if (q->size() != rho) throw Error(Errc::DimensionMismatch, "q length differs from rho");
    if ((q->array() < 0).any()) throw Error(Errc::NegativeWeight, "q_i must be nonnegative");
    nm.q = *q;
  } else {
    nm.free = true;
    nm.q = Eigen::VectorXd::Ones(rho);
  }
  return nm;
}

ThetaAB build_theta_AB(const DataMatrices& dm, const Eigen::MatrixXd& Bw,
                       const NoiseMultiplier& nm) {
  const auto L = dm.E.rows(), Lm = dm.U.rows(), rho = dm.E.cols();
  if (dm.E_plus.rows() != L || dm.E_plus.cols() != rho || dm.U.cols() != rho ||
      Bw.rows() != L || Bw.cols() != nm.nw_total || nm.rho() != rho)
    throw Error(Errc::DimensionMismatch, "theta: inconsistent data, B_w or multiplier");
  ThetaAB th;
  th.L = static_cast<int>(L);
  th.Lm = static_cast<int>(Lm);
  th.wbar = nm.wbar;
  th.C.resize(2 * L + Lm, rho);
  th.C << -dm.E, -dm.U, dm.E_plus;
  th.Bw = Eigen::MatrixXd::Zero(2 * L + Lm, Bw.cols());
  th.Bw.bottomRows(L) = Bw;
  th.Theta = th.at(nm.q);
  return th;
}

Membership check_membership(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const ThetaAB& theta, double tol) {
  const int L = theta.L, Lm = theta.Lm;
  if (A.rows() != L || A.cols() != L || B.rows() != L || B.cols() != Lm)
    throw Error(Errc::DimensionMismatch, "membership: [A B] shape");
  Eigen::MatrixXd Y(L, 2 * L + Lm);
  Y << A, B, Eigen::MatrixXd::Identity(L, L);
  Eigen::MatrixXd M = Y * theta.Theta * Y.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                    Eigen::EigenvaluesOnly);
  Membership r;
  r.min_eig = es.eigenvalues()(0);
  r.member = r.min_eig >= -tol;
  return r;
}

double excitation_ratio(const DataMatrices& dm) {
  Eigen::MatrixXd Z(dm.E.rows() + dm.U.rows(), dm.E.cols());
  Z << dm.E, dm.U;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0) return 0.0;
  if (Z.rows() > Z.cols()) return 0.0;
  return s(s.size() - 1) / s(0);
}

void write_dataset_csv(std::ostream& os, const DataSet& ds) {
  const auto n = ds.states.at(0).rows(), m = ds.inputs.at(0).rows();
  os << "agent,T";
  for (int k = 0; k < n; ++k) os << ",x" << k;
  for (int k = 0; k < m; ++k) os << ",u" << k;
  os << "\n" << std::setprecision(17);
  for (int i = 0; i < ds.agents(); ++i) {
    for (int t = 0; t <= ds.rho; ++t) {
      os << i << "," << t;
      for (int k = 0; k < n; ++k) os << "," << ds.states[i](k, t);
      for (int k = 0; k < m; ++k) {
        os << ",";
        if (t < ds.rho) os << ds.inputs[i](k, t);
      }
      os << "\n";
    }
  }
}

DataSet read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::Io, "empty data file");
  int n = 0, m = 0;
  {
    std::stringstream hs(line);
    std::string col;
    int idx = 0;
    while (std::getline(hs, col, ',')) {
      if (idx == 0 && col != "agent") throw Error(Errc::Io, "missing header");
      if (!col.empty() && col[0] == 'x') ++n;
      if (!col.empty() && col[0] == 'u') ++m;
      ++idx;
    }
  }
  if (n == 0) throw Error(Errc::Io, "header lists no state columns");
  std::map<int, std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>> rows;
  std::map<int, std::vector<bool>> has_u;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < static_cast<size_t>(2 + n))
      throw Error(Errc::Io, "short row: " + line);
    cells.resize(2 + n + m);
    int agent = std::stoi(cells[0]);
    int t = std::stoi(cells[1]);
    Eigen::VectorXd x(n), u = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < n; ++k) x(k) = std::stod(cells[2 + k]);
    bool uok = true;
    for (int k = 0; k < m; ++k) {
      if (cells[2 + n + k].empty()) uok = false;
      else u(k) = std::stod(cells[2 + n + k]);
    }
    auto& v = rows[agent];
    if (t != static_cast<int>(v.size())) throw Error(Errc::Io, "rows must be ordered by T");
    v.emplace_back(x, u);
    has_u[agent].push_back(uok);
  }
  DataSet ds;
  if (rows.empty()) throw Error(Errc::Io, "no data rows");
  int agents = static_cast<int>(rows.size());
  ds.rho = static_cast<int>(rows.begin()->second.size()) - 1;
  if (ds.rho < 1) throw Error(Errc::Io, "need at least two samples per agent");
  for (int i = 0; i < agents; ++i) {
    if (!rows.count(i)) throw Error(Errc::Io, "agents must be numbered 0..N");
    auto& v = rows[i];
    if (static_cast<int>(v.size()) != ds.rho + 1) throw Error(Errc::Io, "ragged sequences");
    Eigen::MatrixXd X(n, ds.rho + 1), U(m, ds.rho);
    for (int t = 0; t <= ds.rho; ++t) {
      X.col(t) = v[t].first;
      if (t < ds.rho) {
        if (!has_u[i][t]) throw Error(Errc::Io, "missing input value");
        U.col(t) = v[t].second;
      }
    }
    ds.states.push_back(X);
    ds.inputs.push_back(U);
  }
  return ds;
}

}  // namespace etc
