#include "etc/mas_model.hpp"

#include <set>
#include <string>

namespace etc {

BlockGain lift_controller(const Eigen::MatrixXd& K0,
                          const std::map<std::pair<int, int>, Eigen::MatrixXd>& pair_gains,
                          const DirectedGraph& g) {
  const int N = g.followers();
  const auto m = K0.rows(), n = K0.cols();
  std::set<std::pair<int, int>> edges;
  for (auto e : g.follower_edges()) edges.insert(e);
  for (const auto& [key, Kij] : pair_gains) {
    if (!edges.count(key))
      throw Error(Errc::ExtraGain, "gain for (" + std::to_string(key.first) + "," +
                                       std::to_string(key.second) + ") has no edge");
    if (Kij.rows() != m || Kij.cols() != n)
      throw Error(Errc::DimensionMismatch, "pair gain has wrong shape");
  }
  for (auto e : edges)
    if (!pair_gains.count(e))
      throw Error(Errc::MissingGain, "edge (" + std::to_string(e.first) + "," +
                                         std::to_string(e.second) + ") has no gain");
  BlockGain bg;
  bg.K0 = K0;
  bg.pair = pair_gains;
  bg.K = Eigen::MatrixXd::Zero((N + 1) * m, (N + 1) * n);
  for (const auto& [key, Kij] : pair_gains) {
    auto [i, j] = key;
    bg.K.block((i - 1) * m, (i - 1) * n, m, n) += Kij;
    if (j != 0) bg.K.block((i - 1) * m, (j - 1) * n, m, n) -= Kij;
  }
  bg.K.block(N * m, N * n, m, n) = K0;
  return bg;
}

bool full_column_rank(const Eigen::MatrixXd& D, double tol) {
  if (D.cols() == 0) return true;
  if (D.cols() > D.rows()) return false;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
  auto s = svd.singularValues();
  return s(s.size() - 1) > tol * std::max(1.0, s(0));
}

void validate_agent(const AgentModel& a) {
  if (a.A.rows() != a.A.cols() || a.B.rows() != a.A.rows() || a.D.rows() != a.A.rows())
    throw Error(Errc::DimensionMismatch, "agent matrices inconsistent");
  if (a.nd() > 0 && a.Bd.rows() != a.A.rows())
    throw Error(Errc::DimensionMismatch, "B_d rows differ from n");
  if (!a.A.allFinite() || !a.B.allFinite() || !a.D.allFinite())
    throw Error(Errc::NonFinite, "agent matrix has non-finite entries");
  if (!full_column_rank(a.D)) throw Error(Errc::RankDeficient, "D_i must have full column rank");
}

Eigen::VectorXd lift_state(const std::vector<Eigen::VectorXd>& x) {
  const int N = static_cast<int>(x.size()) - 1;
  const auto n = x[0].size();
  Eigen::VectorXd e((N + 1) * n);
  for (int i = 1; i <= N; ++i) e.segment((i - 1) * n, n) = x[i] - x[0];
  e.segment(N * n, n) = x[0];
  return e;
}

Eigen::VectorXd stack_follower_first(const std::vector<Eigen::VectorXd>& v) {
  const int N = static_cast<int>(v.size()) - 1;
  const auto r = v[0].size();
  Eigen::VectorXd out((N + 1) * r);
  for (int i = 1; i <= N; ++i) out.segment((i - 1) * r, r) = v[i];
  out.segment(N * r, r) = v[0];
  return out;
}

}  // namespace etc
