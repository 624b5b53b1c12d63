#include "etc/ets.hpp"

#include <cmath>
#include <set>

#include "etc/error.hpp"

namespace etc {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::vector<Violation> validate_params(const EtsParams& p, const DirectedGraph& g) {
  std::vector<Violation> out;
  const int na = g.size();
  if (p.agents() != na) out.push_back({-1, "need one Omega per agent"});
  if (p.theta.size() != na || p.lambda.size() != na)
    out.push_back({-1, "theta and lambda need one entry per agent"});
  if (p.eta0.size() != 0 && p.eta0.size() != na) out.push_back({-1, "eta0 size"});
  if (p.h < 1) out.push_back({-1, "h must be at least one step"});
  if (!(p.sigma0 > 0) || !finite(p.sigma0)) out.push_back({0, "sigma_0 must be positive"});
  if (!out.empty()) return out;

  for (int i = 0; i < na; ++i) {
    const double th = p.theta(i), la = p.lambda(i);
    if (!(th > 0) || !finite(th)) out.push_back({i, "theta must be positive"});
    if (!(la > 0) || !finite(la)) out.push_back({i, "lambda must be positive"});
    if (th > 0 && la > 0 && 1.0 - la - 1.0 / th < 0.0)
      out.push_back({i, "1 - lambda - 1/theta < 0"});
    const auto& W = p.Omega[i];
    if (W.rows() != W.cols() || (i > 0 && W.rows() != p.Omega[0].rows())) {
      out.push_back({i, "Omega shape"});
      continue;
    }
    if (!W.allFinite() || (W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1 + W.norm())) {
      out.push_back({i, "Omega must be symmetric and finite"});
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
    if (es.eigenvalues().minCoeff() <= 0) out.push_back({i, "Omega must be positive definite"});
    if (p.eta0.size() && !(p.eta0(i) >= 0)) out.push_back({i, "eta(0) must be nonnegative"});
  }

  std::set<std::pair<int, int>> edges;
  for (auto e : g.follower_edges()) edges.insert(e);
  for (const auto& [e, s] : p.sigma) {
    if (!(s >= 0) || !finite(s)) out.push_back({e.first, "sigma must be nonnegative"});
    if (s > 0 && !edges.count(e)) out.push_back({e.first, "sigma on a pair without an edge"});
  }
  for (auto e : edges) {
    auto it = p.sigma.find(e);
    if (it == p.sigma.end() || !(it->second > 0))
      out.push_back({e.first, "edge without a positive sigma"});
  }
  return out;
}

double compute_rho(int i, const Eigen::VectorXd& current,
                   const std::optional<Eigen::VectorXd>& own_last,
                   const std::map<int, Eigen::VectorXd>& neighbor_last, const EtsParams& p,
                   const DirectedGraph& g) {
  if (i < 0 || i >= p.agents()) throw Error(Errc::IndexOutOfRange, "agent index");
  if (!own_last) throw Error(Errc::UninitializedBroadcast, "agent has not broadcast yet");
  const auto& W = p.Omega[i];
  if (current.size() != W.rows() || own_last->size() != W.rows())
    throw Error(Errc::DimensionMismatch, "state size differs from Omega");
  const Eigen::VectorXd e = current - *own_last;
  const double err = e.dot(W * e);
  if (i == 0) return p.sigma0 * own_last->dot(W * *own_last) - err;
  double acc = 0.0;
  for (int j : g.neighbors(i)) {
    auto it = neighbor_last.find(j);
    if (it == neighbor_last.end())
      throw Error(Errc::UninitializedBroadcast, "neighbor has not broadcast yet");
    auto s = p.sigma.find({i, j});
    const double sij = s == p.sigma.end() ? 0.0 : s->second;
    const Eigen::VectorXd d = *own_last - it->second;
    acc += sij * d.dot(W * d);
  }
  return acc - err;
}

}  // namespace etc
