#include "etc/sim.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "etc/error.hpp"

namespace etc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Held {
  std::vector<Eigen::VectorXd> xh;  // latest broadcast per agent
};

Eigen::VectorXd control(int i, const Held& hd, const BlockGain& K, const DirectedGraph& g) {
  if (i == 0) return K.K0 * hd.xh[0];
  Eigen::VectorXd u = Eigen::VectorXd::Zero(K.K0.rows());
  for (int j : g.neighbors(i)) u += K.pair.at({i, j}) * (hd.xh[i] - hd.xh[j]);
  return u;
}

double rho_of(int i, const std::vector<Eigen::VectorXd>& x, const Held& hd, const EtsParams& p,
              const DirectedGraph& g) {
  std::map<int, Eigen::VectorXd> nb;
  for (int j : g.neighbors(i)) nb.emplace(j, hd.xh[j]);
  return compute_rho(i, x[i], hd.xh[i], nb, p, g);
}

}  // namespace

SimTrace run_closed_loop(const std::vector<AgentModel>& models, const BlockGain& gains,
                         const EtsParams& ets, const DirectedGraph& g, const SimConfig& cfg) {
  if (auto v = validate_params(ets, g); !v.empty())
    throw Error(Errc::ParamViolation, "ets: " + v.front().what);
  if (cfg.horizon < 1) throw Error(Errc::Config, "horizon must be >= 1");
  const int na = g.size();
  if (static_cast<int>(models.size()) != na || static_cast<int>(cfg.x0.size()) != na)
    throw Error(Errc::DimensionMismatch, "one model and initial state per agent");
  for (auto e : g.follower_edges())
    if (!gains.pair.count(e)) throw Error(Errc::MissingGain, "gain missing for an edge");
  const int H = cfg.horizon, h = ets.h;

  SimTrace tr;
  tr.horizon = H;
  tr.h = h;
  tr.eta = Eigen::MatrixXd::Constant(na, H + 1, kNaN);
  tr.rho = Eigen::MatrixXd::Constant(na, H + 1, kNaN);
  tr.broadcast.setConstant(na, H + 1, false);
  for (int i = 0; i < na; ++i) {
    if (cfg.x0[i].size() != models[i].n()) throw Error(Errc::DimensionMismatch, "x0 size");
    tr.x.push_back(Eigen::MatrixXd::Zero(models[i].n(), H + 1));
    tr.x[i].col(0) = cfg.x0[i];
    tr.u.push_back(Eigen::MatrixXd::Zero(models[i].m(), H));
    tr.d.push_back(Eigen::MatrixXd::Zero(models[i].nd(), H));
  }

  const auto& ds = cfg.disturbance;
  if (ds.kind == DisturbanceSpec::Kind::Sequence) {
    if (static_cast<int>(ds.sequence.size()) != na)
      throw Error(Errc::DimensionMismatch, "disturbance sequence per agent");
    for (int i = 0; i < na; ++i) {
      if (ds.sequence[i].rows() != models[i].nd() || ds.sequence[i].cols() < H)
        throw Error(Errc::DimensionMismatch, "disturbance sequence shape");
      tr.d[i] = ds.sequence[i].leftCols(H);
    }
  } else if (ds.kind == DisturbanceSpec::Kind::Random) {
    std::mt19937_64 rng(ds.seed);
    std::uniform_real_distribution<double> ud(-ds.bound, ds.bound);
    for (int t = 0; t < H; ++t)
      for (int i = 0; i < na; ++i)
        for (int k = 0; k < models[i].nd(); ++k) tr.d[i](k, t) = ud(rng);
  }

  Held hd;
  hd.xh.resize(na);
  Eigen::VectorXd eta = ets.eta0.size() ? ets.eta0 : Eigen::VectorXd::Zero(na);
  if (cfg.static_rule) eta.setZero();
  std::vector<Eigen::VectorXd> x(na), u(na);
  for (int i = 0; i < na; ++i) x[i] = cfg.x0[i];

  for (int t = 0; t <= H; ++t) {
    if (tr.sampling(t)) {
      tr.eta.col(t) = eta;
      if (t < H) {
        std::vector<bool> fired(na, false);
        if (t == 0) {
          for (int i = 0; i < na; ++i) {
            hd.xh[i] = x[i];
            fired[i] = true;
          }
        } else {
          // broadcasts change neighbors' rho; repeat until no new agent fires
          bool changed = true;
          while (changed) {
            changed = false;
            for (int i = 0; i < na; ++i) {
              if (fired[i]) continue;
              double r = rho_of(i, x, hd, ets, g);
              if (check_trigger(eta(i), r, ets.theta(i))) fired[i] = true;
            }
            for (int i = 0; i < na; ++i)
              if (fired[i] && hd.xh[i] != x[i]) {
                hd.xh[i] = x[i];
                changed = true;
              }
          }
        }
        for (int i = 0; i < na; ++i) {
          tr.broadcast(i, t) = fired[i];
          double r = rho_of(i, x, hd, ets, g);
          tr.rho(i, t) = r;
          if (!cfg.static_rule) eta(i) = update_eta(eta(i), r, ets.lambda(i));
        }
        for (int i = 0; i < na; ++i) u[i] = control(i, hd, gains, g);
      }
    }
    if (t == H) break;
    for (int i = 0; i < na; ++i) {
      const auto& a = models[i];
      tr.u[i].col(t) = u[i];
      Eigen::VectorXd xn = a.A * x[i] + a.B * u[i];
      if (a.nd() > 0) xn += a.Bd * tr.d[i].col(t);
      if (!xn.allFinite() || xn.norm() > 1e9)
        throw Error(Errc::NonFinite, "closed loop diverged at step " + std::to_string(t + 1));
      x[i] = xn;
      tr.x[i].col(t + 1) = xn;
    }
  }
  return tr;
}

Eigen::VectorXd consensus_error(const SimTrace& tr) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(tr.horizon + 1);
  for (int t = 0; t <= tr.horizon; ++t)
    for (int i = 1; i < tr.agents(); ++i)
      e(t) = std::max(e(t), (tr.x[i].col(t) - tr.x[0].col(t)).norm());
  return e;
}

Eigen::VectorXi broadcast_counts(const SimTrace& tr, bool include_initial) {
  Eigen::VectorXi c = Eigen::VectorXi::Zero(tr.agents());
  for (int i = 0; i < tr.agents(); ++i)
    for (int t = include_initial ? 0 : 1; t <= tr.horizon; ++t) c(i) += tr.broadcast(i, t);
  return c;
}

Eigen::VectorXd lifted_error(const SimTrace& tr, int t) {
  std::vector<Eigen::VectorXd> xs;
  for (const auto& xi : tr.x) xs.push_back(xi.col(t));
  return lift_state(xs);
}

double empirical_l2_gain(const SimTrace& tr, const std::optional<Eigen::MatrixXd>& weight) {
  double num = 0.0, den = 0.0;
  for (int t = 0; t < tr.horizon; ++t)
    for (const auto& di : tr.d) den += di.col(t).squaredNorm();
  if (!(den > 0)) throw Error(Errc::ZeroDisturbance, "disturbance is identically zero");
  for (int t = 0; t <= tr.horizon; ++t) {
    Eigen::VectorXd z = lifted_error(tr, t);
    num += weight ? (*weight * z).squaredNorm() : z.squaredNorm();
  }
  return std::sqrt(num / den);
}

std::vector<DecreaseStep> lyapunov_decrease_check(const SimTrace& tr, const Eigen::MatrixXd& P) {
  if (P.size() == 0) throw Error(Errc::MissingVariables, "no Lyapunov matrix");
  std::vector<DecreaseStep> out;
  auto W = [&](int t) {
    Eigen::VectorXd e = lifted_error(tr, t);
    if (e.size() != P.rows()) throw Error(Errc::DimensionMismatch, "P does not match the state");
    return e.dot(P * e) + tr.h * tr.eta.col(t).sum();
  };
  for (int t = 0; t + tr.h <= tr.horizon; t += tr.h)
    out.push_back({t, lifted_error(tr, t).norm(), W(t + tr.h) - W(t)});
  return out;
}

void write_trace_csv(std::ostream& os, const SimTrace& tr) {
  const int n = static_cast<int>(tr.x[0].rows()), m = static_cast<int>(tr.u[0].rows());
  const int nd = static_cast<int>(tr.d[0].rows());
  os << "t,agent";
  for (int k = 0; k < n; ++k) os << ",x" << k;
  for (int k = 0; k < m; ++k) os << ",u" << k;
  os << ",eta,broadcast";
  for (int k = 0; k < nd; ++k) os << ",d" << k;
  os << "\n" << std::setprecision(17);
  for (int t = 0; t <= tr.horizon; ++t)
    for (int i = 0; i < tr.agents(); ++i) {
      os << t << "," << i;
      for (int k = 0; k < n; ++k) os << "," << tr.x[i](k, t);
      for (int k = 0; k < m; ++k) {
        os << ",";
        if (t < tr.horizon) os << tr.u[i](k, t);
      }
      os << ",";
      if (!std::isnan(tr.eta(i, t))) os << tr.eta(i, t);
      os << "," << (tr.broadcast(i, t) ? 1 : 0);
      for (int k = 0; k < nd; ++k) {
        os << ",";
        if (t < tr.horizon) os << tr.d[i](k, t);
      }
      os << "\n";
    }
}

SimTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::Io, "empty trace");
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) head.push_back(c);
  }
  if (head.size() < 4 || head[0] != "t" || head[1] != "agent")
    throw Error(Errc::Io, "trace header must start with t,agent");
  int n = 0, m = 0, nd = 0;
  for (const auto& c : head) {
    if (c.size() > 1 && c[0] == 'x') ++n;
    if (c.size() > 1 && c[0] == 'u') ++m;
    if (c.size() > 1 && c[0] == 'd') ++nd;
  }
  if (static_cast<int>(head.size()) != 4 + n + m + nd || n == 0)
    throw Error(Errc::Io, "unexpected trace columns");

  struct Row {
    int t, agent;
    std::vector<std::string> f;
  };
  std::vector<Row> rows;
  int maxT = -1, maxA = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Row r;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) r.f.push_back(c);
    if (!line.empty() && line.back() == ',') r.f.push_back("");
    if (r.f.size() != head.size()) throw Error(Errc::Io, "ragged trace row");
    try {
      r.t = std::stoi(r.f[0]);
      r.agent = std::stoi(r.f[1]);
    } catch (const std::exception&) {
      throw Error(Errc::Io, "bad index in trace");
    }
    if (r.t < 0 || r.agent < 0) throw Error(Errc::Io, "negative index in trace");
    maxT = std::max(maxT, r.t);
    maxA = std::max(maxA, r.agent);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(Errc::Io, "trace has no rows");
  if (static_cast<int>(rows.size()) != (maxT + 1) * (maxA + 1))
    throw Error(Errc::Io, "trace is not a full (t, agent) grid");

  SimTrace tr;
  tr.horizon = maxT;
  const int na = maxA + 1;
  tr.eta = Eigen::MatrixXd::Constant(na, maxT + 1, kNaN);
  tr.rho = Eigen::MatrixXd::Constant(na, maxT + 1, kNaN);
  tr.broadcast.setConstant(na, maxT + 1, false);
  for (int i = 0; i < na; ++i) {
    tr.x.push_back(Eigen::MatrixXd::Zero(n, maxT + 1));
    tr.u.push_back(Eigen::MatrixXd::Zero(m, maxT));
    tr.d.push_back(Eigen::MatrixXd::Zero(nd, maxT));
  }
  auto num = [](const std::string& s) {
    try {
      size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw Error(Errc::Io, "bad number '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      throw Error(Errc::Io, "bad number '" + s + "'");
    }
  };
  std::vector<int> sample_steps;
  for (const auto& r : rows) {
    int c = 2;
    for (int k = 0; k < n; ++k) tr.x[r.agent](k, r.t) = num(r.f[c++]);
    for (int k = 0; k < m; ++k, ++c)
      if (r.t < maxT) tr.u[r.agent](k, r.t) = num(r.f[c]);
    if (!r.f[c].empty()) tr.eta(r.agent, r.t) = num(r.f[c]);
    ++c;
    tr.broadcast(r.agent, r.t) = r.f[c++] == "1";
    for (int k = 0; k < nd; ++k, ++c)
      if (r.t < maxT) tr.d[r.agent](k, r.t) = num(r.f[c]);
  }
  // h is the spacing of the recorded eta samples
  tr.h = 1;
  for (int t = 1; t <= maxT; ++t)
    if (!std::isnan(tr.eta(0, t))) {
      tr.h = t;
      break;
    }
  return tr;
}

}  // namespace etc
