#include "etc/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "etc/error.hpp"

namespace etc {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd json_matrix(const json& j) {
  if (!j.is_array()) throw Error(Errc::Config, "matrix must be a nested array");
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  // a flat array is a column
  if (!j[0].is_array()) {
    Eigen::MatrixXd v(j.size(), 1);
    for (size_t r = 0; r < j.size(); ++r) v(r, 0) = j[r].get<double>();
    return v;
  }
  const size_t cols = j[0].size();
  Eigen::MatrixXd M(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw Error(Errc::Config, "ragged matrix");
    for (size_t c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

namespace {

Eigen::VectorXd per_agent(const json& j, int na, const char* what) {
  if (j.is_number()) return Eigen::VectorXd::Constant(na, j.get<double>());
  Eigen::MatrixXd v = json_matrix(j);
  if (v.cols() != 1 || v.rows() != na)
    throw Error(Errc::Config, std::string(what) + " needs one value per agent");
  return v.col(0);
}

std::vector<Eigen::VectorXd> states(const json& j) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& r : j) out.push_back(json_matrix(r).col(0));
  return out;
}

}  // namespace

RunConfig parse_config(const json& j) {
  try {
    RunConfig c;
    c.Tk = j.value("Tk", 0.01);
    if (!(c.Tk > 0)) throw Error(Errc::Config, "Tk must be positive");
    if (!j.contains("agents") || !j["agents"].is_array() || j["agents"].size() < 2)
      throw Error(Errc::Config, "need a leader and at least one follower");
    for (const auto& a : j["agents"]) {
      AgentSpec s;
      if (a.contains("mass_spring")) {
        auto p = a["mass_spring"];
        if (p.size() != 3) throw Error(Errc::Config, "mass_spring takes [f, phi, varphi]");
        std::tie(s.A, s.B) = mass_spring(p[0].get<double>(), p[1].get<double>(),
                                         p[2].get<double>());
        s.continuous = true;
      } else {
        s.A = json_matrix(a.at("A"));
        s.B = json_matrix(a.at("B"));
        s.continuous = a.value("continuous", true);
      }
      c.agents.push_back(s);
    }
    const int na = static_cast<int>(c.agents.size());
    c.noise_scale = j.value("noise_scale", 0.01);
    c.adjacency = json_matrix(j.at("graph"));

    const json e = j.value("ets", json::object());
    c.sigma0 = e.value("sigma0", 0.02);
    if (e.contains("sigma"))
      for (const auto& s : e["sigma"]) {
        if (s.size() != 3) throw Error(Errc::Config, "sigma entries are [i, j, value]");
        c.sigma[{s[0].get<int>(), s[1].get<int>()}] = s[2].get<double>();
      }
    c.theta = per_agent(e.value("theta", json(5.0)), na, "theta");
    c.lambda = per_agent(e.value("lambda", json(0.2)), na, "lambda");
    c.eta0 = per_agent(e.value("eta0", json(0.0)), na, "eta0");
    c.h = e.value("h", 1);
    if (c.h < 1) throw Error(Errc::Config, "h must be >= 1");

    const json d = j.value("data", json::object());
    c.rho = d.value("rho", 40);
    if (c.rho < 1) throw Error(Errc::Config, "rho must be >= 1");
    c.wbar = d.value("wbar", 1e-3);
    if (!(c.wbar >= 0)) throw Error(Errc::Config, "wbar must be nonnegative");
    if (d.contains("input")) {
      c.u_lo = d["input"].at(0).get<double>();
      c.u_hi = d["input"].at(1).get<double>();
      if (!(c.u_lo < c.u_hi)) throw Error(Errc::Config, "input range must be increasing");
    }
    c.seed = d.value("seed", std::uint64_t{1});
    if (d.contains("x0")) c.data_x0 = states(d["x0"]);

    const json s = j.value("solver", json::object());
    c.eps_feas = s.value("eps_feas", 1e-6);
    c.eps_D = s.value("eps_D", 2.0);
    const std::string q = s.value("q_policy", std::string("free"));
    if (q != "free" && q != "scalar") throw Error(Errc::Config, "q_policy is free or scalar");
    c.free_q = q == "free";
    c.precondition = s.value("precondition", true);
    const std::string lb = s.value("leader_block", std::string("sigma0"));
    if (lb != "sigma0" && lb != "omega0")
      throw Error(Errc::Config, "leader_block is sigma0 or omega0");
    c.scale_leader_block = lb == "sigma0";

    const json m = j.value("sim", json::object());
    c.horizon = m.value("horizon", 100);
    if (c.horizon < 1) throw Error(Errc::Config, "horizon must be >= 1");
    if (m.contains("x0")) c.x0 = states(m["x0"]);
    if (m.contains("disturbance")) {
      const auto& dj = m["disturbance"];
      const std::string k = dj.value("kind", std::string("zero"));
      if (k == "zero") {
        c.disturbance.kind = DisturbanceSpec::Kind::Zero;
      } else if (k == "random") {
        c.disturbance.kind = DisturbanceSpec::Kind::Random;
        c.disturbance.bound = dj.value("bound", 1.0);
        c.disturbance.seed = dj.value("seed", std::uint64_t{0});
      } else if (k == "sequence") {
        c.disturbance.kind = DisturbanceSpec::Kind::Sequence;
        for (const auto& a : dj.at("values")) c.disturbance.sequence.push_back(json_matrix(a));
      } else {
        throw Error(Errc::Config, "disturbance kind is zero, random or sequence");
      }
    }
    const json hj = j.value("hinf", json::object());
    c.hinf_horizon = hj.value("horizon", 500);
    c.hinf_runs = hj.value("runs", 10);
    c.hinf_bound = hj.value("bound", 1.0);
    c.out = j.value("out", std::string("out"));

    const int n = static_cast<int>(c.agents[0].A.rows());
    if (c.x0.empty()) c.x0.assign(na, Eigen::VectorXd::Zero(n));
    if (c.data_x0.empty()) c.data_x0 = c.x0;
    if (static_cast<int>(c.x0.size()) != na || static_cast<int>(c.data_x0.size()) != na)
      throw Error(Errc::Config, "one initial state per agent");
    if (c.adjacency.rows() != na) throw Error(Errc::Config, "graph size differs from agents");
    return c;
  } catch (const json::exception& ex) {
    throw Error(Errc::Config, ex.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Config, "cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& ex) {
    throw Error(Errc::Config, ex.what());
  }
  return parse_config(j);
}

json example1_json() {
  return json::parse(R"({
    "Tk": 0.01,
    "agents": [
      {"mass_spring": [1, 1, 2]},
      {"mass_spring": [1, 1.1, 2]},
      {"mass_spring": [1, 1.2, 2]},
      {"mass_spring": [1, 0.8, 2]}
    ],
    "noise_scale": 0.01,
    "graph": [[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0], [0, 1, 0, 0]],
    "ets": {"sigma0": 0.02, "sigma": [[1, 0, 0.05], [2, 1, 0.05], [3, 1, 0.05]],
            "theta": 5, "lambda": 0.2, "eta0": 0, "h": 1},
    "data": {"rho": 40, "wbar": 0.001, "input": [-1, 1], "seed": 1},
    "solver": {"eps_feas": 1e-6, "eps_D": 2, "q_policy": "free", "precondition": true,
               "leader_block": "sigma0"},
    "sim": {"horizon": 100, "x0": [[0.1, -0.1], [1, 0.1], [1, -1], [0.2, -0.1]],
            "disturbance": {"kind": "zero"}},
    "hinf": {"horizon": 500, "runs": 10, "bound": 1},
    "out": "out/example1"
  })");
}

std::vector<AgentModel> build_models(const RunConfig& c) {
  std::vector<AgentModel> out;
  for (const auto& a : c.agents) {
    AgentModel m;
    if (a.continuous)
      std::tie(m.A, m.B) = discretize(a.A, a.B, c.Tk);
    else {
      m.A = a.A;
      m.B = a.B;
    }
    m.D = c.noise_scale * Eigen::MatrixXd::Identity(m.A.rows(), m.A.rows());
    m.Bd = m.D;
    validate_agent(m);
    out.push_back(std::move(m));
  }
  return out;
}

DirectedGraph build_graph(const RunConfig& c) { return DirectedGraph(c.adjacency); }

lmi::DesignParams design_params(const RunConfig& c) {
  lmi::DesignParams p;
  p.sigma0 = c.sigma0;
  p.sigma = c.sigma;
  p.lambda = c.lambda;
  p.theta = c.theta;
  p.h_lo = p.h_hi = c.h;
  p.eps_D = c.eps_D;
  p.free_q = c.free_q;
  p.precondition = c.precondition;
  p.scale_leader_block = c.scale_leader_block;
  return p;
}

EtsParams ets_params(const RunConfig& c, const std::vector<Eigen::MatrixXd>& Omega) {
  EtsParams p;
  p.sigma0 = c.sigma0;
  p.sigma = c.sigma;
  p.theta = c.theta;
  p.lambda = c.lambda;
  p.Omega = Omega;
  p.h = c.h;
  p.eta0 = c.eta0;
  return p;
}

SimConfig sim_config(const RunConfig& c) {
  SimConfig s;
  s.horizon = c.horizon;
  s.x0 = c.x0;
  s.disturbance = c.disturbance;
  return s;
}

DataSet collect(const RunConfig& c) {
  return collect_trajectory(build_models(c), InputPolicy{c.u_lo, c.u_hi}, NoisePolicy{c.wbar},
                            c.rho, c.seed, c.data_x0);
}

ThetaAB theta_of(const RunConfig& c, const DataSet& ds) {
  auto models = build_models(c);
  if (ds.agents() != static_cast<int>(models.size()))
    throw Error(Errc::DimensionMismatch, "data set agent count differs from config");
  auto sys = lift_error_system(models, build_graph(c));
  auto nm = build_noise_multiplier(ds.rho, c.wbar, std::nullopt, static_cast<int>(sys.D.cols()));
  return build_theta_AB(build_data_matrices(ds), sys.D, nm);
}

lmi::SolverOptions solver_options(const RunConfig& c) {
  auto o = lmi::default_options();
  if (!std::getenv("ETC_SOLVER_TOL")) o.eps_feas = c.eps_feas;
  return o;
}

namespace {

DesignRun finish(lmi::LmiProblem lp, const lmi::SolverOptions& o, const DirectedGraph& g) {
  DesignRun r;
  auto t0 = std::chrono::steady_clock::now();
  r.sol = lmi::solve_feasibility(lp.prob, o);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.lp = std::move(lp);
  if (r.sol.x.size()) {
    try {
      r.design = lmi::recover_design(r.lp, r.sol, g);
    } catch (const Error& e) {
      r.note = e.what();
    }
  }
  return r;
}

}  // namespace

DesignRun design_model(const RunConfig& c) {
  auto g = build_graph(c);
  auto sys = lift_error_system(build_models(c), g);
  return finish(lmi::assemble_theorem2(sys, design_params(c), g), solver_options(c), g);
}

DesignRun design_data(const RunConfig& c, const DataSet& ds) {
  auto g = build_graph(c);
  auto sys = lift_error_system(build_models(c), g);
  auto th = theta_of(c, ds);
  return finish(lmi::assemble_theorem3(th, lmi::dims_of(sys), design_params(c), g),
                solver_options(c), g);
}

HinfRun design_hinf(const RunConfig& c, const DataSet& ds, std::optional<double> gamma) {
  auto g = build_graph(c);
  auto sys = lift_error_system(build_models(c), g);
  auto th = theta_of(c, ds);
  auto prm = design_params(c);
  HinfRun out;
  out.stage1 = design_data(c, ds);
  if (!out.stage1.design)
    throw Error(Errc::MissingStageOne, "stage one produced no usable G");
  const Eigen::MatrixXd G1 = out.stage1.design->G;
  auto opt = solver_options(c);
  auto fast = opt;
  fast.stop_when_certified = true;

  auto run = [&](double gm, const lmi::SolverOptions& o) {
    auto r = finish(lmi::assemble_theorem4(th, lmi::dims_of(sys), sys.Bd, gm, G1, prm, g), o, g);
    out.history.emplace_back(gm, r.sol.feasible());
    return r;
  };
  if (gamma) {
    out.gamma = *gamma;
    out.stage2 = run(*gamma, opt);
    return out;
  }
  double lo = 0.0, hi = 1.0;
  DesignRun best = run(hi, fast);
  if (best.sol.feasible()) {
    // shrink until infeasible
    for (double gm = hi / 4; gm > 1e-6; gm /= 4) {
      auto r = run(gm, fast);
      if (!r.sol.feasible()) {
        lo = gm;
        break;
      }
      hi = gm;
      best = std::move(r);
    }
  } else {
    lo = hi;
    bool found = false;
    for (double gm = hi * 4; gm <= 1e8; gm *= 4) {
      auto r = run(gm, fast);
      if (r.sol.feasible()) {
        hi = gm;
        best = std::move(r);
        found = true;
        break;
      }
      lo = gm;
    }
    if (!found) {
      out.gamma = hi;
      out.stage2 = std::move(best);
      return out;
    }
  }
  while (hi - lo > 1e-2 * hi) {
    double mid = 0.5 * (lo + hi);
    auto r = run(mid, fast);
    if (r.sol.feasible()) {
      hi = mid;
      best = std::move(r);
    } else {
      lo = mid;
    }
  }
  out.gamma = hi;
  out.stage2 = std::move(best);
  return out;
}

json design_to_json(const DesignRun& r, const std::string& method) {
  json j;
  j["method"] = method;
  j["theorem"] = static_cast<int>(r.lp.theorem);
  j["status"] = lmi::status_name(r.sol.status);
  j["feasible"] = r.sol.feasible();
  j["message"] = r.sol.message;
  j["solver"] = {{"iterations", r.sol.iterations},
                 {"t", r.sol.t},
                 {"rel_gap", r.sol.rel_gap},
                 {"primal_infeas", r.sol.primal_infeas},
                 {"dual_infeas", r.sol.dual_infeas},
                 {"rescale", r.sol.rescale},
                 {"seconds", r.seconds}};
  json margins = json::array();
  for (const auto& b : r.sol.blocks)
    margins.push_back({{"label", b.label},
                       {"dim", b.dim},
                       {"margin", b.margin},
                       {"required", b.required},
                       {"ok", b.ok}});
  j["margins"] = margins;
  if (!r.note.empty()) j["note"] = r.note;
  if (!r.design) return j;
  const auto& d = *r.design;
  j["K0"] = matrix_json(d.gain.K0);
  json pairs = json::array();
  for (const auto& [e, K] : d.gain.pair)
    pairs.push_back({{"i", e.first}, {"j", e.second}, {"K", matrix_json(K)}});
  j["K_pair"] = pairs;
  j["K"] = matrix_json(d.gain.K);
  json om = json::array();
  for (const auto& o : d.Omega) om.push_back(matrix_json(o));
  j["Omega"] = om;
  j["Omega_a"] = matrix_json(d.Omega_a);
  j["Omega_b"] = matrix_json(d.Omega_b);
  j["G"] = matrix_json(d.G);
  j["certificate"] = {{"P", matrix_json(d.cert.P)},   {"R1", matrix_json(d.cert.R1)},
                      {"R2", matrix_json(d.cert.R2)}, {"S", matrix_json(d.cert.S)},
                      {"M1", matrix_json(d.cert.M1)}, {"M2", matrix_json(d.cert.M2)},
                      {"F", matrix_json(d.cert.F)}};
  if (d.q.size()) j["q"] = matrix_json(d.q);
  if (r.lp.theorem == lmi::Theorem::HinfDesign) j["gamma"] = d.gamma;
  return j;
}

LoadedDesign design_from_json(const json& j, const DirectedGraph& g) {
  try {
    LoadedDesign out;
    out.method = j.value("method", std::string());
    out.status = j.value("status", std::string());
    out.feasible = j.value("feasible", false);
    if (!j.contains("K0")) throw Error(Errc::MissingVariables, "design file carries no gains");
    std::map<std::pair<int, int>, Eigen::MatrixXd> pair;
    for (const auto& p : j.at("K_pair"))
      pair[{p.at("i").get<int>(), p.at("j").get<int>()}] = json_matrix(p.at("K"));
    auto& d = out.design;
    d.gain = lift_controller(json_matrix(j["K0"]), pair, g);
    for (const auto& o : j.at("Omega")) d.Omega.push_back(json_matrix(o));
    d.Omega_a = json_matrix(j.at("Omega_a"));
    d.Omega_b = json_matrix(j.at("Omega_b"));
    d.G = json_matrix(j.at("G"));
    const auto& c = j.at("certificate");
    d.cert.P = json_matrix(c.at("P"));
    d.cert.R1 = json_matrix(c.at("R1"));
    d.cert.R2 = json_matrix(c.at("R2"));
    d.cert.S = json_matrix(c.at("S"));
    d.cert.M1 = json_matrix(c.at("M1"));
    d.cert.M2 = json_matrix(c.at("M2"));
    d.cert.F = json_matrix(c.at("F"));
    if (j.contains("q")) d.q = json_matrix(j["q"]).col(0);
    d.gamma = j.value("gamma", 0.0);
    d.theorem = static_cast<lmi::Theorem>(j.value("theorem", 2));
    return out;
  } catch (const json::exception& ex) {
    throw Error(Errc::Config, ex.what());
  }
}

}  // namespace etc
