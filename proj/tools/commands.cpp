#include "commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "svg.hpp"

namespace etc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(Errc c) {
  switch (c) {
    case Errc::Config:
    case Errc::LambdaThetaViolation:
    case Errc::SigmaPatternMismatch:
    case Errc::ParamViolation:
    case Errc::NonSquare:
    case Errc::SelfLoop:
    case Errc::NonBinaryEntry:
      return kConfig;
    case Errc::SolverNumericalFailure:
      return kSolver;
    default:
      return kRuntime;
  }
}

RunConfig resolve(const Options& o) {
  RunConfig c = o.config.empty() ? parse_config(example1_json()) : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out = o.out;
  // validate the graph and trigger parameters up front so they surface as config errors
  auto g = build_graph(c);
  lmi::validate_design_params(design_params(c), g);
  return c;
}

namespace {

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot write " + p.string());
  f << s;
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw Error(Errc::Io, "cannot open " + p.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(Errc::Config, p.string() + ": " + e.what());
  }
}

DataSet read_data(const RunConfig& c) {
  const fs::path p = fs::path(c.out) / "data.csv";
  std::ifstream f(p);
  if (!f) throw Error(Errc::Io, "missing " + p.string() + " (run collect first)");
  return read_dataset_csv(f);
}

int status_exit(const lmi::Solution& s) {
  switch (s.status) {
    case lmi::Status::Feasible:
      return kOk;
    case lmi::Status::Infeasible:
      return kInfeasible;
    default:
      return kSolver;
  }
}

void print_design(const DesignRun& r, std::ostream& log) {
  log << "status " << lmi::status_name(r.sol.status) << " (" << r.sol.message << "), "
      << r.sol.iterations << " iterations, " << std::setprecision(3) << r.seconds << " s\n";
  for (const auto& b : r.sol.blocks)
    if (!b.ok) log << "  block " << b.label << " margin " << b.margin << " required " << b.required << "\n";
  if (!r.note.empty()) log << "  " << r.note << "\n";
  if (!r.design) return;
  log << "  K0 = " << r.design->gain.K0.format(Eigen::IOFormat(4, 0, ", ", "; ", "", "", "[", "]"))
      << "\n";
  for (const auto& [e, K] : r.design->gain.pair)
    log << "  K" << e.first << e.second << " = "
        << K.format(Eigen::IOFormat(4, 0, ", ", "; ", "", "", "[", "]")) << "\n";
}

double nan_min(const Eigen::MatrixXd& M) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < M.size(); ++k)
    if (!std::isnan(M.data()[k])) m = std::min(m, M.data()[k]);
  return m;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
json vec_json(const Eigen::VectorXi& v) { return std::vector<int>(v.data(), v.data() + v.size()); }

// Runs with zero initial state and seeded bounded disturbances.
std::vector<double> hinf_gains(const RunConfig& c, const lmi::Design& d, int jobs) {
  auto models = build_models(c);
  auto g = build_graph(c);
  auto ets = ets_params(c, d.Omega);
  auto one = [&](int k) {
    SimConfig s = sim_config(c);
    s.horizon = c.hinf_horizon;
    for (auto& x : s.x0) x.setZero();
    s.disturbance.kind = DisturbanceSpec::Kind::Random;
    s.disturbance.bound = c.hinf_bound;
    s.disturbance.seed = c.seed * 1000 + k;
    return empirical_l2_gain(run_closed_loop(models, d.gain, ets, g, s));
  };
  std::vector<double> out(c.hinf_runs);
  jobs = std::max(1, jobs);
  for (int k0 = 0; k0 < c.hinf_runs; k0 += jobs) {
    std::vector<std::future<double>> fut;
    for (int k = k0; k < std::min(c.hinf_runs, k0 + jobs); ++k)
      fut.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, one, k));
    for (size_t k = 0; k < fut.size(); ++k) out[k0 + k] = fut[k].get();
  }
  return out;
}

json simulate(const RunConfig& c, const LoadedDesign& ld, int jobs, const fs::path& dir,
              std::ostream& log) {
  auto models = build_models(c);
  auto g = build_graph(c);
  const auto& d = ld.design;
  auto ets = ets_params(c, d.Omega);
  auto cfg = sim_config(c);
  auto tr = run_closed_loop(models, d.gain, ets, g, cfg);
  {
    std::ofstream f(dir / "trace.csv", std::ios::binary);
    if (!f) throw Error(Errc::Io, "cannot write trace.csv");
    write_trace_csv(f, tr);
  }
  cfg.static_rule = true;
  auto ts = run_closed_loop(models, d.gain, ets, g, cfg);

  auto ce = consensus_error(tr);
  const double ratio = ce(0) > 0 ? ce(c.horizon) / ce(0) : 0.0;
  json s;
  s["design_status"] = ld.status;
  s["certified"] = ld.feasible;
  s["horizon"] = c.horizon;
  s["consensus_error_initial"] = ce(0);
  s["consensus_error_final"] = ce(c.horizon);
  s["consensus_ratio"] = ratio;
  auto counts = broadcast_counts(tr);
  s["broadcasts"] = vec_json(counts);
  s["broadcasts_static"] = vec_json(Eigen::VectorXi(broadcast_counts(ts)));
  s["samples_per_agent"] = c.horizon / c.h;
  s["eta_min"] = nan_min(tr.eta);
  s["eta_final"] = vec_json(Eigen::VectorXd(tr.eta.col(c.horizon)));
  if (d.cert.P.rows() == lifted_error(tr, 0).size()) {
    auto ly = lyapunov_decrease_check(tr, d.cert.P);
    int bad = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& st : ly)
      if (st.eps_norm > 1e-9) {
        worst = std::max(worst, st.margin);
        if (!(st.margin < 0)) ++bad;
      }
    s["lyapunov_nonnegative_steps"] = bad;
    s["lyapunov_worst_margin"] = worst;
  }
  if (c.disturbance.kind != DisturbanceSpec::Kind::Zero) s["empirical_l2_gain"] = empirical_l2_gain(tr);
  if (d.gamma > 0) {
    auto gains = hinf_gains(c, d, jobs);
    s["hinf_gamma"] = d.gamma;
    s["hinf_empirical_gains"] = gains;
  }
  write_text(dir / "summary.json", s.dump(2) + "\n");

  log << "consensus error " << ce(0) << " -> " << ce(c.horizon) << " (ratio " << ratio << ")\n";
  log << "broadcasts " << counts.transpose() << " of " << c.horizon / c.h << " samples; static rule "
      << broadcast_counts(ts).transpose() << "\n";
  log << "min eta " << nan_min(tr.eta) << "\n";
  return s;
}

std::string report(const SimTrace& tr, const fs::path& dir) {
  const int H = tr.horizon, na = tr.agents();
  std::vector<double> t(H + 1);
  for (int k = 0; k <= H; ++k) t[k] = k;

  std::vector<report::Chart> st;
  const int n = static_cast<int>(tr.x[0].rows());
  for (int r = 0; r < n; ++r) {
    report::Chart ch{"state component " + std::to_string(r), "step", "x" + std::to_string(r), {}};
    for (int i = 0; i < na; ++i) {
      report::Series s{i == 0 ? "leader" : "agent " + std::to_string(i), t, {}};
      for (int k = 0; k <= H; ++k) s.y.push_back(tr.x[i](r, k));
      ch.series.push_back(s);
    }
    st.push_back(ch);
  }
  write_text(dir / "states.svg", report::render(st));

  report::Chart eta{"dynamic variables", "step", "eta", {}};
  for (int i = 0; i < na; ++i) {
    report::Series s{"eta " + std::to_string(i), t, {}};
    for (int k = 0; k <= H; ++k) s.y.push_back(tr.eta(i, k));
    eta.series.push_back(s);
  }
  write_text(dir / "eta.svg", report::render({eta}));

  // one stem row per agent: release interval at each broadcast
  std::vector<report::Chart> bc;
  for (int i = 0; i < na; ++i) {
    report::Chart ch{"broadcast instants, agent " + std::to_string(i), "step", "interval", {}};
    report::Series s{"agent " + std::to_string(i), {}, {}, true};
    int last = 0;
    for (int k = 0; k <= H; ++k)
      if (tr.broadcast(i, k)) {
        s.x.push_back(k);
        s.y.push_back(k == 0 ? 0 : k - last);
        last = k;
      }
    ch.series.push_back(s);
    bc.push_back(ch);
  }
  write_text(dir / "broadcasts.svg", report::render(bc, 760, 160));

  auto ce = consensus_error(tr);
  report::Chart cc{"consensus error", "step", "max |x_i - x_0|", {}};
  cc.series.push_back({"error", t, std::vector<double>(ce.data(), ce.data() + ce.size())});
  bool pos = ce.size() > 0 && ce.minCoeff() > 0;
  cc.logy = pos;
  write_text(dir / "consensus.svg", report::render({cc}));

  auto counts = broadcast_counts(tr);
  std::ostringstream md;
  md << "# Closed-loop run\n\n";
  md << "Horizon " << H << " steps, trigger checked every " << tr.h << " step(s).\n\n";
  md << "| agent | broadcasts | min eta | final eta |\n|---|---|---|---|\n";
  for (int i = 0; i < na; ++i) {
    Eigen::MatrixXd row = tr.eta.row(i);
    md << "| " << i << " | " << counts(i) << " | " << nan_min(row) << " | " << tr.eta(i, H) << " |\n";
  }
  md << "\nConsensus error: initial " << ce(0) << ", final " << ce(H);
  if (ce(0) > 0) md << " (ratio " << ce(H) / ce(0) << ")";
  md << ".\n\n![states](states.svg)\n\n![eta](eta.svg)\n\n![broadcasts](broadcasts.svg)\n\n"
        "![consensus](consensus.svg)\n";
  write_text(dir / "report.md", md.str());
  return md.str();
}

template <class F>
int guarded(std::ostream& log, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

fs::path out_dir(const RunConfig& c) {
  fs::path p(c.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(Errc::Io, "cannot create " + p.string());
  return p;
}

}  // namespace

int cmd_collect(const Options& o, std::ostream& log) {
  return guarded(log, [&] {
    auto c = resolve(o);
    auto dir = out_dir(c);
    auto ds = collect(c);
    {
      std::ofstream f(dir / "data.csv", std::ios::binary);
      if (!f) throw Error(Errc::Io, "cannot write data.csv");
      write_dataset_csv(f, ds);
    }
    json side = {{"seed", c.seed}, {"wbar", c.wbar}, {"rho", c.rho}, {"input", {c.u_lo, c.u_hi}},
                 {"agents", ds.agents()}};
    write_text(dir / "data.json", side.dump(2) + "\n");
    log << "wrote " << (dir / "data.csv").string() << " (" << ds.agents() << " agents, rho "
        << ds.rho << ")\n";
    return kOk;
  });
}

int cmd_design(const Options& o, std::ostream& log) {
  return guarded(log, [&] {
    auto c = resolve(o);
    auto dir = out_dir(c);
    json j;
    int code;
    if (o.method == "model") {
      auto r = design_model(c);
      print_design(r, log);
      j = design_to_json(r, "model");
      code = status_exit(r.sol);
    } else if (o.method == "data") {
      auto r = design_data(c, read_data(c));
      print_design(r, log);
      j = design_to_json(r, "data");
      code = status_exit(r.sol);
    } else if (o.method == "hinf") {
      if (o.gamma && !(*o.gamma > 0)) throw Error(Errc::NonPositiveGamma, "gamma must be positive");
      auto h = design_hinf(c, read_data(c), o.gamma);
      log << "stage one: ";
      print_design(h.stage1, log);
      log << "stage two at gamma " << h.gamma << ": ";
      print_design(h.stage2, log);
      j = design_to_json(h.stage2, "hinf");
      j["gamma"] = h.gamma;
      j["stage1"] = design_to_json(h.stage1, "data");
      json hist = json::array();
      for (auto [g, f] : h.history) hist.push_back({{"gamma", g}, {"feasible", f}});
      j["bisection"] = hist;
      code = status_exit(h.stage2.sol);
    } else {
      throw Error(Errc::Config, "method is model, data or hinf");
    }
    write_text(dir / "design.json", j.dump(2) + "\n");
    return code;
  });
}

int cmd_simulate(const Options& o, std::ostream& log) {
  return guarded(log, [&] {
    auto c = resolve(o);
    auto dir = out_dir(c);
    const fs::path dp = o.design.empty() ? dir / "design.json" : fs::path(o.design);
    auto ld = design_from_json(read_json(dp), build_graph(c));
    if (!ld.feasible) log << "warning: design is not certified (" << ld.status << ")\n";
    simulate(c, ld, o.jobs, dir, log);
    return kOk;
  });
}

int cmd_report(const Options& o, std::ostream& log) {
  try {
    fs::path tp = o.trace;
    fs::path dir;
    if (tp.empty()) {
      auto c = resolve(o);
      dir = out_dir(c);
      tp = dir / "trace.csv";
    } else {
      dir = o.out.empty() ? tp.parent_path() : fs::path(o.out);
      if (dir.empty()) dir = ".";
      fs::create_directories(dir);
    }
    std::ifstream f(tp);
    if (!f) throw Error(Errc::Io, "cannot open " + tp.string());
    SimTrace tr;
    try {
      tr = read_trace_csv(f);
    } catch (const Error& e) {
      log << "error: malformed trace: " << e.what() << "\n";
      return kConfig;
    }
    report(tr, dir);
    log << "wrote report to " << dir.string() << "\n";
    return kOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return e.code() == Errc::Io ? kConfig : exit_code(e.code());
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

int cmd_repro_example1(const Options& o, std::ostream& log) {
  return guarded(log, [&] {
    Options e = o;
    e.config.clear();
    auto c = resolve(e);
    auto dir = out_dir(c);
    e.out = c.out;
    log << "== collect\n";
    if (int r = cmd_collect(e, log)) return r;
    log << "== design (data)\n";
    e.method = "data";
    const int dcode = cmd_design(e, log);
    if (dcode != kOk && dcode != kInfeasible) return dcode;
    auto ld = design_from_json(read_json(dir / "design.json"), build_graph(c));
    if (!ld.feasible) log << "design not certified; simulating the returned iterate\n";
    log << "== simulate\n";
    auto s = simulate(c, ld, o.jobs, dir, log);
    log << "== report\n";
    std::ifstream f(dir / "trace.csv");
    report(read_trace_csv(f), dir);

    const double ratio = s["consensus_ratio"].get<double>();
    int tot = 0;
    for (int k : s["broadcasts"]) tot += k;
    const int samples = s["samples_per_agent"].get<int>();
    log << "\nsummary\n";
    log << "  feasible: " << (ld.feasible ? "yes" : "no") << " (" << ld.status << ")\n";
    log << "  consensus ratio: " << ratio << (ratio <= 0.05 ? " (<= 5%)" : " (> 5%)") << "\n";
    log << "  broadcasts: " << s["broadcasts"].dump() << ", aggregate " << tot << " of "
        << samples * static_cast<int>(s["broadcasts"].size()) << "\n";
    log << "  static rule: " << s["broadcasts_static"].dump() << "\n";
    log << "  min eta: " << s["eta_min"].get<double>() << "\n";
    return dcode;
  });
}

int run(int argc, char** argv, std::ostream& log) {
  CLI::App app{"Event-triggered leader-following consensus: design and simulation"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "run configuration (JSON)");
    s->add_option("--seed", o.seed, "data collection seed");
    s->add_option("--out", o.out, "output directory");
    s->add_option("--jobs", o.jobs, "parallel independent runs")->check(CLI::PositiveNumber);
  };
  auto* col = app.add_subcommand("collect", "generate a noisy trajectory");
  common(col);
  auto* des = app.add_subcommand("design", "solve the design LMIs");
  common(des);
  des->add_option("--method", o.method, "model, data or hinf")
      ->check(CLI::IsMember({"model", "data", "hinf"}));
  des->add_option("--gamma", o.gamma, "fixed H-inf level (skips bisection)");
  auto* sim = app.add_subcommand("simulate", "closed-loop event-triggered run");
  common(sim);
  sim->add_option("--design", o.design, "design file (default OUT/design.json)");
  auto* rep = app.add_subcommand("report", "charts and summary from a trace");
  common(rep);
  rep->add_option("--trace", o.trace, "trace CSV (default OUT/trace.csv)");
  auto* rex = app.add_subcommand("repro-example1", "full pipeline with the embedded example");
  rex->add_option("--seed", o.seed, "data collection seed");
  rex->add_option("--out", o.out, "output directory");
  rex->add_option("--jobs", o.jobs, "parallel independent runs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, log, log);
    return kConfig;
  }
  if (*col) return cmd_collect(o, log);
  if (*des) return cmd_design(o, log);
  if (*sim) return cmd_simulate(o, log);
  if (*rep) return cmd_report(o, log);
  return cmd_repro_example1(o, log);
}

}  // namespace etc::cli
