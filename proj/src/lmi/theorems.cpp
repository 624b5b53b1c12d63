#include "etc/lmi/theorems.hpp"

#include <cmath>
#include <set>
#include <string>

#include "etc/error.hpp"

namespace etc::lmi {

using Eigen::MatrixXd;

Dims dims_of(const LiftedSystem& s) { return Dims{s.N, s.n, s.m}; }

Selectors selectors(int L) {
  Selectors s;
  for (int i = 0; i < 5; ++i) {
    s.H[i] = MatrixXd::Zero(L, 5 * L);
    s.H[i].middleCols(i * L, L).setIdentity();
  }
  return s;
}

void validate_design_params(const DesignParams& p, const DirectedGraph& g) {
  const int n_agents = g.size();
  if (p.lambda.size() != n_agents || p.theta.size() != n_agents)
    throw Error(Errc::DimensionMismatch, "lambda/theta need one entry per agent");
  for (int i = 0; i < n_agents; ++i) {
    if (!(p.theta(i) > 0) || !(p.lambda(i) > 0) ||
        1.0 - p.lambda(i) - 1.0 / p.theta(i) < 0.0)
      throw Error(Errc::LambdaThetaViolation,
                  "agent " + std::to_string(i) + " violates 1 - lambda - 1/theta >= 0");
  }
  if (!(p.sigma0 > 0)) throw Error(Errc::SigmaPatternMismatch, "sigma_0 must be positive");
  std::set<std::pair<int, int>> edges;
  for (auto e : g.follower_edges()) edges.insert(e);
  for (const auto& [e, s] : p.sigma) {
    if (!edges.count(e) && s != 0.0)
      throw Error(Errc::SigmaPatternMismatch, "sigma on a pair without an edge");
    if (edges.count(e) && !(s > 0))
      throw Error(Errc::SigmaPatternMismatch, "sigma must be positive on edges");
  }
  for (auto e : edges)
    if (!p.sigma.count(e)) throw Error(Errc::SigmaPatternMismatch, "edge without sigma");
  if (!(p.h_lo >= 1) || p.h_hi < p.h_lo) throw Error(Errc::Config, "need 1 <= h_lo <= h_hi");
}

CoreVars add_core_vars(Problem& p, int L) {
  CoreVars v;
  v.P = p.symmetric("P", L);
  v.R1 = p.symmetric("R1", L);
  v.R2 = p.symmetric("R2", L);
  v.S = p.symmetric("S", 2 * L);
  v.M1 = p.full("M1", 5 * L, L);
  v.M2 = p.full("M2", 5 * L, L);
  return v;
}

XiBlocks build_xi_blocks(const Problem& p, const CoreVars& v, const Selectors& H) {
  const MatrixXd D21 = H[2] - H[1];
  MatrixXd H34(2 * H[3].rows(), H[3].cols());
  H34 << H[3], H[4];
  Expr Ss = H34.transpose() * p(v.S) * H34;
  XiBlocks x;
  x.Xi0 = sym(p(v.M1) * MatrixXd(H[1] - H[3]) + p(v.M2) * MatrixXd(H[4] - H[1])) +
          H[2].transpose() * p(v.P) * H[2] - H[1].transpose() * p(v.P) * H[1] +
          D21.transpose() * (p(v.R2) - p(v.R1)) * D21 - Ss;
  x.Xi1 = D21.transpose() * p(v.R2) * D21 - Ss;
  x.Xi2 = D21.transpose() * p(v.R1) * D21 + Ss;
  return x;
}

namespace {

// Block placement matrix for agent i: follower i -> block i-1, leader -> block N.
MatrixXd place(int agent, int N, int n) {
  MatrixXd P = MatrixXd::Zero((N + 1) * n, n);
  int b = agent == 0 ? N : agent - 1;
  P.middleRows(b * n, n).setIdentity();
  return P;
}

}  // namespace

EtsWeights build_ets_weights(const std::vector<Expr>& Om, const DesignParams& prm,
                             const DirectedGraph& g) {
  const int N = g.followers();
  if (static_cast<int>(Om.size()) != N + 1)
    throw Error(Errc::DimensionMismatch, "one Omega per agent");
  const int n = Om[0].rows();
  const int L = (N + 1) * n;
  std::set<std::pair<int, int>> edges;
  for (auto e : g.follower_edges()) edges.insert(e);
  for (const auto& [e, s] : prm.sigma)
    if (!edges.count(e) && s != 0.0)
      throw Error(Errc::SigmaPatternMismatch, "sigma on a pair without an edge");
  EtsWeights w{Expr(L, L), Expr(L, L)};
  for (auto [i, j] : edges) {
    double s = prm.sigma.count({i, j}) ? prm.sigma.at({i, j}) : 0.0;
    if (s == 0.0) continue;
    MatrixXd Pi = place(i, N, n);
    w.Oa += s * (Pi * Om[i] * MatrixXd(Pi.transpose()));
    if (j != 0) {
      // s (e_i - e_j)^T Omega_i (e_i - e_j)
      MatrixXd Pj = place(j, N, n);
      w.Oa += s * (Pj * Om[i] * MatrixXd(Pj.transpose()));
      w.Oa -= s * (Pi * Om[i] * MatrixXd(Pj.transpose()));
      w.Oa -= s * (Pj * Om[i] * MatrixXd(Pi.transpose()));
    }
  }
  MatrixXd P0 = place(0, N, n);
  double lead = prm.scale_leader_block ? prm.sigma0 : 1.0;
  w.Oa += lead * (P0 * Om[0] * MatrixXd(P0.transpose()));
  for (int i = 1; i <= N; ++i) {
    MatrixXd Pi = place(i, N, n);
    w.Ob += Pi * Om[i] * MatrixXd(Pi.transpose());
    w.Ob += Pi * Om[i] * MatrixXd(P0.transpose());
    w.Ob += P0 * Om[i] * MatrixXd(Pi.transpose());
    w.Ob += P0 * Om[i] * MatrixXd(P0.transpose());
  }
  w.Ob += P0 * Om[0] * MatrixXd(P0.transpose());
  return w;
}

Expr build_trigger_block(const EtsWeights& w, const Selectors& H) {
  const MatrixXd D35 = H[3] - H[5];
  return H[5].transpose() * w.Oa * H[5] - D35.transpose() * w.Ob * D35;
}

std::pair<MatrixXd, MatrixXd> ets_weight_matrices(const std::vector<MatrixXd>& Om,
                                                  const DesignParams& prm,
                                                  const DirectedGraph& g) {
  std::vector<Expr> e;
  for (const auto& o : Om) e.emplace_back(o);
  auto w = build_ets_weights(e, prm, g);
  return {w.Oa.constant(), w.Ob.constant()};
}

namespace {

std::vector<double> vertices(const DesignParams& prm) {
  std::vector<double> h{prm.h_lo};
  if (prm.h_hi != prm.h_lo) h.push_back(prm.h_hi);
  return h;
}

std::string vlabel(const char* th, int s, double h) {
  return std::string(th) + " s=" + std::to_string(s) + " h=" + std::to_string(h);
}

void add_core_positivity(Problem& p, const CoreVars& v) {
  p.pos_def(p(v.P), "P");
  p.pos_def(p(v.R1), "R1");
  p.pos_def(p(v.R2), "R2");
}

// G = I_{N+1} (x) G_c with a single shared n x n block.
VarId add_block_g(Problem& p, const Dims& d) {
  std::vector<Atom> atoms;
  for (int c = 0; c < d.n; ++c)
    for (int r = 0; r < d.n; ++r) {
      Atom a;
      for (int b = 0; b <= d.N; ++b) a.entries.emplace_back(b * d.n + r, b * d.n + c, 1.0);
      atoms.push_back(std::move(a));
    }
  return p.structured("G", d.L(), d.L(), std::move(atoms));
}

// Block gain with the lifted sparsity pattern. Atoms: K_0 first, then each edge in order.
VarId add_block_k(Problem& p, const Dims& d, const std::vector<std::pair<int, int>>& edges) {
  std::vector<Atom> atoms;
  for (int c = 0; c < d.n; ++c)
    for (int r = 0; r < d.m; ++r)
      atoms.push_back(Atom{{{d.N * d.m + r, d.N * d.n + c, 1.0}}});
  for (auto [i, j] : edges)
    for (int c = 0; c < d.n; ++c)
      for (int r = 0; r < d.m; ++r) {
        Atom a;
        a.entries.emplace_back((i - 1) * d.m + r, (i - 1) * d.n + c, 1.0);
        if (j != 0) a.entries.emplace_back((i - 1) * d.m + r, (j - 1) * d.n + c, -1.0);
        atoms.push_back(std::move(a));
      }
  return p.structured("Kc", d.Lm(), d.L(), std::move(atoms));
}

std::vector<VarId> add_omegas(Problem& p, const Dims& d) {
  std::vector<VarId> om;
  for (int i = 0; i <= d.N; ++i) {
    om.push_back(p.symmetric("Omega" + std::to_string(i), d.n));
    p.pos_def(p(om.back()), "Omega" + std::to_string(i));
  }
  return om;
}

MatrixXd multiplier_d(const Selectors& H, double eps) {
  return (H[1] + eps * H[2]).transpose();
}

// Structured Q_d: atom T fills -1 at (T, T) and wbar^2 on the noise diagonal.
VarId add_multiplier(Problem& p, int rho, int nw, double wbar, bool free_q) {
  std::vector<Atom> atoms;
  const int dim = rho + nw;
  if (free_q) {
    for (int t = 0; t < rho; ++t) {
      Atom a;
      a.entries.emplace_back(t, t, -1.0);
      for (int k = 0; k < nw; ++k) a.entries.emplace_back(rho + k, rho + k, wbar * wbar);
      atoms.push_back(std::move(a));
    }
  } else {
    Atom a;
    for (int t = 0; t < rho; ++t) a.entries.emplace_back(t, t, -1.0);
    for (int k = 0; k < nw; ++k) a.entries.emplace_back(rho + k, rho + k, rho * wbar * wbar);
    atoms.push_back(std::move(a));
  }
  return p.structured("Qd", dim, dim, std::move(atoms));
}

void add_multiplier_sign(Problem& p, VarId Qd, int rho, int nw, bool free_q) {
  const int dim = rho + nw;
  const int cnt = free_q ? rho : 1;
  Expr q(cnt, 1);
  for (int t = 0; t < cnt; ++t) {
    MatrixXd L = MatrixXd::Zero(cnt, dim);
    L(t, t) = -1.0;
    MatrixXd R = MatrixXd::Zero(dim, 1);
    R(t, 0) = 1.0;
    q += L * p(Qd) * R;
  }
  p.nonneg(q, "q");
}

// Rows [eps; u] of Theta come first, eps+ last.
struct DataPrecond {
  MatrixXd Pi;    // whitening on the [eps; u] rows
  MatrixXd Ahat;  // centering, L x (L + Lm)
};

DataPrecond data_precond(const ThetaAB& th, bool on) {
  const int a = th.L + th.Lm;
  const int rho = static_cast<int>(th.C.cols());
  DataPrecond pc;
  MatrixXd Z = -th.C.topRows(a);
  MatrixXd Ep = th.C.bottomRows(th.L);
  MatrixXd ZZ = Z * Z.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(ZZ);
  const auto& ev = es.eigenvalues();
  if (ev.size() == 0 || ev(ev.size() - 1) <= 0 ||
      std::sqrt(std::max(ev(0), 0.0) / ev(ev.size() - 1)) < 1e-8)
    throw Error(Errc::DegenerateData,
                "[E; U] is row-rank deficient; the data LMIs cannot be strictly feasible");
  if (!on) {
    pc.Pi = MatrixXd::Identity(a, a);
    pc.Ahat = MatrixXd::Zero(th.L, a);
    return pc;
  }
  pc.Pi = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
          es.eigenvectors().transpose() * std::sqrt(double(rho));
  pc.Ahat = Ep * Z.transpose() * es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
  return pc;
}

struct DataLayout {
  int a, b, c, extra;
};

// Congruence Gamma: rows a scaled by Pi, rows b get D Ahat times rows a (before scaling).
MatrixXd gamma_matrix(const DataPrecond& pc, const MatrixXd& Dm, const DataLayout& lay) {
  const int tot = lay.a + lay.b + lay.c + lay.extra;
  MatrixXd G = MatrixXd::Identity(tot, tot);
  G.topLeftCorner(lay.a, lay.a) = pc.Pi;
  G.block(lay.a, 0, lay.b, lay.a) = Dm * pc.Ahat;
  return G;
}

// Gamma V [C, Bw] with V = [I 0; 0 D; 0 0].
MatrixXd data_factor(const ThetaAB& th, const MatrixXd& Dm, const MatrixXd& Gam,
                     const DataLayout& lay) {
  const int a = lay.a;
  const int tot = lay.a + lay.b + lay.c + lay.extra;
  MatrixXd Lf(th.C.rows(), th.C.cols() + th.Bw.cols());
  Lf << th.C, th.Bw;
  MatrixXd VL = MatrixXd::Zero(tot, Lf.cols());
  VL.topRows(a) = Lf.topRows(a);
  VL.middleRows(a, lay.b) = Dm * Lf.bottomRows(th.L);
  return Gam * VL;
}

}  // namespace

namespace {

LmiProblem theorem1_impl(const LiftedSystem& sys, const BlockGain& K,
                         const std::vector<MatrixXd>& Om, const DesignParams& prm,
                         const DirectedGraph& g, bool free_scale) {
  validate_design_params(prm, g);
  LmiProblem lp;
  lp.theorem = Theorem::Analysis;
  lp.dims = dims_of(sys);
  lp.params = prm;
  lp.edges = g.follower_edges();
  const int L = lp.dims.L();
  if (K.K.rows() != lp.dims.Lm() || K.K.cols() != L)
    throw Error(Errc::DimensionMismatch, "block gain shape");
  auto& p = lp.prob;
  lp.core = add_core_vars(p, L);
  lp.F = p.full("F", 5 * L, L);
  if (free_scale) lp.gscale = p.scalar("kappa");
  add_core_positivity(p, lp.core);
  if (free_scale) p.pos_def(p(*lp.gscale), "kappa");
  auto H = selectors(L);
  auto xi = build_xi_blocks(p, lp.core, H);
  std::vector<Expr> om;
  for (const auto& o : Om) {
    if (o.rows() != lp.dims.n || o.cols() != lp.dims.n)
      throw Error(Errc::DimensionMismatch, "Omega_i shape");
    om.push_back(free_scale ? kron(p(*lp.gscale), o) : Expr(o));
  }
  Expr Q = build_trigger_block(build_ets_weights(om, prm, g), H);
  MatrixXd closed = sys.A * H[1] + sys.B * K.K * H[5] - H[2];
  Expr Psi = sym(p(*lp.F) * closed);
  for (double h : vertices(prm))
    for (int s = 1; s <= 2; ++s) {
      const Expr& Xs = s == 1 ? xi.Xi1 : xi.Xi2;
      VarId M = s == 1 ? lp.core.M1 : lp.core.M2;
      VarId R = s == 1 ? lp.core.R1 : lp.core.R2;
      Expr top = xi.Xi0 + h * Xs + Psi + Q;
      Expr blk = Expr::blocks({{top, h * p(M)}, {h * p(M).transpose(), -h * p(R)}});
      p.neg_def(blk, vlabel("th1", s, h));
    }
  return lp;
}

}  // namespace

LmiProblem assemble_theorem1(const LiftedSystem& sys, const BlockGain& K,
                             const std::vector<MatrixXd>& Om, const DesignParams& prm,
                             const DirectedGraph& g) {
  return theorem1_impl(sys, K, Om, prm, g, false);
}

LmiProblem assemble_theorem2(const LiftedSystem& sys, const DesignParams& prm,
                             const DirectedGraph& g) {
  validate_design_params(prm, g);
  LmiProblem lp;
  lp.theorem = Theorem::ModelDesign;
  lp.dims = dims_of(sys);
  lp.params = prm;
  lp.edges = g.follower_edges();
  const int L = lp.dims.L();
  auto& p = lp.prob;
  lp.core = add_core_vars(p, L);
  lp.G = add_block_g(p, lp.dims);
  lp.Kc = add_block_k(p, lp.dims, lp.edges);
  add_core_positivity(p, lp.core);
  lp.Om = add_omegas(p, lp.dims);
  auto H = selectors(L);
  auto xi = build_xi_blocks(p, lp.core, H);
  std::vector<Expr> om;
  for (auto v : lp.Om) om.push_back(p(v));
  Expr Q = build_trigger_block(build_ets_weights(om, prm, g), H);
  MatrixXd Dm = multiplier_d(H, prm.eps_D);
  Expr inner = sys.A * p(*lp.G) * H[1] + sys.B * p(*lp.Kc) * H[5] - p(*lp.G) * H[2];
  Expr Psi = sym(Dm * inner);
  for (double h : vertices(prm))
    for (int s = 1; s <= 2; ++s) {
      const Expr& Xs = s == 1 ? xi.Xi1 : xi.Xi2;
      VarId M = s == 1 ? lp.core.M1 : lp.core.M2;
      VarId R = s == 1 ? lp.core.R1 : lp.core.R2;
      Expr top = xi.Xi0 + h * Xs + Psi + Q;
      Expr blk = Expr::blocks({{top, h * p(M)}, {h * p(M).transpose(), -h * p(R)}});
      p.neg_def(blk, vlabel("th2", s, h));
    }
  return lp;
}

namespace {

LmiProblem assemble_data(const ThetaAB& th, const Dims& d, const DesignParams& prm,
                         const DirectedGraph& g, const MatrixXd* Bd, double gamma,
                         const MatrixXd* G_fixed) {
  validate_design_params(prm, g);
  if (th.L != d.L() || th.Lm != d.Lm())
    throw Error(Errc::DimensionMismatch, "theta does not match the agent dimensions");
  const bool hinf = Bd != nullptr;
  LmiProblem lp;
  lp.theorem = hinf ? Theorem::HinfDesign : Theorem::DataDesign;
  lp.dims = d;
  lp.params = prm;
  lp.edges = g.follower_edges();
  lp.gamma = gamma;
  const int L = d.L(), Lm = d.Lm();
  const int rho = static_cast<int>(th.C.cols());
  const int nw = static_cast<int>(th.Bw.cols());
  auto& p = lp.prob;
  lp.core = add_core_vars(p, L);
  Expr Gx;
  if (hinf) {
    lp.G_fixed = *G_fixed;
    lp.gscale = p.scalar("gscale");
    p.pos_def(p(*lp.gscale), "gscale");
  } else {
    lp.G = add_block_g(p, d);
  }
  lp.Kc = add_block_k(p, d, lp.edges);
  lp.Qd = add_multiplier(p, rho, nw, th.wbar, prm.free_q);
  add_core_positivity(p, lp.core);
  lp.Om = add_omegas(p, d);
  add_multiplier_sign(p, *lp.Qd, rho, nw, prm.free_q);

  auto H = selectors(L);
  auto xi = build_xi_blocks(p, lp.core, H);
  std::vector<Expr> om;
  for (auto v : lp.Om) om.push_back(p(v));
  Expr Q = build_trigger_block(build_ets_weights(om, prm, g), H);
  const MatrixXd Dm = multiplier_d(H, prm.eps_D);
  // G H_i as expressions; for stage two G = gscale * G_fixed.
  auto g_times = [&](const MatrixXd& Hi) {
    if (hinf) return kron(p(*lp.gscale), MatrixXd(*G_fixed * Hi));
    return p(*lp.G) * Hi;
  };
  Expr Fx = Expr::blocks({{g_times(H[1])}, {p(*lp.Kc) * H[5]}});
  Expr PsiHat = sym(-1.0 * (Dm * g_times(H[2])));

  DataLayout lay{L + Lm, 5 * L, L, hinf ? 2 * L : 0};
  DataPrecond pc = data_precond(th, prm.precondition);
  MatrixXd Gam = gamma_matrix(pc, Dm, lay);
  MatrixXd Lf = data_factor(th, Dm, Gam, lay);
  Expr dataTerm = Lf * p(*lp.Qd) * MatrixXd(Lf.transpose());

  const int a = lay.a, b = lay.b, c = lay.c;
  for (double h : vertices(prm))
    for (int s = 1; s <= 2; ++s) {
      const Expr& Xs = s == 1 ? xi.Xi1 : xi.Xi2;
      VarId M = s == 1 ? lp.core.M1 : lp.core.M2;
      VarId R = s == 1 ? lp.core.R1 : lp.core.R2;
      Expr mid = xi.Xi0 + h * Xs + PsiHat + Q;
      Expr blk;
      if (!hinf) {
        blk = Expr::blocks({{Expr(a, a), Fx, Expr(a, c)},
                            {Fx.transpose(), mid, h * p(M)},
                            {Expr(c, a), h * p(M).transpose(), -h * p(R)}});
      } else {
        // disturbance row scaled by 1/gscale; H1' G' G H1 through a Schur block
        MatrixXd dist = Dm * *Bd * *G_fixed;
        MatrixXd corner = -gamma * gamma * G_fixed->transpose() * *G_fixed;
        Expr gh1 = g_times(H[1]);
        blk = Expr::blocks(
            {{Expr(a, a), Fx, Expr(a, c), Expr(a, L), Expr(a, L)},
             {Fx.transpose(), mid, h * p(M), Expr(dist), gh1.transpose()},
             {Expr(c, a), h * p(M).transpose(), -h * p(R), Expr(c, L), Expr(c, L)},
             {Expr(L, a), Expr(MatrixXd(dist.transpose())), Expr(L, c), Expr(corner),
              Expr(L, L)},
             {Expr(L, a), gh1, Expr(L, c), Expr(L, L), Expr(MatrixXd(-MatrixXd::Identity(L, L)))}});
      }
      blk = Gam * blk * MatrixXd(Gam.transpose()) + dataTerm;
      p.neg_def(blk, vlabel(hinf ? "th4" : "th3", s, h));
    }
  (void)b;
  return lp;
}

}  // namespace

LmiProblem assemble_theorem3(const ThetaAB& theta, const Dims& d, const DesignParams& prm,
                             const DirectedGraph& g) {
  return assemble_data(theta, d, prm, g, nullptr, 0.0, nullptr);
}

LmiProblem assemble_theorem4(const ThetaAB& theta, const Dims& d, const MatrixXd& Bd,
                             double gamma, const std::optional<MatrixXd>& G_fixed,
                             const DesignParams& prm, const DirectedGraph& g) {
  if (!(gamma > 0)) throw Error(Errc::NonPositiveGamma, "gamma must be positive");
  if (!G_fixed) throw Error(Errc::MissingStageOne, "stage two needs G from a data-based design");
  if (Bd.rows() != d.L() || Bd.cols() != d.L() || G_fixed->rows() != d.L() ||
      G_fixed->cols() != d.L())
    throw Error(Errc::DimensionMismatch, "B_d and G must be L x L");
  return assemble_data(theta, d, prm, g, &Bd, gamma, &*G_fixed);
}

LmiProblem assemble_analysis(const LiftedSystem& sys, const Design& d, const DesignParams& prm,
                             const DirectedGraph& g) {
  return theorem1_impl(sys, d.gain, d.Omega, prm, g, true);
}

Design recover_design(const LmiProblem& lp, const Solution& sol, const DirectedGraph& g) {
  if (lp.theorem == Theorem::Analysis)
    throw Error(Errc::MissingVariables, "analysis problems carry no design variables");
  const auto& p = lp.prob;
  const Dims& d = lp.dims;
  const int L = d.L();
  Design out;
  out.theorem = lp.theorem;
  out.gamma = lp.gamma;
  MatrixXd G = lp.gscale ? MatrixXd(p.value(*lp.gscale, sol.x)(0, 0) * lp.G_fixed)
                         : p.value(*lp.G, sol.x);
  Eigen::JacobiSVD<MatrixXd> svd(G);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0) || sv(sv.size() - 1) < 1e-9 * sv(0))
    throw Error(Errc::SingularG, "G is numerically singular");
  out.G = G;
  const MatrixXd Gc = G.bottomRightCorner(d.n, d.n);
  const MatrixXd Gci = Gc.inverse();
  const MatrixXd Gi = G.inverse();
  MatrixXd Kc = p.value(*lp.Kc, sol.x);

  std::map<std::pair<int, int>, MatrixXd> pair;
  for (auto [i, j] : lp.edges) {
    // atom layout: the (i, j) gain sits at block (i, j) with a minus sign when j is a follower
    MatrixXd Kij(d.m, d.n);
    const auto& var = p.var(*lp.Kc);
    int idx = d.m * d.n;
    for (auto e : lp.edges) {
      if (e == std::make_pair(i, j)) break;
      idx += d.m * d.n;
    }
    for (int c = 0; c < d.n; ++c)
      for (int r = 0; r < d.m; ++r) Kij(r, c) = sol.x(var.offset + idx + c * d.m + r);
    pair[{i, j}] = Kij * Gci;
  }
  MatrixXd K0 = Kc.block(d.N * d.m, d.N * d.n, d.m, d.n) * Gci;
  out.gain = lift_controller(K0, pair, g);
  for (auto v : lp.Om) {
    MatrixXd Ob = p.value(v, sol.x);
    MatrixXd Oi = Gci.transpose() * Ob * Gci;
    out.Omega.push_back(0.5 * (Oi + Oi.transpose()));
  }
  std::tie(out.Omega_a, out.Omega_b) = ets_weight_matrices(out.Omega, lp.params, g);
  if (lp.Qd) {
    const auto& var = p.var(*lp.Qd);
    out.q = sol.x.segment(var.offset, var.atoms.size());
  }
  // Analysis certificate by congruence with T = I_5 (x) G.
  MatrixXd Ti = MatrixXd::Zero(5 * L, 5 * L);
  for (int k = 0; k < 5; ++k) Ti.block(k * L, k * L, L, L) = Gi;
  MatrixXd T2i = Ti.topLeftCorner(2 * L, 2 * L);
  auto cong = [&](const MatrixXd& X) { return MatrixXd(Gi.transpose() * X * Gi); };
  out.cert.P = cong(p.value(lp.core.P, sol.x));
  out.cert.R1 = cong(p.value(lp.core.R1, sol.x));
  out.cert.R2 = cong(p.value(lp.core.R2, sol.x));
  out.cert.S = T2i.transpose() * p.value(lp.core.S, sol.x) * T2i;
  out.cert.M1 = Ti.transpose() * p.value(lp.core.M1, sol.x) * Gi;
  out.cert.M2 = Ti.transpose() * p.value(lp.core.M2, sol.x) * Gi;
  out.cert.F = Ti.transpose() * multiplier_d(selectors(L), lp.params.eps_D);
  return out;
}

}  // namespace etc::lmi
