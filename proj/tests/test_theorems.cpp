#include <gtest/gtest.h>

#include <random>

#include "etc/error.hpp"
#include "etc/lmi/theorems.hpp"
#include "fixtures.hpp"

using namespace etc::lmi;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

DesignParams params(const etc::DirectedGraph& g, double sigma = 0.05) {
  DesignParams p;
  p.sigma0 = 0.02;
  for (auto e : g.follower_edges()) p.sigma[e] = sigma;
  p.lambda = VectorXd::Constant(g.size(), 0.2);
  p.theta = VectorXd::Constant(g.size(), 5.0);
  return p;
}

VectorXd random_x(const Problem& p, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  VectorXd x(p.num_atoms());
  for (auto& v : x) v = nd(rng);
  return x;
}

int count_prefix(const Problem& p, const std::string& pre) {
  int k = 0;
  for (const auto& c : p.constraints()) k += c.label.rfind(pre, 0) == 0;
  return k;
}

etc::LiftedSystem scalar_system(double a, double b) {
  MatrixXd A(1, 1), B(1, 1);
  A << a;
  B << b;
  return etc::lift_error_system(std::vector{fixtures::agent(A, B), fixtures::agent(A, B)},
                                fixtures::chain(2));
}

}  // namespace

TEST(Xi, ZeroAndIdentityP) {
  const int L = 2;
  Problem p;
  auto v = add_core_vars(p, L);
  auto H = selectors(L);
  auto xi = build_xi_blocks(p, v, H);
  VectorXd x = VectorXd::Zero(p.num_atoms());
  EXPECT_EQ(xi.Xi0.eval(p, x).norm(), 0.0);
  EXPECT_EQ(xi.Xi1.eval(p, x).norm(), 0.0);
  EXPECT_EQ(xi.Xi2.eval(p, x).norm(), 0.0);
  p.assign(v.P, MatrixXd::Identity(L, L), x);
  MatrixXd want = H[2].transpose() * H[2] - H[1].transpose() * H[1];
  EXPECT_LT((xi.Xi0.eval(p, x) - want).norm(), 1e-15);
  // diagonal +-1 pattern on the first two blocks
  EXPECT_EQ(want.diagonal().head(L), -VectorXd::Ones(L));
  EXPECT_EQ(want.diagonal().segment(L, L), VectorXd::Ones(L));
}

TEST(Xi, SumIdentity) {
  const int L = 3;
  Problem p;
  auto v = add_core_vars(p, L);
  auto H = selectors(L);
  auto xi = build_xi_blocks(p, v, H);
  for (unsigned s = 0; s < 5; ++s) {
    VectorXd x = random_x(p, s);
    MatrixXd D = H[2] - H[1];
    MatrixXd want = D.transpose() * (p.value(v.R1, x) + p.value(v.R2, x)) * D;
    EXPECT_LT(((xi.Xi1 + xi.Xi2).eval(p, x) - want).norm(), 1e-12);
  }
}

// xi' Q xi against the per-agent trigger quantities computed from physical states.
TEST(TriggerBlock, MatchesPerAgentRho) {
  for (int topo = 0; topo < 2; ++topo) {
    auto g = topo == 0 ? fixtures::chain(2) : etc::example1_graph();
    const int N = g.followers(), n = 2, L = (N + 1) * n;
    std::mt19937_64 rng(30 + topo);
    DesignParams prm = params(g);
    prm.sigma0 = topo == 0 ? 1.0 : 0.02;
    for (auto& [e, s] : prm.sigma) s = topo == 0 ? 1.0 : 0.05 + 0.01 * e.first;
    std::vector<MatrixXd> Om;
    for (int i = 0; i <= N; ++i) {
      MatrixXd X = fixtures::randn(rng, n, n);
      Om.push_back(topo == 0 ? MatrixXd::Identity(n, n) : MatrixXd(X * X.transpose()));
    }
    auto [Oa, Ob] = ets_weight_matrices(Om, prm, g);
    auto H = selectors(L);
    MatrixXd Q = H[5].transpose() * Oa * H[5] - (H[3] - H[5]).transpose() * Ob * (H[3] - H[5]);

    for (int trial = 0; trial < 10; ++trial) {
      VectorXd xi = fixtures::randn(rng, 5 * L, 1);
      VectorXd cur = H[3] * xi, held = H[5] * xi;
      auto agent = [&](const VectorXd& e, int i) -> VectorXd {
        VectorXd x0 = e.segment(N * n, n);
        return i == 0 ? x0 : VectorXd(e.segment((i - 1) * n, n) + x0);
      };
      double sum = 0;
      for (int i = 0; i <= N; ++i) {
        VectorXd err = agent(cur, i) - agent(held, i);
        double r = -err.dot(Om[i] * err);
        if (i == 0) {
          VectorXd h0 = agent(held, 0);
          r += (prm.scale_leader_block ? prm.sigma0 : 1.0) * h0.dot(Om[0] * h0);
        } else {
          for (int j : g.neighbors(i)) {
            VectorXd dlt = agent(held, i) - agent(held, j);
            r += prm.sigma.at({i, j}) * dlt.dot(Om[i] * dlt);
          }
        }
        sum += r;
      }
      EXPECT_NEAR(xi.dot(Q * xi), sum, 1e-10 * (1 + std::abs(sum)));
    }
    std::vector<MatrixXd> zero(N + 1, MatrixXd::Zero(n, n));
    auto [Za, Zb] = ets_weight_matrices(zero, prm, g);
    EXPECT_EQ(Za.norm() + Zb.norm(), 0.0);
  }
}

TEST(Params, Validation) {
  auto g = etc::example1_graph();
  auto p = params(g);
  EXPECT_NO_THROW(validate_design_params(p, g));
  auto bad = p;
  bad.theta(2) = 1;
  bad.lambda(2) = 0.5;
  EXPECT_THROW(validate_design_params(bad, g), etc::Error);
  bad = p;
  bad.sigma[{3, 2}] = 0.1;
  EXPECT_THROW(validate_design_params(bad, g), etc::Error);
  bad = p;
  bad.sigma.erase({2, 1});
  EXPECT_THROW(validate_design_params(bad, g), etc::Error);
}

TEST(Analysis, PolePlacedScalarFeasible) {
  // a = 1.1, b = 1, every gain -0.6 puts the closed-loop poles at 0.5
  auto sys = scalar_system(1.1, 1.0);
  auto g = fixtures::chain(2);
  MatrixXd k(1, 1);
  k << -0.6;
  Design d;
  d.gain = etc::lift_controller(k, {{{1, 0}, k}}, g);
  d.Omega = {MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1)};
  auto prm = params(g);
  auto lp = assemble_analysis(sys, d, prm, g);
  EXPECT_EQ(count_prefix(lp.prob, "th1 "), 2);
  auto sol = solve_feasibility(lp.prob);
  ASSERT_TRUE(sol.feasible()) << sol.message;
  for (const auto& b : sol.blocks)
    if (b.kind == Kind::NegDef) EXPECT_GE(b.margin, 1e-6 * b.dim);

  auto lp1 = assemble_theorem1(sys, d.gain, {MatrixXd::Constant(1, 1, 1e-3), MatrixXd::Constant(1, 1, 1e-3)},
                               prm, g);
  EXPECT_TRUE(solve_feasibility(lp1.prob).feasible());
}

TEST(Analysis, ZeroGainUnstableInfeasible) {
  auto sys = scalar_system(1.1, 1.0);
  auto g = fixtures::chain(2);
  Design d;
  MatrixXd z = MatrixXd::Zero(1, 1);
  d.gain = etc::lift_controller(z, {{{1, 0}, z}}, g);
  d.Omega = {MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1)};
  auto lp = assemble_analysis(sys, d, params(g), g);
  EXPECT_EQ(solve_feasibility(lp.prob).status, Status::Infeasible);
}

TEST(Analysis, VertexCount) {
  auto sys = scalar_system(0.5, 1.0);
  auto g = fixtures::chain(2);
  auto prm = params(g);
  MatrixXd z = MatrixXd::Zero(1, 1);
  auto K = etc::lift_controller(z, {{{1, 0}, z}}, g);
  std::vector<MatrixXd> Om(2, MatrixXd::Identity(1, 1));
  EXPECT_EQ(count_prefix(assemble_theorem1(sys, K, Om, prm, g).prob, "th1 "), 2);
  prm.h_hi = 3;
  EXPECT_EQ(count_prefix(assemble_theorem1(sys, K, Om, prm, g).prob, "th1 "), 4);
}

TEST(ModelDesign, UncontrollableInfeasible) {
  auto sys = scalar_system(2.0, 0.0);
  auto g = fixtures::chain(2);
  auto lp = assemble_theorem2(sys, params(g), g);
  EXPECT_EQ(solve_feasibility(lp.prob).status, Status::Infeasible);
}

TEST(ModelDesign, RecoveredDesignPassesAnalysis) {
  auto sys = scalar_system(1.05, 1.0);
  auto g = fixtures::chain(2);
  auto prm = params(g);
  auto lp = assemble_theorem2(sys, prm, g);
  auto sol = solve_feasibility(lp.prob);
  ASSERT_TRUE(sol.feasible()) << sol.message;
  auto d = recover_design(lp, sol, g);
  for (const auto& o : d.Omega) EXPECT_GT(o(0, 0), 0);
  Eigen::EigenSolver<MatrixXd> es(sys.A + sys.B * d.gain.K);
  EXPECT_LT(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  auto an = assemble_analysis(sys, d, prm, g);
  EXPECT_TRUE(solve_feasibility(an.prob).feasible());
}

TEST(Recover, GainScalingLaw) {
  std::vector<etc::AgentModel> ms;
  for (double phi : {1.0, 1.1, 1.2, 0.8}) {
    auto [Ac, Bc] = etc::mass_spring(1, phi, 2);
    auto [A, B] = etc::discretize(Ac, Bc, 0.01);
    ms.push_back(fixtures::agent(A, B));
  }
  auto g = etc::example1_graph();
  auto sys = etc::lift_error_system(ms, g);
  auto lp = assemble_theorem2(sys, params(g), g);
  std::mt19937_64 rng(3);
  MatrixXd K0 = fixtures::randn(rng, 1, 2);
  std::map<std::pair<int, int>, MatrixXd> pairs;
  for (auto e : g.follower_edges()) pairs[e] = fixtures::randn(rng, 1, 2);
  auto Kc = etc::lift_controller(K0, pairs, g).K;
  for (double s : {1.0, 2.0}) {
    Solution sol;
    sol.x = VectorXd::Zero(lp.prob.num_atoms());
    lp.prob.assign(*lp.G, s * MatrixXd::Identity(8, 8), sol.x);
    lp.prob.assign(*lp.Kc, Kc, sol.x);
    std::vector<MatrixXd> Ob;
    for (int i = 0; i < 4; ++i) {
      MatrixXd X = fixtures::randn(rng, 2, 2);
      Ob.push_back(X * X.transpose() + MatrixXd::Identity(2, 2));
      lp.prob.assign(lp.Om[i], Ob.back(), sol.x);
    }
    lp.prob.assign(lp.core.P, MatrixXd::Identity(8, 8), sol.x);
    auto d = recover_design(lp, sol, g);
    EXPECT_LT((d.gain.K0 - K0 / s).norm(), 1e-12);
    for (const auto& [e, K] : pairs) EXPECT_LT((d.gain.pair.at(e) - K / s).norm(), 1e-12);
    for (int i = 0; i < 4; ++i) EXPECT_LT((d.Omega[i] - Ob[i] / (s * s)).norm(), 1e-12);
    EXPECT_LT((d.cert.P - MatrixXd::Identity(8, 8) / (s * s)).norm(), 1e-12);
  }
  Solution sing;
  sing.x = VectorXd::Zero(lp.prob.num_atoms());
  EXPECT_THROW(recover_design(lp, sing, g), etc::Error);
}

namespace {

struct DataCase {
  std::vector<etc::AgentModel> ms;
  etc::DirectedGraph g;
  etc::LiftedSystem sys;
  etc::DataSet ds;
};

DataCase data_case(unsigned seed, double wbar) {
  DataCase c;
  std::mt19937_64 rng(seed);
  c.ms = fixtures::random_agents(rng, 2);
  c.g = fixtures::chain(2);
  c.sys = etc::lift_error_system(c.ms, c.g);
  c.ds = etc::collect_trajectory(c.ms, {-1, 1}, {wbar}, 40, seed + 100,
                                 fixtures::random_states(rng, 2, 2));
  return c;
}

}  // namespace

TEST(DataDesign, NoiselessDataFollowsModelBasedFeasibility) {
  int compared = 0;
  for (unsigned seed : {2u, 4u}) {
    auto c = data_case(seed, 0.0);
    auto prm = params(c.g);
    auto t2 = solve_feasibility(assemble_theorem2(c.sys, prm, c.g).prob);
    if (!t2.feasible()) continue;
    auto th = fixtures::theta(c.ms, c.g, c.ds, 0.0);
    auto lp = assemble_theorem3(th, dims_of(c.sys), prm, c.g);
    auto sol = solve_feasibility(lp.prob);
    EXPECT_TRUE(sol.feasible()) << "seed " << seed << ": " << sol.message;
    ++compared;
  }
  EXPECT_GT(compared, 0);
}

TEST(DataDesign, HugeNoiseInfeasible) {
  auto c = data_case(2, 0.0);
  auto th = fixtures::theta(c.ms, c.g, c.ds, 1e3);
  auto lp = assemble_theorem3(th, dims_of(c.sys), params(c.g), c.g);
  EXPECT_FALSE(solve_feasibility(lp.prob).feasible());
}

TEST(HinfDesign, LimitsAndErrors) {
  auto c = data_case(2, 1e-3);
  auto prm = params(c.g);
  auto th = fixtures::theta(c.ms, c.g, c.ds, 1e-3);
  auto lp3 = assemble_theorem3(th, dims_of(c.sys), prm, c.g);
  auto s3 = solve_feasibility(lp3.prob);
  ASSERT_TRUE(s3.feasible()) << s3.message;
  MatrixXd G = recover_design(lp3, s3, c.g).G;
  MatrixXd Bd = c.sys.D;
  auto big = solve_feasibility(assemble_theorem4(th, dims_of(c.sys), Bd, 1e6, G, prm, c.g).prob);
  EXPECT_TRUE(big.feasible()) << big.message;
  auto tiny = solve_feasibility(assemble_theorem4(th, dims_of(c.sys), Bd, 1e-6, G, prm, c.g).prob);
  EXPECT_FALSE(tiny.feasible());
  EXPECT_THROW(assemble_theorem4(th, dims_of(c.sys), Bd, 0.0, G, prm, c.g), etc::Error);
  EXPECT_THROW(assemble_theorem4(th, dims_of(c.sys), Bd, 1.0, std::nullopt, prm, c.g), etc::Error);
}
