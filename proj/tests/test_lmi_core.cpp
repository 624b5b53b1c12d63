#include <gtest/gtest.h>

#include <random>

#include "etc/lmi/affine.hpp"
#include "etc/lmi/solver.hpp"

using namespace etc::lmi;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_x(const Problem& p, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  VectorXd x(p.num_atoms());
  for (auto& v : x) v = nd(rng);
  return x;
}

}  // namespace

TEST(Affine, VariablesAndValues) {
  Problem p;
  auto P = p.symmetric("P", 3);
  auto K = p.full("K", 2, 3);
  auto s = p.scalar("s");
  EXPECT_EQ(p.num_atoms(), 6 + 6 + 1);
  EXPECT_EQ(p.find("K").id, K.id);
  EXPECT_FALSE(p.has("Q"));
  VectorXd x = random_x(p, 1);
  MatrixXd Pv = p.value(P, x);
  EXPECT_EQ(Pv, Pv.transpose());
  MatrixXd Kv = MatrixXd::Random(2, 3);
  p.assign(K, Kv, x);
  EXPECT_EQ(p.value("K", x), Kv);
  EXPECT_EQ(p.value(s, x).size(), 1);
}

TEST(Affine, ExpressionAlgebraMatchesDirectProducts) {
  Problem p;
  auto P = p.symmetric("P", 3);
  auto K = p.full("K", 2, 3);
  VectorXd x = random_x(p, 2);
  MatrixXd L = MatrixXd::Random(4, 3), R = MatrixXd::Random(3, 2), C = MatrixXd::Random(4, 2);
  MatrixXd Pv = p.value(P, x), Kv = p.value(K, x);

  Expr e = L * p(P) * R + Expr(C) - 2.0 * (L * p(K).transpose());
  MatrixXd want = L * Pv * R + C - 2.0 * L * Kv.transpose();
  EXPECT_LT((e.eval(p, x) - want).norm(), 1e-12);
  EXPECT_LT((e.transpose().eval(p, x) - want.transpose()).norm(), 1e-12);

  Expr b = Expr::blocks({{p(P), p(K).transpose()}, {p(K), Expr::identity(2)}});
  MatrixXd bw(5, 5);
  bw << Pv, Kv.transpose(), Kv, MatrixXd::Identity(2, 2);
  EXPECT_LT((b.eval(p, x) - bw).norm(), 1e-12);

  auto s = p.scalar("s");
  x = random_x(p, 3);
  MatrixXd M = MatrixXd::Random(2, 2);
  EXPECT_LT((kron(p(s), M).eval(p, x) - p.value(s, x)(0) * M).norm(), 1e-12);
  EXPECT_LT((sym(p(K) * R).eval(p, x) -
             (p.value(K, x) * R + (p.value(K, x) * R).transpose())).norm(), 1e-12);
}

TEST(Affine, CoefficientsReproduceEval) {
  Problem p;
  auto P = p.symmetric("P", 2);
  auto K = p.full("K", 1, 2);
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 0.1, -0.2, 0.9;
  B << 0, 1;
  Expr e = (A * p(P) + B * p(K)).sym() + Expr(MatrixXd::Identity(2, 2));
  auto c = coefficients(p, e);
  VectorXd x = random_x(p, 4);
  MatrixXd F = c.F0;
  for (size_t k = 0; k < c.atoms.size(); ++k) F += x(c.atoms[k]) * MatrixXd(c.F[k]);
  EXPECT_LT((F - e.eval(p, x)).norm(), 1e-12);
}

TEST(Affine, StructuredVariable) {
  Problem p;
  // 2x2 with a single atom on the anti-diagonal, weights 1 and -3
  std::vector<Atom> atoms(1);
  atoms[0].entries = {{0, 1, 1.0}, {1, 0, -3.0}};
  auto v = p.structured("V", 2, 2, atoms);
  VectorXd x(1);
  x << 2;
  MatrixXd want(2, 2);
  want << 0, 2, -6, 0;
  EXPECT_EQ(p.value(v, x), want);
}

TEST(Affine, Homogeneity) {
  Problem p;
  auto P = p.symmetric("P", 2);
  p.pos_def(p(P), "P");
  EXPECT_TRUE(p.homogeneous());
  p.neg_def(p(P) - Expr::identity(2), "Pb");
  EXPECT_FALSE(p.homogeneous());
  EXPECT_NE(p.to_text().find("P"), std::string::npos);
}

TEST(Solver, ScalarNegative) {
  Problem p;
  auto s = p.scalar("x");
  p.neg_def(kron(p(s), MatrixXd::Identity(3, 3)), "xI");
  auto sol = solve_feasibility(p);
  ASSERT_TRUE(sol.feasible()) << sol.message;
  EXPECT_LT(sol.x(0), 0);
  for (const auto& b : sol.blocks) EXPECT_TRUE(b.ok);
}

TEST(Solver, ContradictoryDefinite) {
  Problem p;
  auto P = p.symmetric("P", 2);
  p.pos_def(p(P), "P");
  p.pos_def(-p(P), "-P");
  auto sol = solve_feasibility(p);
  EXPECT_EQ(sol.status, Status::Infeasible) << sol.message;
}

TEST(Solver, DiscreteLyapunov) {
  auto lyap = [](const MatrixXd& A) {
    Problem p;
    auto P = p.symmetric("P", 2);
    p.pos_def(p(P), "P");
    p.neg_def(A.transpose() * p(P) * A - p(P), "decrease");
    return solve_feasibility(p);
  };
  MatrixXd A(2, 2);
  A << 0.9, 0.5, 0, 0.8;
  auto ok = lyap(A);
  ASSERT_TRUE(ok.feasible()) << ok.message;
  EXPECT_EQ(lyap(1.2 * MatrixXd::Identity(2, 2)).status, Status::Infeasible);
}

TEST(Solver, VerifyReportsMargins) {
  Problem p;
  auto s = p.scalar("x");
  p.neg_def(kron(p(s), MatrixXd::Identity(2, 2)), "neg");
  p.nonneg(Expr(VectorXd::Ones(1)) + p(s), "shift");
  VectorXd x(1);
  x << -0.5;
  auto r = verify(p, x, 1e-6);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r[0].margin, 0.5, 1e-12);
  EXPECT_TRUE(r[0].ok);
  EXPECT_NEAR(r[1].margin, 0.5, 1e-12);
  x << 0.1;
  EXPECT_FALSE(verify(p, x, 1e-6)[0].ok);
}

TEST(Solver, LinearSystemWithGain) {
  // state feedback by the usual change of variables Y = K P: [[-P, (AP + BY)'], [., -P]] < 0
  MatrixXd A(2, 2), B(2, 1);
  A << 1.1, 0.3, 0, 1.05;
  B << 0, 1;
  Problem p;
  auto P = p.symmetric("P", 2);
  auto Y = p.full("Y", 1, 2);
  Expr cl = A * p(P) + B * p(Y);
  p.neg_def(Expr::blocks({{-p(P), cl.transpose()}, {cl, -p(P)}}), "stab");
  auto sol = solve_feasibility(p);
  ASSERT_TRUE(sol.feasible()) << sol.message;
  MatrixXd K = p.value(Y, sol.x) * p.value(P, sol.x).inverse();
  Eigen::EigenSolver<MatrixXd> es(A + B * K);
  EXPECT_LT(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
}
