#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "etc/mas_model.hpp"

using Eigen::MatrixXd;

TEST(Discretize, NilpotentZero) {
  MatrixXd Bc(2, 1);
  Bc << 0.3, -2;
  auto [A, B] = etc::discretize(MatrixXd::Zero(2, 2), Bc, 0.01);
  EXPECT_LT((A - MatrixXd::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LT((B - 0.01 * Bc).norm(), 1e-14);
}

TEST(Discretize, ScalarAnalytic) {
  MatrixXd a(1, 1), b(1, 1);
  a << 1;
  b << 1;
  auto [A, B] = etc::discretize(a, b, std::log(2.0));
  EXPECT_NEAR(A(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(B(0, 0), 1.0, 1e-12);
}

TEST(Discretize, PowerSeriesOracle) {
  auto [Ac, Bc] = etc::mass_spring(1, 1, 2);
  const double T = 0.01;
  MatrixXd S = MatrixXd::Identity(2, 2), term = MatrixXd::Identity(2, 2);
  MatrixXd Bs = MatrixXd::Zero(2, 1), ti = T * MatrixXd::Identity(2, 2);
  for (int k = 1; k <= 20; ++k) {
    Bs += ti * Bc;
    term = term * Ac * T / k;
    S += term;
    ti = ti * Ac * T / (k + 1);
  }
  auto [A, B] = etc::discretize(Ac, Bc, T);
  EXPECT_LT((A - S).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((B - Bs).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Discretize, Rejects) {
  MatrixXd A = MatrixXd::Zero(2, 2), B = MatrixXd::Zero(2, 1);
  EXPECT_THROW(etc::discretize(A, B, 0.0), etc::Error);
  A(0, 0) = NAN;
  EXPECT_THROW(etc::discretize(A, B, 0.01), etc::Error);
  EXPECT_THROW(etc::discretize(MatrixXd::Zero(2, 3), B, 0.01), etc::Error);
}

namespace {

etc::AgentModel agent(const MatrixXd& A, const MatrixXd& B) {
  etc::AgentModel a;
  a.A = A;
  a.B = B;
  a.D = 0.01 * MatrixXd::Identity(A.rows(), A.rows());
  return a;
}

}  // namespace

TEST(Lift, HomogeneousCouplingVanishes) {
  MatrixXd A = MatrixXd::Random(2, 2), B = MatrixXd::Random(2, 1);
  Eigen::MatrixXd c(2, 2);
  c << 0, 0, 1, 0;
  auto s = etc::lift_error_system(std::vector{agent(A, B), agent(A, B)}, etc::DirectedGraph(c));
  EXPECT_EQ(s.A.block(0, 2, 2, 2).norm(), 0.0);
}

TEST(Lift, ExampleSparsity) {
  std::vector<etc::AgentModel> ms;
  for (double phi : {1.0, 1.1, 1.2, 0.8}) {
    auto [Ac, Bc] = etc::mass_spring(1, phi, 2);
    auto [A, B] = etc::discretize(Ac, Bc, 0.01);
    ms.push_back(agent(A, B));
  }
  auto s = etc::lift_error_system(ms, etc::example1_graph());
  ASSERT_EQ(s.A.rows(), 8);
  EXPECT_EQ(s.A.block(6, 0, 2, 6).norm(), 0.0);
  EXPECT_EQ(s.B.rows(), 8);
  EXPECT_EQ(s.B.cols(), 4);
}

TEST(Lift, RoundTrip) {
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  auto rnd = [&](int r, int c) {
    MatrixXd M(r, c);
    for (auto& v : M.reshaped()) v = nd(rng);
    return M;
  };
  MatrixXd A0 = rnd(2, 2), A1 = rnd(2, 2), B0 = rnd(2, 1), B1 = rnd(2, 1);
  Eigen::MatrixXd c(2, 2);
  c << 0, 0, 1, 0;
  auto s = etc::lift_error_system(std::vector{agent(A0, B0), agent(A1, B1)}, etc::DirectedGraph(c));
  EXPECT_EQ(s.A.block(0, 0, 2, 2), A1);
  EXPECT_EQ(s.A.block(2, 2, 2, 2), A0);
  EXPECT_LT((s.A.block(0, 2, 2, 2) - (A1 - A0)).norm(), 1e-15);
  EXPECT_EQ(s.B.block(0, 0, 2, 1), B1);
  EXPECT_EQ(s.B.block(0, 1, 2, 1), -B0);
  EXPECT_EQ(s.B.block(2, 1, 2, 1), B0);
  EXPECT_EQ(s.B.block(2, 0, 2, 1).norm(), 0.0);
}

TEST(Lift, Mismatch) {
  auto a = agent(MatrixXd::Identity(2, 2), MatrixXd::Ones(2, 1));
  auto b = agent(MatrixXd::Identity(3, 3), MatrixXd::Ones(3, 1));
  Eigen::MatrixXd c(2, 2);
  c << 0, 0, 1, 0;
  EXPECT_THROW(etc::lift_error_system(std::vector{a, b}, etc::DirectedGraph(c)), etc::Error);
  EXPECT_THROW(etc::lift_error_system(std::vector{a}, etc::DirectedGraph(c)), etc::Error);
}

TEST(LiftController, SingleFollower) {
  Eigen::MatrixXd c(2, 2);
  c << 0, 0, 1, 0;
  MatrixXd K0(1, 2), K10(1, 2);
  K0 << 1, 2;
  K10 << 3, 4;
  auto k = etc::lift_controller(K0, {{{1, 0}, K10}}, etc::DirectedGraph(c));
  MatrixXd want = MatrixXd::Zero(2, 4);
  want.block(0, 0, 1, 2) = K10;
  want.block(1, 2, 1, 2) = K0;
  EXPECT_EQ(k.K, want);
}

TEST(LiftController, ExamplePattern) {
  auto g = etc::example1_graph();
  MatrixXd K0 = MatrixXd::Constant(1, 2, 1), K10 = MatrixXd::Constant(1, 2, 2),
           K21 = MatrixXd::Constant(1, 2, 3), K31 = MatrixXd::Constant(1, 2, 5);
  auto k = etc::lift_controller(K0, {{{1, 0}, K10}, {{2, 1}, K21}, {{3, 1}, K31}}, g);
  ASSERT_EQ(k.K.rows(), 4);
  ASSERT_EQ(k.K.cols(), 8);
  EXPECT_EQ(k.K.block(0, 0, 1, 2), K10);
  EXPECT_EQ(k.K.block(1, 2, 1, 2), K21);
  EXPECT_EQ(k.K.block(1, 0, 1, 2), -K21);
  EXPECT_EQ(k.K.block(2, 0, 1, 2), -K31);
  EXPECT_EQ(k.K.block(2, 4, 1, 2), K31);
  EXPECT_EQ(k.K.block(3, 6, 1, 2), K0);
  EXPECT_EQ(k.K.block(0, 2, 1, 6).norm(), 0.0);
}

TEST(LiftController, ZeroAndMissing) {
  auto g = etc::example1_graph();
  MatrixXd Z = MatrixXd::Zero(1, 2);
  auto k = etc::lift_controller(Z, {{{1, 0}, Z}, {{2, 1}, Z}, {{3, 1}, Z}}, g);
  EXPECT_EQ(k.K.norm(), 0.0);
  EXPECT_THROW(etc::lift_controller(Z, {{{1, 0}, Z}, {{2, 1}, Z}}, g), etc::Error);
  EXPECT_THROW(etc::lift_controller(Z, {{{1, 0}, Z}, {{2, 1}, Z}, {{3, 1}, Z}, {{3, 2}, Z}}, g),
               etc::Error);
}

TEST(Agent, Validation) {
  auto a = agent(MatrixXd::Identity(2, 2), MatrixXd::Ones(2, 1));
  EXPECT_NO_THROW(etc::validate_agent(a));
  a.D = MatrixXd::Ones(2, 2);
  EXPECT_THROW(etc::validate_agent(a), etc::Error);
  EXPECT_FALSE(etc::full_column_rank(MatrixXd::Ones(2, 2)));
}
