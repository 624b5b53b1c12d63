#include <gtest/gtest.h>

#include "etc/error.hpp"
#include "etc/ets.hpp"
#include "fixtures.hpp"

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

etc::EtsParams unit_params(const etc::DirectedGraph& g, double sigma = 1.0) {
  etc::EtsParams p;
  p.sigma0 = sigma;
  for (auto e : g.follower_edges()) p.sigma[e] = sigma;
  p.theta = VectorXd::Constant(g.size(), 5.0);
  p.lambda = VectorXd::Constant(g.size(), 0.2);
  p.Omega.assign(g.size(), MatrixXd::Identity(2, 2));
  p.eta0 = VectorXd::Zero(g.size());
  return p;
}

}  // namespace

TEST(Rho, Leader) {
  auto g = fixtures::chain(2);
  auto p = unit_params(g);
  EXPECT_EQ(etc::compute_rho(0, Vector2d::Zero(), VectorXd(Vector2d::Zero()), {}, p, g), 0.0);
  EXPECT_DOUBLE_EQ(etc::compute_rho(0, Vector2d(1, 0), VectorXd(Vector2d(1, 0)), {}, p, g), 1.0);
  // e_0 = (0, 2): 1 - 4 = -3
  EXPECT_DOUBLE_EQ(etc::compute_rho(0, Vector2d(1, 2), VectorXd(Vector2d(1, 0)), {}, p, g), -3.0);
}

TEST(Rho, FollowerHandArithmetic) {
  auto g = fixtures::chain(2);
  auto p = unit_params(g);
  std::map<int, VectorXd> nb{{0, Vector2d(0, 0)}};
  EXPECT_DOUBLE_EQ(etc::compute_rho(1, Vector2d(2, 0), VectorXd(Vector2d(1, 0)), nb, p, g), 0.0);
  EXPECT_THROW(etc::compute_rho(1, Vector2d(2, 0), std::nullopt, nb, p, g), etc::Error);
  EXPECT_THROW(etc::compute_rho(1, Vector2d(2, 0), VectorXd(Vector2d(1, 0)), {}, p, g), etc::Error);
  EXPECT_THROW(etc::compute_rho(5, Vector2d(2, 0), VectorXd(Vector2d(1, 0)), nb, p, g), etc::Error);
}

TEST(Eta, Update) {
  EXPECT_EQ(etc::update_eta(0, 0, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(etc::update_eta(1, 0, 0.2), 0.8);
  EXPECT_NEAR(etc::update_eta(1, -0.5, 0.2), 0.3, 1e-15);
}

TEST(Trigger, Check) {
  EXPECT_TRUE(etc::check_trigger(0, -1, 5));
  EXPECT_FALSE(etc::check_trigger(0.3, -0.05, 5));
  for (double eta : {0.0, 0.5, 3.0})
    for (double rho : {0.0, 0.1, 2.0}) EXPECT_FALSE(etc::check_trigger(eta, rho, 5));
}

TEST(Validate, Examples) {
  auto g = etc::example1_graph();
  auto p = unit_params(g, 0.05);
  p.sigma0 = 0.02;
  EXPECT_TRUE(etc::validate_params(p, g).empty());

  auto q = p;
  q.theta(1) = 1;
  q.lambda(1) = 0.5;
  auto v = etc::validate_params(q, g);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].agent, 1);

  q = p;
  q.lambda(2) = 0;
  EXPECT_FALSE(etc::validate_params(q, g).empty());

  q = p;
  q.Omega[3] = -MatrixXd::Identity(2, 2);
  EXPECT_FALSE(etc::validate_params(q, g).empty());

  q = p;
  q.sigma[{3, 2}] = 0.1;
  EXPECT_FALSE(etc::validate_params(q, g).empty());

  q = p;
  q.sigma.erase({2, 1});
  EXPECT_FALSE(etc::validate_params(q, g).empty());

  q = p;
  q.eta0(0) = -1;
  EXPECT_FALSE(etc::validate_params(q, g).empty());

  q = p;
  q.Omega.pop_back();
  EXPECT_FALSE(etc::validate_params(q, g).empty());
}
