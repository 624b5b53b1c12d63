#pragma once

#include <Eigen/Dense>
#include <vector>

#include "etc/error.hpp"

namespace etc::lmi {

template <typename Scalar>
struct SummationCheck {
  Scalar lhs = 0, rhs = 0;
  bool holds = false;
};

// -sum y' R y <= (beta - alpha) v' M R^-1 M' v + 2 v' M (x(beta) - x(alpha)),
// y(s) = x(s + 1) - x(s). xs holds x(alpha), ..., x(beta).
template <typename DR, typename DM, typename DV>
SummationCheck<typename DR::Scalar> verify_summation_inequality(
    const Eigen::MatrixBase<DR>& R, const Eigen::MatrixBase<DM>& M,
    const Eigen::MatrixBase<DV>& v,
    const std::vector<Eigen::Matrix<typename DR::Scalar, Eigen::Dynamic, 1>>& xs) {
  using S = typename DR::Scalar;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  if (xs.empty()) throw Error(Errc::DimensionMismatch, "need at least x(alpha)");
  const auto n = R.rows();
  if (R.cols() != n || M.cols() != n || M.rows() != v.rows())
    throw Error(Errc::DimensionMismatch, "R n x n, M k x n, v k-vector");
  Eigen::LLT<Mat> llt(R.derived());
  if (llt.info() != Eigen::Success) throw Error(Errc::SingularR, "R must be positive definite");
  SummationCheck<S> out;
  const auto len = static_cast<S>(xs.size() - 1);
  for (size_t s = 0; s + 1 < xs.size(); ++s) {
    if (xs[s].size() != n || xs[s + 1].size() != n)
      throw Error(Errc::DimensionMismatch, "sequence entries must have size n");
    auto y = (xs[s + 1] - xs[s]).eval();
    out.lhs -= y.dot(R * y);
  }
  auto Mv = (M.transpose() * v).eval();
  out.rhs = len * Mv.dot(llt.solve(Mv)) + 2 * Mv.dot(xs.back() - xs.front());
  out.holds = out.lhs <= out.rhs + S(1e-10);
  return out;
}

}  // namespace etc::lmi
