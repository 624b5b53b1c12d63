#include "etc/lmi/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>

#include "etc/error.hpp"

namespace etc::lmi {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

struct Coef {
  bool dense = false;
  SpMat sp;
  Eigen::MatrixXd M;        // used when dense
  std::vector<int> rows;    // distinct nonzero rows of sp
  int nnz = 0;
};

struct SdpBlock {
  int d = 0;
  Eigen::MatrixXd C;
  std::vector<int> idx;  // indices into y
  std::vector<Coef> A;
};

struct Compiled {
  int ny = 0;
  int t_index = -1;
  Eigen::VectorXd b;
  Eigen::VectorXd scale;  // x_k = scale_k * y_k
  std::vector<SdpBlock> sdp;
  SpMat Alp;              // rows x ny
  Eigen::VectorXd clp;
};

double dot(const Coef& a, const Eigen::MatrixXd& W) {
  if (a.dense) return (a.M.array() * W.array()).sum();
  double s = 0.0;
  for (int j = 0; j < a.sp.outerSize(); ++j)
    for (SpMat::InnerIterator it(a.sp, j); it; ++it) s += it.value() * W(it.row(), it.col());
  return s;
}

void finish_coef(Coef& c, int d) {
  c.nnz = static_cast<int>(c.sp.nonZeros());
  if (c.nnz > d * d / 4) {
    c.dense = true;
    c.M = Eigen::MatrixXd(c.sp);
  }
  std::vector<char> seen(d, 0);
  for (int j = 0; j < c.sp.outerSize(); ++j)
    for (SpMat::InnerIterator it(c.sp, j); it; ++it) seen[it.row()] = 1;
  for (int r = 0; r < d; ++r)
    if (seen[r]) c.rows.push_back(r);
}

Compiled compile(const Problem& p, double box) {
  Compiled cp;
  const int na = p.num_atoms();
  bool any_strict = false;
  for (const auto& c : p.constraints())
    if (c.kind == Kind::NegDef || c.kind == Kind::PosDef) any_strict = true;

  std::vector<Coefficients> cf;
  cf.reserve(p.constraints().size());
  Eigen::VectorXd amax = Eigen::VectorXd::Zero(na);
  for (const auto& c : p.constraints()) {
    cf.push_back(coefficients(p, c.e, c.kind != Kind::NonNeg));
    const auto& co = cf.back();
    for (size_t k = 0; k < co.atoms.size(); ++k) {
      double m = 0.0;
      for (int j = 0; j < co.F[k].outerSize(); ++j)
        for (SpMat::InnerIterator it(co.F[k], j); it; ++it) m = std::max(m, std::abs(it.value()));
      amax(co.atoms[k]) = std::max(amax(co.atoms[k]), m);
    }
  }
  cp.ny = na + 1;
  cp.t_index = na;
  cp.b = Eigen::VectorXd::Zero(cp.ny);
  cp.b(cp.t_index) = 1.0;
  cp.scale = Eigen::VectorXd::Ones(cp.ny);
  for (int k = 0; k < na; ++k)
    if (amax(k) > 0) cp.scale(k) = 1.0 / amax(k);

  std::vector<Eigen::Triplet<double>> lp;
  std::vector<double> clp;
  auto lp_row = [&](double c) {
    clp.push_back(c);
    return static_cast<int>(clp.size()) - 1;
  };

  for (size_t b = 0; b < p.constraints().size(); ++b) {
    const auto& con = p.constraints()[b];
    const auto& co = cf[b];
    // Z = C - sum y A: NegDef uses C = -F0, A_k = F_k; the others C = F0, A_k = -F_k.
    const double sgn = con.kind == Kind::NegDef ? -1.0 : 1.0;
    const bool with_t = con.kind == Kind::NegDef || con.kind == Kind::PosDef ||
                        (!any_strict && con.kind == Kind::Psd);
    if (con.kind == Kind::NonNeg) {
      for (int r = 0; r < co.F0.rows(); ++r) {
        int row = lp_row(co.F0(r, 0));
        for (size_t k = 0; k < co.atoms.size(); ++k) {
          double v = co.F[k].coeff(r, 0);
          if (v != 0.0) lp.emplace_back(row, co.atoms[k], -v * cp.scale(co.atoms[k]));
        }
      }
      continue;
    }
    SdpBlock blk;
    blk.d = con.e.rows();
    blk.C = sgn * co.F0;
    for (size_t k = 0; k < co.atoms.size(); ++k) {
      Coef c;
      c.sp = (-sgn * cp.scale(co.atoms[k])) * co.F[k];
      finish_coef(c, blk.d);
      blk.idx.push_back(co.atoms[k]);
      blk.A.push_back(std::move(c));
    }
    if (with_t) {
      Coef c;
      c.sp = SpMat(blk.d, blk.d);
      c.sp.setIdentity();  // Z = C - ... - t I
      finish_coef(c, blk.d);
      blk.idx.push_back(cp.t_index);
      blk.A.push_back(std::move(c));
    }
    cp.sdp.push_back(std::move(blk));
  }
  // box on every atom that appears somewhere
  std::vector<char> used(na, 0);
  for (const auto& blk : cp.sdp)
    for (int i : blk.idx)
      if (i < na) used[i] = 1;
  for (const auto& t : lp)
    if (t.col() < na) used[t.col()] = 1;
  for (int k = 0; k < na; ++k) {
    if (!used[k]) continue;
    int r1 = lp_row(box);
    lp.emplace_back(r1, k, 1.0);   // box - y >= 0
    int r2 = lp_row(box);
    lp.emplace_back(r2, k, -1.0);  // box + y >= 0
  }
  cp.Alp = SpMat(static_cast<int>(clp.size()), cp.ny);
  cp.Alp.setFromTriplets(lp.begin(), lp.end());
  cp.clp = Eigen::Map<Eigen::VectorXd>(clp.data(), static_cast<int>(clp.size()));
  return cp;
}

struct Iterate {
  std::vector<Eigen::MatrixXd> X, Z;
  Eigen::VectorXd x, z;  // LP part
  Eigen::VectorXd y;
};

Eigen::VectorXd op_A(const Compiled& cp, const std::vector<Eigen::MatrixXd>& X,
                     const Eigen::VectorXd& xlp) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cp.ny);
  for (size_t b = 0; b < cp.sdp.size(); ++b) {
    const auto& blk = cp.sdp[b];
    for (size_t j = 0; j < blk.idx.size(); ++j) out(blk.idx[j]) += dot(blk.A[j], X[b]);
  }
  if (cp.Alp.rows() > 0) out += cp.Alp.transpose() * xlp;
  return out;
}

Eigen::MatrixXd op_At(const SdpBlock& blk, const Eigen::VectorXd& y) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(blk.d, blk.d);
  for (size_t j = 0; j < blk.idx.size(); ++j) {
    double v = y(blk.idx[j]);
    if (v == 0.0) continue;
    if (blk.A[j].dense) S += v * blk.A[j].M;
    else S += v * blk.A[j].sp;
  }
  return S;
}

// Largest alpha with X + alpha dX >= 0 (infinity when dX >= 0).
double max_step(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::MatrixXd& dX) {
  Eigen::MatrixXd W = chol.matrixL().solve(dX);
  W = chol.matrixL().solve(W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (W + W.transpose()),
                                                    Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues()(0);
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step_lp(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < x.size(); ++i)
    if (dx(i) < 0) a = std::min(a, -x(i) / dx(i));
  return a;
}

Eigen::MatrixXd symm(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

}  // namespace

const char* status_name(Status s) {
  switch (s) {
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

SolverOptions default_options() {
  SolverOptions o;
  if (const char* env = std::getenv("ETC_SOLVER_TOL")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end != env && v > 0 && std::isfinite(v)) o.eps_feas = v;
  }
  return o;
}

double Solution::min_strict_margin() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks)
    if (b.kind == Kind::NegDef || b.kind == Kind::PosDef) m = std::min(m, b.margin);
  return m;
}

std::vector<BlockReport> verify(const Problem& p, const Eigen::VectorXd& x, double eps_feas) {
  std::vector<BlockReport> out;
  for (const auto& c : p.constraints()) {
    BlockReport r;
    r.label = c.label;
    r.kind = c.kind;
    r.dim = c.e.rows();
    Eigen::MatrixXd E = c.e.eval(p, x);
    double nrm = std::max(1.0, E.cwiseAbs().maxCoeff());
    if (c.kind == Kind::NonNeg) {
      r.margin = E.minCoeff();
      r.required = -1e-9 * nrm;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symm(E), Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      if (c.kind == Kind::NegDef) {
        r.margin = -ev(ev.size() - 1);
        r.required = eps_feas * r.dim;
      } else if (c.kind == Kind::PosDef) {
        r.margin = ev(0);
        r.required = eps_feas * r.dim;
      } else {
        r.margin = ev(0);
        r.required = -1e-9 * nrm;
      }
    }
    r.ok = r.margin >= r.required;
    out.push_back(r);
  }
  return out;
}

namespace {

bool all_ok(const std::vector<BlockReport>& r) {
  return std::all_of(r.begin(), r.end(), [](const BlockReport& b) { return b.ok; });
}

// Verify x; for homogeneous problems with positive but small strict margins, scale up.
bool certify(const Problem& p, const Eigen::VectorXd& x, double eps, Solution& sol) {
  auto rep = verify(p, x, eps);
  double c = 1.0;
  if (!all_ok(rep) && p.homogeneous()) {
    bool positive = true;
    for (const auto& b : rep) {
      if (b.kind == Kind::NegDef || b.kind == Kind::PosDef) {
        if (b.margin <= 0) positive = false;
        else if (b.margin < b.required) c = std::max(c, b.required / b.margin);
      } else if (!b.ok) {
        positive = false;
      }
    }
    if (positive && c > 1.0) rep = verify(p, c * x, eps);
    else c = 1.0;
  }
  if (!all_ok(rep)) {
    sol.blocks = rep;
    return false;
  }
  sol.blocks = rep;
  sol.x = c * x;
  sol.rescale = c;
  return true;
}

}  // namespace

Solution solve_feasibility(const Problem& p, const SolverOptions& opt) {
  Solution sol;
  sol.x = Eigen::VectorXd::Zero(p.num_atoms());
  if (p.constraints().empty()) {
    sol.status = Status::Feasible;
    return sol;
  }
  Compiled cp = compile(p, opt.box);
  const int nb = static_cast<int>(cp.sdp.size());
  const int nlp = static_cast<int>(cp.Alp.rows());
  double nconic = nlp;
  for (const auto& blk : cp.sdp) nconic += blk.d;

  Iterate it;
  it.y = Eigen::VectorXd::Zero(cp.ny);
  for (const auto& blk : cp.sdp) {
    double xi = std::max(10.0, std::sqrt(double(blk.d)));
    double eta = std::max({10.0, std::sqrt(double(blk.d)), blk.C.norm()});
    it.X.push_back(xi * Eigen::MatrixXd::Identity(blk.d, blk.d));
    it.Z.push_back(eta * Eigen::MatrixXd::Identity(blk.d, blk.d));
  }
  double lpx = 10.0, lpz = std::max(10.0, cp.clp.size() ? cp.clp.cwiseAbs().maxCoeff() : 0.0);
  it.x = Eigen::VectorXd::Constant(nlp, lpx);
  it.z = Eigen::VectorXd::Constant(nlp, lpz);

  const double normb = 1.0 + cp.b.norm();
  double normC = 1.0;
  for (const auto& blk : cp.sdp) normC += blk.C.norm();
  normC += cp.clp.norm();

  auto scaled_x = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd x(p.num_atoms());
    for (int k = 0; k < p.num_atoms(); ++k) x(k) = cp.scale(k) * y(k);
    return x;
  };

  bool converged = false;
  double last_gap = 0, last_pinf = 0, last_dinf = 0, last_pobj = 0;
  std::string fail;
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    // residuals
    std::vector<Eigen::MatrixXd> Rd(nb);
    double dnorm = 0.0, pobj = 0.0, xz = 0.0;
    for (int b = 0; b < nb; ++b) {
      Rd[b] = cp.sdp[b].C - it.Z[b] - op_At(cp.sdp[b], it.y);
      dnorm += Rd[b].squaredNorm();
      pobj += (cp.sdp[b].C.array() * it.X[b].array()).sum();
      xz += (it.X[b].array() * it.Z[b].array()).sum();
    }
    Eigen::VectorXd rdl = cp.clp - it.z - cp.Alp * it.y;
    dnorm += rdl.squaredNorm();
    pobj += cp.clp.dot(it.x);
    xz += it.x.dot(it.z);
    Eigen::VectorXd Rp = cp.b - op_A(cp, it.X, it.x);
    const double dobj = cp.b.dot(it.y);
    const double mu = xz / nconic;
    last_pinf = Rp.norm() / normb;
    last_dinf = std::sqrt(dnorm) / normC;
    last_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    last_pobj = pobj;
    if (opt.verbose)
      std::cerr << "it " << iter << " pobj " << pobj << " dobj " << dobj << " gap " << last_gap
                << " pinf " << last_pinf << " dinf " << last_dinf << " mu " << mu << "\n";
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) {
      fail = "non-finite iterate";
      break;
    }
    if (last_gap < opt.tol && last_pinf < opt.tol && last_dinf < opt.tol) {
      converged = true;
      break;
    }
    if (opt.stop_when_certified && it.y(cp.t_index) > 0 && last_dinf < 1e-6) {
      Solution probe;
      if (certify(p, scaled_x(it.y), opt.eps_feas, probe)) {
        converged = true;
        break;
      }
    }

    // factorizations
    std::vector<Eigen::LLT<Eigen::MatrixXd>> cx(nb), cz(nb);
    std::vector<Eigen::MatrixXd> Zi(nb);
    bool ok = true;
    for (int b = 0; b < nb && ok; ++b) {
      cx[b].compute(it.X[b]);
      cz[b].compute(it.Z[b]);
      if (cx[b].info() != Eigen::Success || cz[b].info() != Eigen::Success) ok = false;
      else Zi[b] = symm(cz[b].solve(Eigen::MatrixXd::Identity(cp.sdp[b].d, cp.sdp[b].d)));
    }
    if (!ok) {
      fail = "iterate left the cone";
      break;
    }

    // Schur complement M_ij = tr(A_i X A_j Z^-1)
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(cp.ny, cp.ny);
    for (int b = 0; b < nb; ++b) {
      const auto& blk = cp.sdp[b];
      const auto& X = it.X[b];
      const int nv = static_cast<int>(blk.idx.size());
      std::vector<Eigen::MatrixXd> W(nv);
      for (int j = 0; j < nv; ++j) {
        const auto& a = blk.A[j];
        if (a.dense) {
          W[j].noalias() = X * (a.M * Zi[b]);
        } else {
          Eigen::MatrixXd T = a.sp * Zi[b];  // only rows in a.rows are nonzero
          W[j] = Eigen::MatrixXd::Zero(blk.d, blk.d);
          for (int r : a.rows) W[j].noalias() += X.col(r) * T.row(r);
        }
      }
      for (int j = 0; j < nv; ++j) {
        for (int i = 0; i <= j; ++i) {
          double v = blk.A[i].nnz <= blk.A[j].nnz ? dot(blk.A[i], W[j]) : dot(blk.A[j], W[i]);
          M(blk.idx[i], blk.idx[j]) += v;
          if (i != j) M(blk.idx[j], blk.idx[i]) += v;
        }
      }
    }
    Eigen::VectorXd xz_ratio = it.x.cwiseQuotient(it.z);
    if (nlp > 0) {
      SpMat D = cp.Alp.transpose() * xz_ratio.asDiagonal() * cp.Alp;
      M += Eigen::MatrixXd(D);
    }
    M = symm(M);
    Eigen::LLT<Eigen::MatrixXd> schur(M);
    if (schur.info() != Eigen::Success) {
      double reg = 1e-13 * M.diagonal().cwiseAbs().maxCoeff();
      M.diagonal().array() += reg;
      schur.compute(M);
      if (schur.info() != Eigen::Success) {
        fail = "Schur complement not positive definite";
        break;
      }
    }
    const Eigen::MatrixXd& Mref = M;
    auto solve_schur = [&](const Eigen::VectorXd& r) {
      Eigen::VectorXd dy = schur.solve(r);
      Eigen::VectorXd res = r - Mref * dy;  // one refinement step
      dy += schur.solve(res);
      return dy;
    };

    // search direction for given sigma and optional second-order terms
    struct Dir {
      std::vector<Eigen::MatrixXd> dX, dZ;
      Eigen::VectorXd dx, dz, dy;
    };
    auto direction = [&](double sigma, const Dir* pred) {
      Dir d;
      std::vector<Eigen::MatrixXd> G(nb);
      for (int b = 0; b < nb; ++b) {
        Eigen::MatrixXd g = -sigma * mu * Zi[b] + it.X[b] * Rd[b] * Zi[b];
        if (pred) g += pred->dX[b] * pred->dZ[b] * Zi[b];
        G[b] = symm(g);
      }
      Eigen::VectorXd gl = (-sigma * mu * it.z.cwiseInverse()) +
                           it.x.cwiseProduct(rdl).cwiseQuotient(it.z);
      if (pred) gl += pred->dx.cwiseProduct(pred->dz).cwiseQuotient(it.z);
      Eigen::VectorXd rhs = cp.b + op_A(cp, G, gl);
      d.dy = solve_schur(rhs);
      d.dX.resize(nb);
      d.dZ.resize(nb);
      for (int b = 0; b < nb; ++b) {
        d.dZ[b] = Rd[b] - op_At(cp.sdp[b], d.dy);
        Eigen::MatrixXd dx = sigma * mu * Zi[b] - it.X[b] - it.X[b] * d.dZ[b] * Zi[b];
        if (pred) dx -= pred->dX[b] * pred->dZ[b] * Zi[b];
        d.dX[b] = symm(dx);
      }
      d.dz = rdl - cp.Alp * d.dy;
      d.dx = sigma * mu * it.z.cwiseInverse() - it.x - it.x.cwiseProduct(d.dz).cwiseQuotient(it.z);
      if (pred) d.dx -= pred->dx.cwiseProduct(pred->dz).cwiseQuotient(it.z);
      return d;
    };
    auto steps = [&](const Dir& d) {
      double ap = max_step_lp(it.x, d.dx), ad = max_step_lp(it.z, d.dz);
      for (int b = 0; b < nb; ++b) {
        ap = std::min(ap, max_step(cx[b], d.dX[b]));
        ad = std::min(ad, max_step(cz[b], d.dZ[b]));
      }
      return std::pair<double, double>(ap, ad);
    };

    Dir pred = direction(0.0, nullptr);
    auto [ap0, ad0] = steps(pred);
    double app = std::min(1.0, ap0), adp = std::min(1.0, ad0);
    double mu_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      mu_aff += ((it.X[b] + app * pred.dX[b]).array() * (it.Z[b] + adp * pred.dZ[b]).array()).sum();
    mu_aff += (it.x + app * pred.dx).dot(it.z + adp * pred.dz);
    mu_aff /= nconic;
    double expon = std::max(1.0, 3.0 * std::pow(std::min(app, adp), 2));
    double sigma = std::min(1.0, std::pow(std::max(mu_aff, 0.0) / mu, expon));

    Dir corr = direction(sigma, &pred);
    auto [ap, ad] = steps(corr);
    double gamma = 0.9 + 0.09 * std::min(app, adp);
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (!std::isfinite(ap) || !std::isfinite(ad) || (ap < 1e-12 && ad < 1e-12)) {
      fail = "step length collapsed";
      break;
    }
    for (int b = 0; b < nb; ++b) {
      it.X[b] = symm(it.X[b] + ap * corr.dX[b]);
      it.Z[b] = symm(it.Z[b] + ad * corr.dZ[b]);
    }
    it.x += ap * corr.dx;
    it.z += ad * corr.dz;
    it.y += ad * corr.dy;
  }

  sol.iterations = iter;
  sol.t = it.y(cp.t_index);
  sol.primal_infeas = last_pinf;
  sol.dual_infeas = last_dinf;
  sol.rel_gap = last_gap;
  Eigen::VectorXd x = scaled_x(it.y);
  if (certify(p, x, opt.eps_feas, sol)) {
    sol.status = Status::Feasible;
    sol.message = converged ? "converged" : "certified before convergence";
    return sol;
  }
  sol.x = x;
  // near-converged with no positive margin: clean infeasibility verdict
  bool near = last_gap < 1e-5 && last_pinf < 1e-5 && last_dinf < 1e-5;
  if ((converged || near) && sol.t < std::max(1e-7, opt.eps_feas)) {
    sol.status = Status::Infeasible;
    sol.message = "maximal margin " + std::to_string(sol.t) + " below the strictness threshold";
  } else if (converged || near) {
    sol.status = Status::Infeasible;
    sol.message = "margin achieved by the solver does not meet the required block margins";
  } else if (last_pinf < 1e-6 && last_pobj < std::max(1e-7, opt.eps_feas)) {
    // the primal iterate bounds the achievable margin from above
    sol.status = Status::Infeasible;
    sol.message = "margin bounded above by " + std::to_string(last_pobj) + " (" +
                  (fail.empty() ? "iteration limit" : fail) + ")";
  } else {
    sol.status = Status::NumericalFailure;
    sol.message = fail.empty() ? "iteration limit reached" : fail;
  }
  return sol;
}

}  // namespace etc::lmi
