#include "etc/lmi/affine.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "etc/error.hpp"

namespace etc::lmi {

Expr::Expr(int rows, int cols) : c_(Eigen::MatrixXd::Zero(rows, cols)) {}
Expr::Expr(const Eigen::MatrixXd& constant) : c_(constant) {}

Expr Expr::transpose() const {
  Expr out(c_.transpose());
  out.terms_.reserve(terms_.size());
  for (const auto& t : terms_)
    out.terms_.push_back({t.var, t.R.transpose(), t.L.transpose(), !t.transposed});
  return out;
}

Expr& Expr::operator+=(const Expr& o) {
  if (o.rows() != rows() || o.cols() != cols())
    throw Error(Errc::DimensionMismatch, "expression sum: shapes differ");
  c_ += o.c_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

Expr& Expr::operator-=(const Expr& o) { return *this += (-1.0) * o; }

Expr operator*(double s, const Expr& e) {
  Expr out(s * e.c_);
  out.terms_ = e.terms_;
  for (auto& t : out.terms_) t.L *= s;
  return out;
}

Expr operator*(const Eigen::MatrixXd& M, const Expr& e) {
  if (M.cols() != e.rows()) throw Error(Errc::DimensionMismatch, "left product shape");
  Expr out(M * e.c_);
  out.terms_.reserve(e.terms_.size());
  for (const auto& t : e.terms_) out.terms_.push_back({t.var, M * t.L, t.R, t.transposed});
  return out;
}

Expr operator*(const Expr& e, const Eigen::MatrixXd& M) {
  if (e.cols() != M.rows()) throw Error(Errc::DimensionMismatch, "right product shape");
  Expr out(e.c_ * M);
  out.terms_.reserve(e.terms_.size());
  for (const auto& t : e.terms_) out.terms_.push_back({t.var, t.L, t.R * M, t.transposed});
  return out;
}

Expr sym(const Expr& e) { return e.sym(); }

Expr kron(const Expr& s, const Eigen::MatrixXd& M) {
  if (s.rows() != 1 || s.cols() != 1) throw Error(Errc::DimensionMismatch, "kron needs a scalar");
  Expr out(s.constant()(0, 0) * M);
  const auto n = M.cols();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (M.col(k).isZero(0)) continue;
    Eigen::MatrixXd ek = Eigen::MatrixXd::Zero(1, n);
    ek(0, k) = 1.0;
    Expr sk = s;
    sk = Eigen::MatrixXd(M.col(k)) * (sk - Expr(s.constant())) * ek;
    out += sk;
  }
  return out;
}

Eigen::MatrixXd Expr::eval(const Problem& p, const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out = c_;
  for (const auto& t : terms_) {
    Eigen::MatrixXd X = p.value(VarId{t.var}, x);
    if (t.transposed) out.noalias() += t.L * X.transpose() * t.R;
    else out.noalias() += t.L * X * t.R;
  }
  return out;
}

Expr Expr::blocks(const std::vector<std::vector<Expr>>& grid) {
  if (grid.empty() || grid[0].empty()) return Expr();
  const size_t br = grid.size(), bc = grid[0].size();
  std::vector<int> rh(br), cw(bc);
  for (size_t i = 0; i < br; ++i) {
    if (grid[i].size() != bc) throw Error(Errc::DimensionMismatch, "ragged block grid");
    rh[i] = grid[i][0].rows();
  }
  for (size_t j = 0; j < bc; ++j) cw[j] = grid[0][j].cols();
  int R = 0, C = 0;
  for (int r : rh) R += r;
  for (int c : cw) C += c;
  Expr out(R, C);
  int r0 = 0;
  for (size_t i = 0; i < br; ++i) {
    int c0 = 0;
    for (size_t j = 0; j < bc; ++j) {
      const Expr& b = grid[i][j];
      if (b.rows() != rh[i] || b.cols() != cw[j])
        throw Error(Errc::DimensionMismatch, "block grid shapes inconsistent");
      out.c_.block(r0, c0, rh[i], cw[j]) = b.c_;
      for (const auto& t : b.terms_) {
        Term nt{t.var, Eigen::MatrixXd::Zero(R, t.L.cols()), Eigen::MatrixXd::Zero(t.R.rows(), C),
                t.transposed};
        nt.L.middleRows(r0, rh[i]) = t.L;
        nt.R.middleCols(c0, cw[j]) = t.R;
        out.terms_.push_back(std::move(nt));
      }
      c0 += cw[j];
    }
    r0 += rh[i];
  }
  return out;
}

VarId Problem::add(Variable v) {
  for (const auto& w : vars_)
    if (w.name == v.name) throw Error(Errc::Config, "duplicate variable name " + v.name);
  v.offset = n_atoms_;
  n_atoms_ += static_cast<int>(v.atoms.size());
  vars_.push_back(std::move(v));
  return VarId{static_cast<int>(vars_.size()) - 1};
}

VarId Problem::symmetric(const std::string& name, int n) {
  Variable v{name, n, n, 0, {}};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      Atom a;
      a.entries.emplace_back(i, j, 1.0);
      if (i != j) a.entries.emplace_back(j, i, 1.0);
      v.atoms.push_back(std::move(a));
    }
  return add(std::move(v));
}

VarId Problem::full(const std::string& name, int rows, int cols) {
  Variable v{name, rows, cols, 0, {}};
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) v.atoms.push_back(Atom{{{i, j, 1.0}}});
  return add(std::move(v));
}

VarId Problem::scalar(const std::string& name) { return full(name, 1, 1); }

VarId Problem::structured(const std::string& name, int rows, int cols, std::vector<Atom> atoms) {
  for (const auto& a : atoms)
    for (const auto& e : a.entries)
      if (e.row() < 0 || e.col() < 0 || e.row() >= rows || e.col() >= cols)
        throw Error(Errc::DimensionMismatch, "atom outside variable " + name);
  return add(Variable{name, rows, cols, 0, std::move(atoms)});
}

Expr Problem::operator()(VarId v) const {
  const auto& var = vars_.at(v.id);
  Expr e(var.rows, var.cols);
  e.terms_.push_back({v.id, Eigen::MatrixXd::Identity(var.rows, var.rows),
                      Eigen::MatrixXd::Identity(var.cols, var.cols), false});
  return e;
}

void Problem::neg_def(const Expr& e, const std::string& label) {
  if (e.rows() != e.cols()) throw Error(Errc::DimensionMismatch, label + ": not square");
  cons_.push_back({e, Kind::NegDef, label});
}
void Problem::pos_def(const Expr& e, const std::string& label) {
  if (e.rows() != e.cols()) throw Error(Errc::DimensionMismatch, label + ": not square");
  cons_.push_back({e, Kind::PosDef, label});
}
void Problem::psd(const Expr& e, const std::string& label) {
  if (e.rows() != e.cols()) throw Error(Errc::DimensionMismatch, label + ": not square");
  cons_.push_back({e, Kind::Psd, label});
}
void Problem::nonneg(const Expr& e, const std::string& label) {
  if (e.cols() != 1) throw Error(Errc::DimensionMismatch, label + ": not a column");
  cons_.push_back({e, Kind::NonNeg, label});
}

VarId Problem::find(const std::string& name) const {
  for (size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].name == name) return VarId{static_cast<int>(i)};
  return VarId{-1};
}

Eigen::MatrixXd Problem::value(VarId v, const Eigen::VectorXd& x) const {
  const auto& var = vars_.at(v.id);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(var.rows, var.cols);
  for (size_t k = 0; k < var.atoms.size(); ++k) {
    double xk = x(var.offset + static_cast<int>(k));
    if (xk == 0.0) continue;
    for (const auto& e : var.atoms[k].entries) X(e.row(), e.col()) += e.value() * xk;
  }
  return X;
}

void Problem::assign(VarId v, const Eigen::MatrixXd& X, Eigen::VectorXd& x) const {
  const auto& var = vars_.at(v.id);
  if (X.rows() != var.rows || X.cols() != var.cols)
    throw Error(Errc::DimensionMismatch, "value shape for " + var.name);
  if (x.size() != num_atoms()) throw Error(Errc::DimensionMismatch, "decision vector size");
  for (size_t k = 0; k < var.atoms.size(); ++k) {
    const auto& e = var.atoms[k].entries.front();
    x(var.offset + k) = X(e.row(), e.col()) / e.value();
  }
}

Eigen::MatrixXd Problem::value(const std::string& name, const Eigen::VectorXd& x) const {
  VarId v = find(name);
  if (v.id < 0) throw Error(Errc::MissingVariables, "no variable " + name);
  return value(v, x);
}

bool Problem::homogeneous() const {
  for (const auto& c : cons_)
    if (c.e.constant().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

Coefficients coefficients(const Problem& p, const Expr& e, bool symmetrize) {
  const int R = e.rows(), C = e.cols();
  Coefficients out;
  out.F0 = e.constant();
  if (symmetrize) out.F0 = 0.5 * (out.F0 + out.F0.transpose()).eval();
  std::map<int, Eigen::MatrixXd> acc;
  for (const auto& t : e.terms()) {
    const auto& var = p.var(t.var);
    // nonzero structure of L columns and R rows
    std::vector<std::vector<std::pair<int, double>>> lcol(t.L.cols()), rrow(t.R.rows());
    for (int j = 0; j < t.L.cols(); ++j)
      for (int i = 0; i < R; ++i)
        if (t.L(i, j) != 0.0) lcol[j].emplace_back(i, t.L(i, j));
    for (int i = 0; i < t.R.rows(); ++i)
      for (int j = 0; j < C; ++j)
        if (t.R(i, j) != 0.0) rrow[i].emplace_back(j, t.R(i, j));
    for (size_t k = 0; k < var.atoms.size(); ++k) {
      const int g = var.offset + static_cast<int>(k);
      Eigen::MatrixXd* M = nullptr;
      for (const auto& en : var.atoms[k].entries) {
        int a = t.transposed ? en.col() : en.row();
        int b = t.transposed ? en.row() : en.col();
        if (lcol[a].empty() || rrow[b].empty()) continue;
        if (!M) {
          auto it = acc.find(g);
          if (it == acc.end()) it = acc.emplace(g, Eigen::MatrixXd::Zero(R, C)).first;
          M = &it->second;
        }
        for (const auto& [i, lv] : lcol[a])
          for (const auto& [j, rv] : rrow[b]) (*M)(i, j) += en.value() * lv * rv;
      }
    }
  }
  for (auto& [g, M] : acc) {
    Eigen::MatrixXd S = symmetrize ? Eigen::MatrixXd(0.5 * (M + M.transpose())) : M;
    double scale = S.cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 0; j < C; ++j)
      for (int i = 0; i < R; ++i)
        if (std::abs(S(i, j)) > 1e-15 * scale) trip.emplace_back(i, j, S(i, j));
    Eigen::SparseMatrix<double> sp(R, C);
    sp.setFromTriplets(trip.begin(), trip.end());
    out.atoms.push_back(g);
    out.F.push_back(std::move(sp));
  }
  return out;
}

std::string Problem::to_text() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "variables " << vars_.size() << " atoms " << n_atoms_ << "\n";
  for (const auto& v : vars_)
    os << "var " << v.name << " " << v.rows << " " << v.cols << " offset " << v.offset
       << " atoms " << v.atoms.size() << "\n";
  for (size_t b = 0; b < cons_.size(); ++b) {
    const auto& c = cons_[b];
    const char* kind = c.kind == Kind::NegDef   ? "negdef"
                       : c.kind == Kind::PosDef ? "posdef"
                       : c.kind == Kind::Psd    ? "psd"
                                                : "nonneg";
    os << "block " << b << " " << kind << " dim " << c.e.rows() << " label " << c.label << "\n";
    Coefficients cf = coefficients(*this, c.e, c.kind != Kind::NonNeg);
    for (int j = 0; j < cf.F0.cols(); ++j)
      for (int i = 0; i < cf.F0.rows(); ++i)
        if (cf.F0(i, j) != 0.0 && i <= j) os << "c " << i << " " << j << " " << cf.F0(i, j) << "\n";
    for (size_t k = 0; k < cf.atoms.size(); ++k)
      for (int j = 0; j < cf.F[k].outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(cf.F[k], j); it; ++it)
          if (it.row() <= it.col())
            os << "a " << cf.atoms[k] << " " << it.row() << " " << it.col() << " " << it.value()
               << "\n";
  }
  return os.str();
}

}  // namespace etc::lmi
