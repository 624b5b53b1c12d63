#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <string>
#include <vector>

namespace etc::lmi {

// One scalar decision coordinate of a matrix variable: the positions (and weights) it fills.
struct Atom {
  std::vector<Eigen::Triplet<double>> entries;
};

struct Variable {
  std::string name;
  int rows = 0, cols = 0;
  int offset = 0;  // index of the first atom in the global decision vector
  std::vector<Atom> atoms;
};

struct VarId {
  int id = -1;
};

// L * X * R (or L * X^T * R when transposed).
struct Term {
  int var = -1;
  Eigen::MatrixXd L, R;
  bool transposed = false;
};

class Problem;

// Matrix expression affine in the decision variables.
class Expr {
 public:
  Expr() = default;
  Expr(int rows, int cols);
  explicit Expr(const Eigen::MatrixXd& constant);

  static Expr zero(int rows, int cols) { return Expr(rows, cols); }
  static Expr identity(int n) { return Expr(Eigen::MatrixXd::Identity(n, n)); }

  int rows() const { return static_cast<int>(c_.rows()); }
  int cols() const { return static_cast<int>(c_.cols()); }
  const Eigen::MatrixXd& constant() const { return c_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  Expr transpose() const;
  Expr sym() const { return *this + transpose(); }

  Expr& operator+=(const Expr& o);
  Expr& operator-=(const Expr& o);
  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a -= b; }
  friend Expr operator-(const Expr& a) { return (-1.0) * a; }
  friend Expr operator*(double s, const Expr& e);
  friend Expr operator*(const Eigen::MatrixXd& M, const Expr& e);
  friend Expr operator*(const Expr& e, const Eigen::MatrixXd& M);

  Eigen::MatrixXd eval(const Problem& p, const Eigen::VectorXd& x) const;

  // Grid of blocks; every block in a block-row shares rows, every block in a block-column
  // shares cols.
  static Expr blocks(const std::vector<std::vector<Expr>>& grid);

 private:
  friend class Problem;
  Eigen::MatrixXd c_;
  std::vector<Term> terms_;
};

Expr sym(const Expr& e);
// s * M for a 1x1 expression s.
Expr kron(const Expr& s, const Eigen::MatrixXd& M);

enum class Kind {
  NegDef,  // strict, e < 0
  PosDef,  // strict, e > 0
  Psd,     // e >= 0
  NonNeg,  // elementwise >= 0 on a column vector
};

struct Constraint {
  Expr e;
  Kind kind;
  std::string label;
};

class Problem {
 public:
  VarId symmetric(const std::string& name, int n);
  VarId full(const std::string& name, int rows, int cols);
  VarId scalar(const std::string& name);
  VarId structured(const std::string& name, int rows, int cols, std::vector<Atom> atoms);

  Expr operator()(VarId v) const;

  void neg_def(const Expr& e, const std::string& label);
  void pos_def(const Expr& e, const std::string& label);
  void psd(const Expr& e, const std::string& label);
  void nonneg(const Expr& e, const std::string& label);

  int num_atoms() const { return n_atoms_; }
  int num_vars() const { return static_cast<int>(vars_.size()); }
  const Variable& var(VarId v) const { return vars_.at(v.id); }
  const Variable& var(int id) const { return vars_.at(id); }
  VarId find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name).id >= 0; }
  const std::vector<Constraint>& constraints() const { return cons_; }

  Eigen::MatrixXd value(VarId v, const Eigen::VectorXd& x) const;
  Eigen::MatrixXd value(const std::string& name, const Eigen::VectorXd& x) const;
  // Writes the atoms of v read off X (first entry of each atom) into x.
  void assign(VarId v, const Eigen::MatrixXd& X, Eigen::VectorXd& x) const;

  // True when every constraint has a zero constant part, so feasible points scale freely.
  bool homogeneous() const;

  // Text dump: variable dictionary, then per-block coefficient triples.
  std::string to_text() const;

 private:
  VarId add(Variable v);
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  int n_atoms_ = 0;
};

// Coefficient matrices of a symmetric(ized) expression: F(x) = F0 + sum_k x_k F_k.
struct Coefficients {
  Eigen::MatrixXd F0;
  std::vector<int> atoms;                          // global atom indices, sorted
  std::vector<Eigen::SparseMatrix<double>> F;      // matching atoms
};

Coefficients coefficients(const Problem& p, const Expr& e, bool symmetrize = true);

}  // namespace etc::lmi
