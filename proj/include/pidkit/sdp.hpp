// Dense primal-dual interior point solver for block semidefinite programs
//
//   minimise    sum_b <C_b, X_b>
//   subject to  sum_b <A_ib, X_b> = b_i,   X_b >= 0
//
// with dual  maximise b^T y  subject to  C_b - sum_i y_i A_ib = Z_b >= 0.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pidkit/linalg.hpp"

namespace pidkit::sdp {

// Entry of a symmetric matrix, stored once with row <= col.
struct Entry {
  int row;
  int col;
  double value;
};

class SymSparse {
 public:
  SymSparse() = default;
  // Rejects matrices with an antisymmetric part above 1e-12.
  static SymSparse from_dense(const RMatrix& m);
  void add(int row, int col, double value);  // adds value at (row,col) and (col,row)

  double dot(const RMatrix& x) const;  // <A, X>
  void add_to(RMatrix& dst, double scale) const;
  RMatrix dense(int n) const;
  double frobenius() const;
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

struct Term {
  int block;
  SymSparse matrix;
};

struct Constraint {
  std::vector<Term> terms;
  double rhs = 0.0;
};

struct Block {
  std::string name;
  int dim;
};

struct SdpProblem {
  std::vector<Block> blocks;
  std::vector<Term> objective;
  std::vector<Constraint> constraints;

  int add_block(std::string name, int dim);
  // Throws DimensionError on bad block references or out-of-range entries.
  void validate() const;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };
const char* to_string(SdpStatus s);

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-7;
  int max_iter = 200;
  double divergence = 1e8;
  // When progress stalls, the best iterate is still accepted if every measure
  // is within this factor of its tolerance (reported via reduced_accuracy).
  double stall_factor = 100;
  bool verbose = false;  // iteration log on stderr
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  double primal_value = 0.0;
  double dual_value = 0.0;
  std::vector<RMatrix> x;  // primal blocks
  std::vector<RMatrix> z;  // dual slacks
  RVector y;               // multipliers (an improving ray when Infeasible)
  double gap = 0.0;        // |primal - dual| / (1 + |primal|)
  double primal_residual = 0.0;  // ||b - A(X)|| / (1 + ||b||)
  double dual_residual = 0.0;    // ||C - Z - A*(y)|| / (1 + ||C||)
  double complementarity = 0.0;  // <X, Z> / (1 + |primal|)
  int iterations = 0;
  bool reduced_accuracy = false;
};

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {});

// Real symmetric embedding [[Re h, -Im h], [Im h, Re h]].
RMatrix embed_complex(const CMatrix& h);

// Recomputes residuals of a candidate solution against the problem data.
struct KktReport {
  double primal_residual;
  double dual_residual;
  double complementarity;
  double min_eig_x;
  double min_eig_z;
};
KktReport kkt_report(const SdpProblem& problem, const SdpSolution& solution);

// Hermitian front end: complex PSD blocks and real symmetric blocks, real
// affine constraints Re sum Tr[A_t H_t] = rhs. Complex blocks go through the
// real embedding, objective values are reported in the original scale.
class HermitianProgram {
 public:
  int add_complex_block(std::string name, int dim);
  int add_real_block(std::string name, int dim);

  void add_objective(int block, const CMatrix& c);
  int add_constraint(const std::vector<std::pair<int, CMatrix>>& terms, double rhs);

  // Matrix equality sum_t L_t(H_t) = R on a dim x dim Hermitian space.
  // Each L_t is supplied through its adjoint, applied to Hermitian basis
  // elements. Returns the index of the first constraint.
  using Adjoint = std::function<CMatrix(const CMatrix&)>;
  int add_matrix_equality(int dim, const std::vector<std::pair<int, Adjoint>>& terms,
                          const CMatrix& rhs);

  int num_blocks() const { return static_cast<int>(dims_.size()); }
  int num_constraints() const { return static_cast<int>(problem_.constraints.size()); }
  const SdpProblem& real_problem() const { return problem_; }

  struct Result {
    SdpStatus status;
    double primal_value;
    double dual_value;
    std::vector<CMatrix> x;  // Hermitian (or real) primal blocks
    std::vector<CMatrix> z;  // dual slacks in the same scale
    RVector y;
    SdpSolution raw;
  };
  Result solve(const SolverOptions& options = {}) const;

 private:
  SymSparse lift(int block, const CMatrix& a) const;

  std::vector<int> dims_;
  std::vector<bool> complex_;
  SdpProblem problem_;
};

// Standard Hermitian basis of dimension n: diagonal units, then for i<j the
// symmetric and antisymmetric off-diagonal pairs, normalised so that
// Tr[E H] returns H_ii, Re H_ij, Im H_ij.
std::vector<CMatrix> hermitian_basis(int n);

}  // namespace pidkit::sdp
