#include <cmath>

#include "pidkit/sdp.hpp"

namespace pidkit::sdp {

std::vector<CMatrix> hermitian_basis(int n) {
  std::vector<CMatrix> out;
  out.reserve(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) out.push_back(basis_projector(n, i));
  const cplx I(0, 1);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      CMatrix re = CMatrix::Zero(n, n), im = CMatrix::Zero(n, n);
      re(i, j) = re(j, i) = 0.5;
      im(i, j) = 0.5 * I;
      im(j, i) = -0.5 * I;
      out.push_back(re);
      out.push_back(im);
    }
  return out;
}

int HermitianProgram::add_complex_block(std::string name, int dim) {
  dims_.push_back(dim);
  complex_.push_back(true);
  return problem_.add_block(std::move(name), 2 * dim);
}

int HermitianProgram::add_real_block(std::string name, int dim) {
  dims_.push_back(dim);
  complex_.push_back(false);
  return problem_.add_block(std::move(name), dim);
}

// Every coefficient is lifted so that <lift(A), X> = 2 Re Tr[A H]; right-hand
// sides and the objective are doubled to match and halved on the way out.
SymSparse HermitianProgram::lift(int block, const CMatrix& a) const {
  if (block < 0 || block >= num_blocks()) throw DimensionError("unknown block");
  const int n = dims_[block];
  if (a.rows() != n || a.cols() != n) throw DimensionError("coefficient size mismatch");
  double scale = std::max(1.0, a.size() ? a.cwiseAbs().maxCoeff() : 0.0);
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValueError("coefficient matrix is not Hermitian");
  SymSparse s;
  if (!complex_[block]) {
    if (a.imag().cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValueError("complex coefficient on a real block");
    for (int c = 0; c < n; ++c)
      for (int r = 0; r <= c; ++r) {
        double v = 0.5 * (a(r, c).real() + a(c, r).real());
        if (v != 0.0) s.add(r, c, 2.0 * v);
      }
    return s;
  }
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      cplx v = a(r, c);
      if (v == cplx(0)) continue;
      // Full embedded entries restricted to row <= col.
      if (r <= c && v.real() != 0.0) {
        s.add(r, c, v.real());
        s.add(r + n, c + n, v.real());
      }
      // (r+n, c) = Im v, stored as (c, r+n); its mirror (r, c+n) = -Im v
      // is the same stored entry as (c+n, r) from element (c, r).
      if (v.imag() != 0.0) s.add(c, r + n, v.imag() * (r == c ? 0.0 : 1.0));
    }
  return s;
}

void HermitianProgram::add_objective(int block, const CMatrix& c) {
  problem_.objective.push_back({block, lift(block, c)});
}

int HermitianProgram::add_constraint(const std::vector<std::pair<int, CMatrix>>& terms,
                                     double rhs) {
  Constraint con;
  for (const auto& [blk, a] : terms) {
    auto s = lift(blk, a);
    if (!s.empty()) con.terms.push_back({blk, std::move(s)});
  }
  con.rhs = 2.0 * rhs;
  problem_.constraints.push_back(std::move(con));
  return num_constraints() - 1;
}

int HermitianProgram::add_matrix_equality(int dim,
                                          const std::vector<std::pair<int, Adjoint>>& terms,
                                          const CMatrix& rhs) {
  if (rhs.rows() != dim || rhs.cols() != dim) throw DimensionError("rhs size mismatch");
  int first = num_constraints();
  for (const auto& e : hermitian_basis(dim)) {
    std::vector<std::pair<int, CMatrix>> coeffs;
    coeffs.reserve(terms.size());
    for (const auto& [blk, adj] : terms) coeffs.push_back({blk, adj(e)});
    add_constraint(coeffs, (e * rhs).trace().real());
  }
  return first;
}

HermitianProgram::Result HermitianProgram::solve(const SolverOptions& options) const {
  Result r;
  r.raw = sdp::solve(problem_, options);
  r.status = r.raw.status;
  r.primal_value = r.raw.primal_value / 2.0;
  r.dual_value = r.raw.dual_value / 2.0;
  r.y = r.raw.y;
  const cplx I(0, 1);
  for (int k = 0; k < num_blocks(); ++k) {
    const int n = dims_[k];
    const RMatrix& x = r.raw.x[k];
    const RMatrix& z = r.raw.z[k];
    if (complex_[k]) {
      auto back = [&](const RMatrix& m) {
        CMatrix h = 0.5 * (m.topLeftCorner(n, n) + m.bottomRightCorner(n, n)).cast<cplx>() +
                    0.5 * I * (m.bottomLeftCorner(n, n) - m.topRightCorner(n, n)).cast<cplx>();
        return CMatrix((h + h.adjoint()) / 2.0);
      };
      r.x.push_back(back(x));
      r.z.push_back(back(z));
    } else {
      r.x.push_back(x.cast<cplx>());
      r.z.push_back((0.5 * z).cast<cplx>());
    }
  }
  return r;
}

}  // namespace pidkit::sdp
