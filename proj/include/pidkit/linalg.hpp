// Dense complex linear algebra on tensor-product spaces and Choi matrices.
#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pidkit {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ValueError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Largest anti-Hermitian drift that hermitize() silently removes.
inline constexpr double kHermitianDrift = 1e-12;
inline constexpr double kDefaultRankTol = 1e-8;

// max |m - m^dagger| / 2, scaled by max(1, max |m_ij|).
double hermitian_drift(const CMatrix& m);

// (m + m^dagger)/2; throws ValueError when the drift exceeds kHermitianDrift.
CMatrix hermitize(const CMatrix& m);

CMatrix kron(const CMatrix& a, const CMatrix& b);

// Traces out every subsystem not listed in `keep` (kept order follows `keep`).
CMatrix partial_trace(const CMatrix& m, std::span<const int> dims, std::span<const int> keep);
CMatrix partial_trace(const CMatrix& m, std::initializer_list<int> dims,
                      std::initializer_list<int> keep);

// Reorders tensor factors: output factor k is input factor perm[k].
CMatrix permute_subsystems(const CMatrix& m, std::span<const int> dims, std::span<const int> perm);
CMatrix permute_subsystems(const CMatrix& m, std::initializer_list<int> dims,
                           std::initializer_list<int> perm);

struct HermitianEigen {
  RVector values;   // descending
  CMatrix vectors;  // columns, canonical phase and ordering
};

// Eigendecomposition with a reproducible basis. Degenerate eigenspaces are
// re-spanned from projected standard basis vectors, every vector gets its
// first non-negligible component real positive, and ties are broken by
// comparing (|v_0|, arg v_0, |v_1|, ...).
HermitianEigen eig_hermitian(const CMatrix& m);

double min_eigenvalue(const CMatrix& m);
double max_eigenvalue(const CMatrix& m);
double operator_norm(const CMatrix& m);  // largest singular value
double trace_norm(const CMatrix& m);

struct PinvSqrt {
  CMatrix pinv_sqrt;   // P^{-1/2} on the support, zero elsewhere
  CMatrix support;     // n x rank, eigenvectors kept
  RVector values;      // kept eigenvalues, descending
  int rank = 0;
  double cutoff = 0;
};

// Eigenvalues below rank_tol * lambda_max are dropped. Throws on a
// significantly negative input.
PinvSqrt psd_pinv_sqrt(const CMatrix& m, double rank_tol = kDefaultRankTol);

// Matrix square root of a PSD matrix (negative eigenvalues clipped).
CMatrix psd_sqrt(const CMatrix& m);

// Choi matrix J = sum_ij |i><j| (x) L(|i><j|), composite index i*dout + a.
class ChoiMatrix {
 public:
  ChoiMatrix() = default;
  ChoiMatrix(int din, int dout, const CMatrix& mat);

  static ChoiMatrix identity(int d);
  static ChoiMatrix zero(int din, int dout);
  // rho -> Tr[rho] sigma
  static ChoiMatrix replacer(int din, const CMatrix& sigma);

  int din() const { return din_; }
  int dout() const { return dout_; }
  const CMatrix& mat() const { return mat_; }

  // L(|i><j|)
  CMatrix block(int i, int j) const;
  // Tr_out J
  CMatrix marginal() const;

  bool is_cp(double eps = 1e-9) const;
  bool is_tp(double eps = 1e-9) const;

  ChoiMatrix& operator+=(const ChoiMatrix& o);
  friend ChoiMatrix operator+(ChoiMatrix a, const ChoiMatrix& b) { return a += b; }
  friend ChoiMatrix operator*(double s, const ChoiMatrix& a);

 private:
  int din_ = 0;
  int dout_ = 0;
  CMatrix mat_;
};

CMatrix apply_choi(const ChoiMatrix& j, const CMatrix& rho);
// Heisenberg picture: Tr[E L(rho)] = Tr[L^dagger(E) rho].
CMatrix apply_adjoint(const ChoiMatrix& j, const CMatrix& effect);

// Choi of second o first.
ChoiMatrix link_product(const ChoiMatrix& first, const ChoiMatrix& second);

ChoiMatrix choi_from_kraus(std::span<const CMatrix> kraus);

// Choi of a (x) b with factors ordered (in_a, in_b) and (out_a, out_b).
ChoiMatrix tensor_choi(const ChoiMatrix& a, const ChoiMatrix& b);

// (id_X (x) L)(t) for t on X (x) in(L), X of dimension dx.
CMatrix apply_on_second(const CMatrix& t, int dx, const ChoiMatrix& j);
// (id_X (x) L^dagger)(t) for t on X (x) out(L).
CMatrix adjoint_on_second(const CMatrix& t, int dx, const ChoiMatrix& j);

// Standard basis projector |i><i| in dimension d.
CMatrix basis_projector(int d, int i);

}  // namespace pidkit
