#include "pidkit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/KroneckerProduct>

namespace pidkit {

namespace {

std::vector<long> strides_of(std::span<const int> dims) {
  std::vector<long> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * dims[k + 1];
  return s;
}

long product(std::span<const int> dims) {
  long n = 1;
  for (int d : dims) {
    if (d <= 0) throw DimensionError("subsystem dimension must be positive");
    n *= d;
  }
  return n;
}

// Offsets of every multi-index over the listed factors, last factor fastest.
std::vector<long> offsets(std::span<const int> dims, std::span<const long> strides,
                          const std::vector<int>& factors) {
  std::vector<long> out{0};
  for (int f : factors) {
    std::vector<long> next;
    next.reserve(out.size() * dims[f]);
    for (long base : out)
      for (int i = 0; i < dims[f]; ++i) next.push_back(base + i * strides[f]);
    out.swap(next);
  }
  return out;
}

}  // namespace

double hermitian_drift(const CMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("matrix is not square");
  if (m.size() == 0) return 0.0;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / 2.0 / scale;
}

CMatrix hermitize(const CMatrix& m) {
  double drift = hermitian_drift(m);
  if (!(drift <= kHermitianDrift))
    throw ValueError("matrix is not Hermitian (drift " + std::to_string(drift) + ")");
  return (m + m.adjoint()) / 2.0;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

CMatrix partial_trace(const CMatrix& m, std::span<const int> dims, std::span<const int> keep) {
  long n = product(dims);
  if (m.rows() != n || m.cols() != n) throw DimensionError("partial_trace: size mismatch");
  std::vector<bool> kept(dims.size(), false);
  std::vector<int> keep_v;
  for (int k : keep) {
    if (k < 0 || k >= static_cast<int>(dims.size()) || kept[k])
      throw DimensionError("partial_trace: bad keep index");
    kept[k] = true;
    keep_v.push_back(k);
  }
  std::vector<int> traced;
  for (int k = 0; k < static_cast<int>(dims.size()); ++k)
    if (!kept[k]) traced.push_back(k);
  auto st = strides_of(dims);
  auto ok = offsets(dims, st, keep_v);
  auto ot = offsets(dims, st, traced);
  long nk = static_cast<long>(ok.size());
  CMatrix out = CMatrix::Zero(nk, nk);
  for (long r = 0; r < nk; ++r)
    for (long c = 0; c < nk; ++c) {
      cplx s = 0;
      for (long t : ot) s += m(ok[r] + t, ok[c] + t);
      out(r, c) = s;
    }
  return out;
}

CMatrix partial_trace(const CMatrix& m, std::initializer_list<int> dims,
                      std::initializer_list<int> keep) {
  return partial_trace(m, std::span<const int>(dims.begin(), dims.size()),
                       std::span<const int>(keep.begin(), keep.size()));
}

CMatrix permute_subsystems(const CMatrix& m, std::span<const int> dims, std::span<const int> perm) {
  long n = product(dims);
  if (m.rows() != n || m.cols() != n) throw DimensionError("permute_subsystems: size mismatch");
  if (perm.size() != dims.size()) throw DimensionError("permute_subsystems: bad permutation");
  std::vector<int> p(perm.begin(), perm.end());
  std::vector<int> check = p;
  std::sort(check.begin(), check.end());
  for (int k = 0; k < static_cast<int>(check.size()); ++k)
    if (check[k] != k) throw DimensionError("permute_subsystems: bad permutation");
  auto st = strides_of(dims);
  auto map = offsets(dims, st, p);
  CMatrix out(n, n);
  for (long r = 0; r < n; ++r)
    for (long c = 0; c < n; ++c) out(r, c) = m(map[r], map[c]);
  return out;
}

CMatrix permute_subsystems(const CMatrix& m, std::initializer_list<int> dims,
                           std::initializer_list<int> perm) {
  return permute_subsystems(m, std::span<const int>(dims.begin(), dims.size()),
                            std::span<const int>(perm.begin(), perm.size()));
}

namespace {

bool key_less(const CVector& a, const CVector& b) {
  constexpr double eps = 1e-12;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double ma = std::abs(a(i)), mb = std::abs(b(i));
    if (std::abs(ma - mb) > eps) return ma < mb;
    if (ma > 1e-8) {
      double pa = std::arg(a(i)), pb = std::arg(b(i));
      if (std::abs(pa - pb) > eps) return pa < pb;
    }
  }
  return false;
}

void fix_phase(Eigen::Ref<CVector> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double a = std::abs(v(i));
    if (a > 1e-8) {
      v *= std::conj(v(i)) / a;
      v(i) = a;
      return;
    }
  }
}

// Orthonormal basis of span(vs) built by pivoted Gram-Schmidt on the
// projected standard basis.
CMatrix canonical_span(const CMatrix& vs) {
  const Eigen::Index n = vs.rows(), g = vs.cols();
  CMatrix proj = vs * vs.adjoint();
  CMatrix basis(n, g);
  CMatrix residual = proj;
  for (Eigen::Index k = 0; k < g; ++k) {
    Eigen::Index best = 0;
    double best_norm = -1;
    for (Eigen::Index c = 0; c < n; ++c) {
      double nr = residual.col(c).norm();
      if (nr > best_norm + 1e-12) {
        best_norm = nr;
        best = c;
      }
    }
    CVector v = residual.col(best) / best_norm;
    basis.col(k) = v;
    residual -= v * (v.adjoint() * residual);
  }
  return basis;
}

}  // namespace

HermitianEigen eig_hermitian(const CMatrix& m) {
  CMatrix h = hermitize(m);
  const Eigen::Index n = h.rows();
  HermitianEigen out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && out.values(end - 1) - out.values(end) <= 1e-10 * scale) ++end;
    const Eigen::Index g = end - start;
    if (g > 1) {
      CMatrix span = canonical_span(out.vectors.middleCols(start, g));
      double mean = out.values.segment(start, g).mean();
      for (Eigen::Index k = 0; k < g; ++k) fix_phase(span.col(k));
      std::vector<Eigen::Index> order(g);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return key_less(span.col(a), span.col(b));
      });
      for (Eigen::Index k = 0; k < g; ++k) {
        out.vectors.col(start + k) = span.col(order[k]);
        out.values(start + k) = mean;
      }
    } else {
      fix_phase(out.vectors.col(start));
    }
    start = end;
  }
  return out;
}

double min_eigenvalue(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  CMatrix h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  CMatrix h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(h.rows() - 1);
}

double operator_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

double trace_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().sum();
}

PinvSqrt psd_pinv_sqrt(const CMatrix& m, double rank_tol) {
  auto e = eig_hermitian(m);
  PinvSqrt out;
  const Eigen::Index n = m.rows();
  out.pinv_sqrt = CMatrix::Zero(n, n);
  if (n == 0) return out;
  double lmax = std::max(0.0, e.values(0));
  double lmin = e.values(n - 1);
  if (lmin < -rank_tol * std::max(1.0, lmax))
    throw ValueError("psd_pinv_sqrt: matrix has a significantly negative eigenvalue");
  out.cutoff = rank_tol * lmax;
  int r = 0;
  while (r < n && e.values(r) > out.cutoff && e.values(r) > 0) ++r;
  out.rank = r;
  out.support = e.vectors.leftCols(r);
  out.values = e.values.head(r);
  RVector inv = out.values.cwiseSqrt().cwiseInverse();
  out.pinv_sqrt = out.support * inv.asDiagonal() * out.support.adjoint();
  return out;
}

CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es((m + m.adjoint()) / 2.0);
  RVector v = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().adjoint();
}

ChoiMatrix::ChoiMatrix(int din, int dout, const CMatrix& mat) : din_(din), dout_(dout) {
  if (din <= 0 || dout <= 0) throw DimensionError("Choi dimensions must be positive");
  if (mat.rows() != din * dout || mat.cols() != din * dout)
    throw DimensionError("Choi matrix size does not match din*dout");
  mat_ = hermitize(mat);
}

ChoiMatrix ChoiMatrix::identity(int d) {
  CVector v = CVector::Zero(d * d);
  for (int i = 0; i < d; ++i) v(i * d + i) = 1.0;
  return ChoiMatrix(d, d, v * v.adjoint());
}

ChoiMatrix ChoiMatrix::zero(int din, int dout) {
  return ChoiMatrix(din, dout, CMatrix::Zero(din * dout, din * dout));
}

ChoiMatrix ChoiMatrix::replacer(int din, const CMatrix& sigma) {
  return ChoiMatrix(din, static_cast<int>(sigma.rows()),
                    kron(CMatrix::Identity(din, din), sigma));
}

CMatrix ChoiMatrix::block(int i, int j) const {
  return mat_.block(static_cast<Eigen::Index>(i) * dout_, static_cast<Eigen::Index>(j) * dout_,
                    dout_, dout_);
}

CMatrix ChoiMatrix::marginal() const {
  CMatrix out(din_, din_);
  for (int i = 0; i < din_; ++i)
    for (int j = 0; j < din_; ++j) out(i, j) = block(i, j).trace();
  return out;
}

bool ChoiMatrix::is_cp(double eps) const { return min_eigenvalue(mat_) >= -eps; }

bool ChoiMatrix::is_tp(double eps) const {
  return (marginal() - CMatrix::Identity(din_, din_)).cwiseAbs().maxCoeff() <= eps;
}

ChoiMatrix& ChoiMatrix::operator+=(const ChoiMatrix& o) {
  if (o.din_ != din_ || o.dout_ != dout_) throw DimensionError("Choi sum: dimension mismatch");
  mat_ += o.mat_;
  return *this;
}

ChoiMatrix operator*(double s, const ChoiMatrix& a) {
  ChoiMatrix r = a;
  r.mat_ *= s;
  return r;
}

CMatrix apply_choi(const ChoiMatrix& j, const CMatrix& rho) {
  if (rho.rows() != j.din() || rho.cols() != j.din())
    throw DimensionError("apply_choi: input dimension mismatch");
  CMatrix out = CMatrix::Zero(j.dout(), j.dout());
  for (int a = 0; a < j.din(); ++a)
    for (int b = 0; b < j.din(); ++b)
      if (rho(a, b) != cplx(0)) out += rho(a, b) * j.block(a, b);
  return out;
}

CMatrix apply_adjoint(const ChoiMatrix& j, const CMatrix& effect) {
  if (effect.rows() != j.dout() || effect.cols() != j.dout())
    throw DimensionError("apply_adjoint: output dimension mismatch");
  CMatrix out(j.din(), j.din());
  for (int a = 0; a < j.din(); ++a)
    for (int b = 0; b < j.din(); ++b)
      out(b, a) = (effect.transpose().cwiseProduct(j.block(a, b))).sum();
  return out;
}

ChoiMatrix link_product(const ChoiMatrix& first, const ChoiMatrix& second) {
  if (first.dout() != second.din()) throw DimensionError("link_product: dimension mismatch");
  const int din = first.din(), dout = second.dout();
  CMatrix out(static_cast<Eigen::Index>(din) * dout, static_cast<Eigen::Index>(din) * dout);
  for (int i = 0; i < din; ++i)
    for (int j = i; j < din; ++j) {
      CMatrix b = apply_choi(second, first.block(i, j));
      out.block(static_cast<Eigen::Index>(i) * dout, static_cast<Eigen::Index>(j) * dout, dout,
                dout) = b;
      if (i != j)
        out.block(static_cast<Eigen::Index>(j) * dout, static_cast<Eigen::Index>(i) * dout, dout,
                  dout) = b.adjoint();
    }
  return ChoiMatrix(din, dout, out);
}

ChoiMatrix choi_from_kraus(std::span<const CMatrix> kraus) {
  if (kraus.empty()) throw DimensionError("choi_from_kraus: no Kraus operators");
  const int dout = static_cast<int>(kraus[0].rows()), din = static_cast<int>(kraus[0].cols());
  CMatrix j = CMatrix::Zero(din * dout, din * dout);
  for (const auto& k : kraus) {
    if (k.rows() != dout || k.cols() != din)
      throw DimensionError("choi_from_kraus: inconsistent Kraus shapes");
    CVector v(din * dout);
    for (int i = 0; i < din; ++i)
      for (int a = 0; a < dout; ++a) v(i * dout + a) = k(a, i);
    j += v * v.adjoint();
  }
  return ChoiMatrix(din, dout, j);
}

ChoiMatrix tensor_choi(const ChoiMatrix& a, const ChoiMatrix& b) {
  CMatrix k = kron(a.mat(), b.mat());
  CMatrix p = permute_subsystems(k, {a.din(), a.dout(), b.din(), b.dout()}, {0, 2, 1, 3});
  return ChoiMatrix(a.din() * b.din(), a.dout() * b.dout(), p);
}

CMatrix apply_on_second(const CMatrix& t, int dx, const ChoiMatrix& j) {
  const int din = j.din(), dout = j.dout();
  if (t.rows() != static_cast<Eigen::Index>(dx) * din || t.cols() != t.rows())
    throw DimensionError("apply_on_second: size mismatch");
  CMatrix out(static_cast<Eigen::Index>(dx) * dout, static_cast<Eigen::Index>(dx) * dout);
  for (int x = 0; x < dx; ++x)
    for (int y = 0; y < dx; ++y)
      out.block(static_cast<Eigen::Index>(x) * dout, static_cast<Eigen::Index>(y) * dout, dout,
                dout) = apply_choi(j, t.block(static_cast<Eigen::Index>(x) * din,
                                              static_cast<Eigen::Index>(y) * din, din, din));
  return out;
}

CMatrix adjoint_on_second(const CMatrix& t, int dx, const ChoiMatrix& j) {
  const int din = j.din(), dout = j.dout();
  if (t.rows() != static_cast<Eigen::Index>(dx) * dout || t.cols() != t.rows())
    throw DimensionError("adjoint_on_second: size mismatch");
  CMatrix out(static_cast<Eigen::Index>(dx) * din, static_cast<Eigen::Index>(dx) * din);
  for (int x = 0; x < dx; ++x)
    for (int y = 0; y < dx; ++y)
      out.block(static_cast<Eigen::Index>(x) * din, static_cast<Eigen::Index>(y) * din, din,
                din) = apply_adjoint(j, t.block(static_cast<Eigen::Index>(x) * dout,
                                                static_cast<Eigen::Index>(y) * dout, dout, dout));
  return out;
}

CMatrix basis_projector(int d, int i) {
  CMatrix p = CMatrix::Zero(d, d);
  p(i, i) = 1.0;
  return p;
}

}  // namespace pidkit
