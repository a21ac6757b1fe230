#include <doctest.h>

#include "pidkit/linalg.hpp"
#include "pidkit/random.hpp"

using namespace pidkit;

namespace {

CMatrix rand_herm(int n, Rng& rng) {
  CMatrix g = random_gaussian(n, n, rng);
  return (g + g.adjoint()) / 2.0;
}

double maxabs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

CMatrix diag(std::initializer_list<double> v) {
  CMatrix m = CMatrix::Zero(v.size(), v.size());
  int i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

}  // namespace

TEST_CASE("kron") {
  CHECK(maxabs(kron(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)) - CMatrix::Identity(4, 4)) == 0);
  CHECK(maxabs(kron(diag({1, 2}), diag({3, 4})) - diag({3, 4, 6, 8})) == 0);

  Rng rng(11);
  CMatrix a = random_gaussian(2, 2, rng), b = random_gaussian(2, 2, rng);
  CVector va = random_gaussian(2, 1, rng), vb = random_gaussian(2, 1, rng);
  CVector lhs = kron(a, b) * kron(va, vb);
  CVector rhs = kron(a * va, b * vb);
  CHECK(maxabs(lhs - rhs) < 1e-13);
}

TEST_CASE("partial trace") {
  CMatrix ii = CMatrix::Identity(4, 4);
  CHECK(maxabs(partial_trace(ii, {2, 2}, {0}) - 2.0 * CMatrix::Identity(2, 2)) == 0);

  Rng rng(12);
  CMatrix rho = random_state(2, 2, rng), sigma = random_state(3, 3, rng) * 2.5;
  CMatrix r = partial_trace(kron(rho, sigma), {2, 3}, {0});
  CHECK(maxabs(r - sigma.trace() * rho) < 1e-13);
  CMatrix s = partial_trace(kron(rho, sigma), {2, 3}, {1});
  CHECK(maxabs(s - rho.trace() * sigma) < 1e-13);

  CMatrix m = rand_herm(12, rng);
  for (auto keep : std::vector<std::vector<int>>{{0}, {1}, {2}, {0, 2}, {2, 0}}) {
    CMatrix t = partial_trace(m, std::vector<int>{2, 3, 2}, keep);
    CHECK(std::abs(t.trace() - m.trace()) < 1e-12);
  }
  // kept order follows `keep`
  CMatrix a = random_state(2, 2, rng), b = random_state(3, 3, rng), c = random_state(2, 2, rng);
  CMatrix abc = kron(kron(a, b), c);
  CHECK(maxabs(partial_trace(abc, std::vector<int>{2, 3, 2}, std::vector<int>{2, 0}) - kron(c, a)) < 1e-13);

  CHECK_THROWS_AS(partial_trace(ii, {2, 3}, {0}), DimensionError);
}

TEST_CASE("permute subsystems") {
  Rng rng(13);
  CMatrix a = random_state(2, 2, rng), b = random_state(3, 3, rng), c = random_state(2, 2, rng);
  CMatrix p = permute_subsystems(kron(kron(a, b), c), {2, 3, 2}, {2, 0, 1});
  CHECK(maxabs(p - kron(kron(c, a), b)) < 1e-14);
}

TEST_CASE("hermitize and drift") {
  CMatrix m(2, 2);
  m << 1.0, cplx(0, 1), cplx(0, -1) + 1e-14, 2.0;
  CMatrix h = hermitize(m);
  CHECK(maxabs(h - h.adjoint()) == 0);
  m(1, 0) += 1e-6;
  CHECK_THROWS_AS(hermitize(m), ValueError);
}

TEST_CASE("eig_hermitian") {
  HermitianEigen e = eig_hermitian(CMatrix::Identity(3, 3));
  CHECK(e.values.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(e.values(i) == doctest::Approx(1.0));
  // tie-break ascends in (|v_0|, arg v_0, |v_1|, ...): e2, e1, e0
  CHECK(maxabs(e.vectors - CMatrix::Identity(3, 3).rowwise().reverse()) < 1e-14);

  HermitianEigen d = eig_hermitian(diag({2, -1}));
  CHECK(d.values(0) == doctest::Approx(2.0));
  CHECK(d.values(1) == doctest::Approx(-1.0));
  CHECK(maxabs(d.vectors - CMatrix::Identity(2, 2)) < 1e-14);

  Rng rng(14);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    int n = 1 + static_cast<int>(rng.uniform() * 16);
    CMatrix m = rand_herm(n, rng);
    HermitianEigen r = eig_hermitian(m);
    CMatrix back = r.vectors * r.values.cast<cplx>().asDiagonal() * r.vectors.adjoint();
    double scale = std::max(1.0, r.values.cwiseAbs().maxCoeff());
    worst = std::max(worst, maxabs(back - m) / scale);
    for (int i = 1; i < n; ++i) REQUIRE(r.values(i - 1) >= r.values(i));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("eigenbasis is reproducible on degenerate spectra") {
  Rng rng(15);
  CMatrix u = random_unitary(4, rng);
  CMatrix m = u * diag({3, 1, 1, 0}) * u.adjoint();
  m = hermitize(m);
  HermitianEigen a = eig_hermitian(m);
  HermitianEigen b = eig_hermitian(CMatrix(m));
  CHECK(maxabs(a.vectors - b.vectors) == 0);
  // first significant component of each vector is real positive
  for (int k = 0; k < 4; ++k) {
    int i = 0;
    while (std::abs(a.vectors(i, k)) <= 1e-8) ++i;
    CHECK(std::abs(a.vectors(i, k).imag()) < 1e-12);
    CHECK(a.vectors(i, k).real() > 0);
  }
}

TEST_CASE("psd_pinv_sqrt") {
  PinvSqrt a = psd_pinv_sqrt(CMatrix::Identity(2, 2));
  CHECK(a.rank == 2);
  CHECK(maxabs(a.pinv_sqrt - CMatrix::Identity(2, 2)) < 1e-14);

  PinvSqrt b = psd_pinv_sqrt(diag({4, 0}));
  CHECK(b.rank == 1);
  CHECK(maxabs(b.pinv_sqrt - diag({0.5, 0})) < 1e-14);
  CHECK(std::abs(std::abs(b.support(0, 0)) - 1.0) < 1e-14);

  Rng rng(16);
  CMatrix g = random_gaussian(4, 2, rng);
  CMatrix m = g * g.adjoint();
  PinvSqrt c = psd_pinv_sqrt(m);
  CHECK(c.rank == 2);
  CMatrix proj = c.support * c.support.adjoint();
  CHECK(maxabs(c.pinv_sqrt * m * c.pinv_sqrt - proj) < 1e-8);

  CHECK_THROWS_AS(psd_pinv_sqrt(diag({1, -0.5})), ValueError);
}

TEST_CASE("apply_choi") {
  Rng rng(17);
  CMatrix rho = random_state(2, 2, rng);
  CHECK(maxabs(apply_choi(ChoiMatrix::identity(2), rho) - rho) < 1e-14);

  ChoiMatrix dep = ChoiMatrix::replacer(2, CMatrix::Identity(2, 2) / 2.0);
  CHECK(maxabs(apply_choi(dep, rho) - CMatrix::Identity(2, 2) / 2.0 * rho.trace()) < 1e-14);

  std::vector<CMatrix> kraus;
  CMatrix v = random_isometry(9, 3, rng);
  for (int k = 0; k < 3; ++k) kraus.push_back(v.block(3 * k, 0, 3, 3));
  ChoiMatrix j = choi_from_kraus(kraus);
  CMatrix r3 = random_state(3, 2, rng);
  CMatrix direct = CMatrix::Zero(3, 3);
  for (const auto& k : kraus) direct += k * r3 * k.adjoint();
  CHECK(maxabs(apply_choi(j, r3) - direct) < 1e-10);
  CHECK(j.is_cp());
  CHECK(j.is_tp());

  // Heisenberg picture
  CMatrix e = random_state(3, 3, rng);
  cplx lhs = (e * apply_choi(j, r3)).trace();
  cplx rhs = (apply_adjoint(j, e) * r3).trace();
  CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("choi_from_kraus") {
  ChoiMatrix phi = choi_from_kraus(std::vector<CMatrix>{CMatrix::Identity(2, 2)});
  CHECK(std::abs(phi.mat().trace() - 2.0) < 1e-14);
  CHECK(maxabs(phi.mat() - ChoiMatrix::identity(2).mat()) < 1e-14);
  HermitianEigen e = eig_hermitian(phi.mat());
  CHECK(e.values(0) == doctest::Approx(2.0));
  CHECK(std::abs(e.values(1)) < 1e-12);

  CMatrix k0 = CMatrix::Zero(2, 2), k1 = CMatrix::Zero(2, 2);
  k0(0, 0) = 1;
  k1(0, 1) = 1;
  ChoiMatrix mp = choi_from_kraus(std::vector<CMatrix>{k0, k1});
  CHECK(mp.is_tp());
  CMatrix zero = CMatrix::Zero(2, 2);
  zero(0, 0) = 1;
  CHECK(maxabs(apply_choi(mp, basis_projector(2, 1)) - zero) < 1e-14);
  CHECK(maxabs(apply_choi(mp, basis_projector(2, 0)) - zero) < 1e-14);

  CMatrix z = CMatrix::Identity(2, 2);
  z(1, 1) = -1;
  ChoiMatrix zc = choi_from_kraus(std::vector<CMatrix>{z});
  CHECK(zc.is_cp());
  CHECK(zc.is_tp());

  CHECK_THROWS_AS(choi_from_kraus(std::vector<CMatrix>{CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)}),
                  DimensionError);
}

TEST_CASE("link product") {
  CHECK(maxabs(link_product(ChoiMatrix::identity(3), ChoiMatrix::identity(3)).mat() -
               ChoiMatrix::identity(3).mat()) < 1e-14);

  Rng rng(18);
  ChoiMatrix a = random_channel(2, 3, 2, rng);
  ChoiMatrix tr = ChoiMatrix::replacer(3, CMatrix::Identity(1, 1));
  CHECK(maxabs(link_product(a, tr).mat() - CMatrix::Identity(2, 2)) < 1e-12);

  ChoiMatrix b = random_channel(3, 2, 3, rng), c = random_channel(2, 4, 2, rng);
  CMatrix rho = random_state(2, 2, rng);
  CHECK(maxabs(apply_choi(link_product(a, b), rho) - apply_choi(b, apply_choi(a, rho))) < 1e-10);

  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    ChoiMatrix x = random_channel(2, 3, 2, rng), y = random_channel(3, 2, 2, rng),
               z = random_channel(2, 2, 3, rng);
    worst = std::max(worst, maxabs(link_product(link_product(x, y), z).mat() -
                                   link_product(x, link_product(y, z)).mat()));
  }
  CHECK(worst < 1e-9);
  CHECK_THROWS_AS(link_product(a, c), DimensionError);
}

TEST_CASE("tensor_choi and partial application") {
  Rng rng(19);
  ChoiMatrix a = random_channel(2, 3, 2, rng), b = random_channel(2, 2, 2, rng);
  ChoiMatrix ab = tensor_choi(a, b);
  CMatrix r1 = random_state(2, 2, rng), r2 = random_state(2, 1, rng);
  CHECK(maxabs(apply_choi(ab, kron(r1, r2)) - kron(apply_choi(a, r1), apply_choi(b, r2))) < 1e-12);

  CMatrix t = kron(random_state(3, 3, rng), r1);
  CMatrix direct = apply_choi(tensor_choi(ChoiMatrix::identity(3), a), t);
  CHECK(maxabs(apply_on_second(t, 3, a) - direct) < 1e-12);

  CMatrix e = random_state(9, 9, rng);
  CMatrix x = random_state(6, 6, rng);
  cplx lhs = (e * apply_on_second(x, 3, a)).trace();
  cplx rhs = (adjoint_on_second(e, 3, a) * x).trace();
  CHECK(std::abs(lhs - rhs) < 1e-12);
}
