#include <doctest.h>

#include <cmath>

#include "pidkit/compatibility.hpp"
#include "pidkit/random.hpp"

using namespace pidkit;

namespace {

double maxabs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

std::vector<CMatrix> z_basis() { return {basis_projector(2, 0), basis_projector(2, 1)}; }
std::vector<CMatrix> x_basis() {
  CMatrix p(2, 2), m(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  m << 0.5, -0.5, -0.5, 0.5;
  return {p, m};
}
std::vector<CMatrix> y_basis() {
  CMatrix p(2, 2), m(2, 2);
  p << 0.5, cplx(0, -0.5), cplx(0, 0.5), 0.5;
  m << 0.5, cplx(0, 0.5), cplx(0, -0.5), 0.5;
  return {p, m};
}

Pmd noisy(const Pmd& m, double eta) {
  auto e = m.effects;
  for (auto& row : e)
    for (auto& x : row) x = eta * x + (1 - eta) * x.trace() / 2.0 * CMatrix::Identity(2, 2);
  return Pmd(m.dim, e);
}

Pid phi_plus_assemblage(const Pmd& m) {
  CMatrix phi = CMatrix::Zero(4, 4);
  phi(0, 0) = phi(0, 3) = phi(3, 0) = phi(3, 3) = 0.5;
  return steer(ChoiMatrix(1, 4, phi), 2, m);
}

// Same marginal channel, outcome drawn uniformly: always simple.
Pid flattened(const Pid& p) {
  std::vector<std::vector<ChoiMatrix>> b(p.n_programs());
  ChoiMatrix m = (1.0 / p.n_outcomes()) * p.marginal();
  for (auto& row : b) row.assign(p.n_outcomes(), m);
  return Pid(p.din(), p.dout(), b);
}

PidSampling steerable() {
  PidSampling s;
  s.effect_rank = 1;
  return s;
}

const double kGeneralisedXZ = 3 - 2 * std::sqrt(2.0);

}  // namespace

TEST_CASE("single program devices are simple") {
  Rng rng(41);
  Pid p = pid_from_instrument(random_instrument(2, 2, 3, 2, rng), 1);
  SimplicityResult r = is_simple_pid(p);
  CHECK(r.verdict == Verdict::Simple);
  REQUIRE(r.certificate);
  CHECK(r.certificate->residual <= 1e-7);
  CHECK(certificate_residual(*r.certificate, p) <= 1e-7);
  CHECK(pid_distance(assemble(*r.certificate), p) <= 1e-7);
}

TEST_CASE("X/Z assemblage") {
  Pmd xz(2, {x_basis(), z_basis()});
  Pid a = phi_plus_assemblage(xz);

  SimplicityResult s = is_simple_pid(a);
  CHECK(s.verdict == Verdict::NonSimple);
  REQUIRE(s.witness);
  CHECK(witness_value(*s.witness, a) > 0);
  CHECK(dual_feasibility_defect(*s.witness, 1, 2) <= 1e-7);

  RoiPrimal rp = roi_primal(a);
  RoiDual rd = roi_dual(a);
  REQUIRE(rp.status == sdp::SdpStatus::Optimal);
  REQUIRE(rd.status == sdp::SdpStatus::Optimal);
  CHECK(std::abs(rp.r - rd.r) <= 1e-6);
  // Robustness against arbitrary noise. The white-noise threshold is checked below.
  CHECK(std::abs(rp.r - kGeneralisedXZ) <= 2e-4);

  RoiCertificate c = roi(a);
  CHECK(c.gap <= 1e-6);
  for (int x0 = 0; x0 < 2; ++x0)
    for (int x1 = 0; x1 < 2; ++x1) {
      CMatrix lhs = (a.block(x0, x1).mat() + c.r * c.noise.block(x0, x1).mat()) / (1 + c.r);
      CHECK(maxabs(lhs - c.simple_mix.block(x0, x1).mat()) <= 1e-7);
    }
  CHECK(validate_pid(c.noise).valid);
  CHECK(certificate_residual(c.mix_certificate, c.simple_mix) <= 1e-7);
  CHECK(dual_feasibility_defect(c.witness, 1, 2) <= 1e-7);
}

TEST_CASE("X/Z white-noise threshold sits at visibility 1/sqrt2") {
  Pmd xz(2, {x_basis(), z_basis()});
  Pid a = phi_plus_assemblage(xz);
  Pid flat = flattened(a);
  const double w_star = 1 - 1 / std::sqrt(2.0);
  Pid above = scale_mix({{1 - (w_star + 1e-3), &a}, {w_star + 1e-3, &flat}});
  Pid below = scale_mix({{1 - (w_star - 1e-2), &a}, {w_star - 1e-2, &flat}});
  CHECK(roi_primal(above).r <= 1e-6);
  CHECK(roi_primal(below).r > 1e-4);

  CHECK(roi_pmd(noisy(xz, 1 / std::sqrt(2.0))).r <= 1e-4);
  CHECK(roi_pmd(noisy(xz, 1 / std::sqrt(2.0) + 0.02)).r > 1e-4);
}

TEST_CASE("roi on simple devices and weak duality") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    Pid p = random_simple_pid(2, 2, 2, 2, 100 + s).pid;
    RoiPrimal rp = roi_primal(p);
    RoiDual rd = roi_dual(p);
    CHECK(rp.r <= 1e-7);
    CHECK(rd.r <= 1e-6);
    CHECK(rd.r <= rp.r + 1e-6);
  }
  for (std::uint64_t s = 0; s < 5; ++s) {
    Pid p = random_pid(2, 2, 2, 2, 200 + s, steerable());
    RoiPrimal rp = roi_primal(p);
    RoiDual rd = roi_dual(p);
    CHECK(rd.r <= rp.r + 1e-6);
    CHECK(std::abs(rd.r - rp.r) <= 1e-6);
  }
}

TEST_CASE("faithfulness on a mixed sample") {
  int agree = 0, total = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    for (const Pid& p : {random_simple_pid(2, 2, 2, 2, 300 + s).pid,
                         random_pid(2, 2, 2, 2, 400 + s, steerable())}) {
      bool simple = is_simple_pid(p).verdict == Verdict::Simple;
      bool zero = roi_primal(p).r <= 1e-6;
      agree += simple == zero;
      ++total;
    }
  }
  CHECK(agree == total);
}

TEST_CASE("convexity of the simple set") {
  Pid p = random_pid(2, 2, 2, 2, 501, steerable());
  double r = roi_primal(p).r;
  REQUIRE(r > 1e-3);
  Pid s = random_simple_pid(2, 2, 2, 2, 502).pid;
  for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    Pid m = scale_mix({{rho, &p}, {1 - rho, &s}});
    CHECK(roi_primal(m).r <= r + 1e-6);
  }
}

TEST_CASE("dual witness is sound on simple devices") {
  Pid p = random_pid(2, 2, 2, 2, 601, steerable());
  SimplicityResult res = is_simple_pid(p);
  REQUIRE(res.verdict == Verdict::NonSimple);
  REQUIRE(res.witness);
  CHECK(witness_value(*res.witness, p) > 0);
  double worst = -1;
  for (std::uint64_t s = 0; s < 50; ++s)
    worst = std::max(worst, witness_value(*res.witness, random_simple_pid(2, 2, 2, 2, 700 + s).pid));
  CHECK(worst <= 1e-6);
}

TEST_CASE("steering robustness with mutually unbiased bases") {
  Pid two = phi_plus_assemblage(Pmd(2, {x_basis(), z_basis()}));
  Pid three = phi_plus_assemblage(Pmd(2, {x_basis(), y_basis(), z_basis()}));
  for (const Pid* p : {&two, &three}) {
    RoiPrimal rp = roi_primal(*p);
    RoiDual rd = roi_dual(*p);
    CHECK(std::abs(rp.r - rd.r) <= 1e-6);
  }
  CHECK(roi_primal(three).r > roi_primal(two).r);
}

TEST_CASE("measurement compatibility") {
  // commuting pair: Z and a coarse Z
  Pmd commuting(2, {z_basis(), {0.3 * basis_projector(2, 0) + 0.7 * basis_projector(2, 1),
                                0.7 * basis_projector(2, 0) + 0.3 * basis_projector(2, 1)}});
  CHECK(is_compatible_pmd(commuting).compatible);
  CHECK(roi_pmd(commuting).r <= 1e-7);

  Pmd xz(2, {x_basis(), z_basis()});
  CompatibilityResult r = is_compatible_pmd(xz);
  CHECK_FALSE(r.compatible);
  REQUIRE(r.witness);

  Pmd single(2, {x_basis()});
  CompatibilityResult s = is_compatible_pmd(single);
  CHECK(s.compatible);
  REQUIRE(s.certificate);
  CHECK(s.certificate->residual <= 1e-7);

  RoiPmd rx = roi_pmd(xz);
  CHECK(std::abs(rx.r - rx.dual) <= 1e-6);
  CHECK(std::abs(rx.r - kGeneralisedXZ) <= 2e-4);
}

TEST_CASE("incoherent extension reproduces simple devices") {
  Rng rng(42);
  Pid one = pid_from_instrument(random_instrument(2, 2, 2, 2, rng), 1);
  for (const Pid& p : {one, random_simple_pid(2, 2, 2, 2, 801).pid, random_simple_pid(2, 3, 3, 2, 802).pid}) {
    SimplicityResult r = is_simple_pid(p);
    REQUIRE(r.certificate);
    ChoiMatrix e = build_incoherent_extension(*r.certificate);
    Pmd read = incoherent_readout(*r.certificate);
    CHECK(e.is_cp());
    CHECK(e.is_tp());
    Pid back = steer(e, p.dout(), read);
    CHECK(pid_distance(back, p) <= 1e-7);

    // environment marginal is classical for every input state
    int ne = read.dim;
    CMatrix rho = random_state(p.din(), p.din(), rng);
    CMatrix env = partial_trace(apply_choi(e, rho), {p.dout(), ne}, {1});
    CMatrix off = env;
    off.diagonal().setZero();
    CHECK(maxabs(off) <= 1e-12);
  }
}
