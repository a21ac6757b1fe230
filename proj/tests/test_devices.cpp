#include <doctest.h>

#include "pidkit/compatibility.hpp"
#include "pidkit/random.hpp"

using namespace pidkit;

namespace {

double maxabs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Lueders instrument of a projective measurement.
Instrument lueders(const std::vector<CMatrix>& projectors) {
  std::vector<ChoiMatrix> b;
  for (const auto& p : projectors) b.push_back(choi_from_kraus(std::vector<CMatrix>{p}));
  return Instrument(b);
}

std::vector<CMatrix> z_basis() { return {basis_projector(2, 0), basis_projector(2, 1)}; }
std::vector<CMatrix> x_basis() {
  CMatrix p(2, 2), m(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  m << 0.5, -0.5, -0.5, 0.5;
  return {p, m};
}

ChoiMatrix phi_plus_state() {
  CMatrix phi = CMatrix::Zero(4, 4);
  phi(0, 0) = phi(0, 3) = phi(3, 0) = phi(3, 3) = 0.5;
  return ChoiMatrix(1, 4, phi);
}

}  // namespace

TEST_CASE("validate_pid") {
  Pid single = pid_from_instrument(lueders(z_basis()), 1);
  PidValidation v = validate_pid(single);
  CHECK(v.valid);
  CHECK(v.cp_defect < 1e-12);
  CHECK(v.tp_defect < 1e-12);
  CHECK(v.nonsignaling_defect < 1e-12);

  Instrument x = lueders(x_basis()), z = lueders(z_basis());
  Pid xz(2, 2, {x.branches, z.branches});
  PidValidation s = validate_pid(xz);
  CHECK_FALSE(s.valid);
  // the dephasing channels in two bases differ by 2 in trace norm of the Choi matrices
  CHECK(s.nonsignaling_defect == doctest::Approx(2.0).epsilon(1e-9));

  auto blocks = single.blocks();
  blocks[0][1] = -1.0 * blocks[0][1];
  PidValidation n = validate_pid(Pid(2, 2, blocks));
  CHECK_FALSE(n.valid);
  CHECK(n.cp_defect > 0);
}

TEST_CASE("steer") {
  // product extension V = I (x) |0>: blocks are the identity channel weighted by p(x1|x0)
  CMatrix v = CMatrix::Zero(4, 2);
  v(0, 0) = 1;
  v(2, 1) = 1;
  ChoiMatrix ext = choi_from_kraus(std::vector<CMatrix>{v});
  Rng rng(31);
  Pmd m = random_pmd(2, 2, 3, 2, rng);
  Pid p = steer(ext, 2, m);
  CHECK(validate_pid(p).valid);
  for (int x0 = 0; x0 < 2; ++x0)
    for (int x1 = 0; x1 < 3; ++x1) {
      double w = m.effects[x0][x1](0, 0).real();
      CHECK(maxabs(p.block(x0, x1).mat() - w * ChoiMatrix::identity(2).mat()) < 1e-12);
    }
  CHECK(is_simple_pid(p).verdict == Verdict::Simple);

  // maximally entangled source with X/Z gives the assemblage M^T / 2
  Pmd xz(2, {x_basis(), z_basis()});
  Pid a = steer(phi_plus_state(), 2, xz);
  CHECK(a.din() == 1);
  for (int x0 = 0; x0 < 2; ++x0)
    for (int x1 = 0; x1 < 2; ++x1)
      CHECK(maxabs(a.block(x0, x1).mat() - xz.effects[x0][x1].transpose() / 2.0) < 1e-14);
  CHECK(validate_pid(a).valid);

  // marginal equals Tr_E of the broadcast channel
  ChoiMatrix e = random_channel(2, 6, 2, rng);
  Pmd me = random_pmd(3, 2, 2, 3, rng);
  Pid q = steer(e, 2, me);
  CHECK(validate_pid(q).nonsignaling_defect <= 1e-9);
  CMatrix tr_e = partial_trace(e.mat(), {2, 2, 3}, {0, 1});
  CHECK(maxabs(q.channel(0).mat() - tr_e) < 1e-12);
  CHECK_THROWS_AS(steer(e, 2, xz), DimensionError);
}

TEST_CASE("steering with a compatible measurement gives a simple device") {
  Rng rng(32);
  for (int t = 0; t < 5; ++t) {
    ChoiMatrix e = random_channel(2, 4, 2, rng);
    // compatible PMD: post-processing of one parent POVM
    Povm parent = random_povm(2, 3, 2, rng);
    ClassicalChannel post = random_stochastic(2, 2 * 3, rng);
    std::vector<std::vector<CMatrix>> eff(2, std::vector<CMatrix>(2, CMatrix::Zero(2, 2)));
    for (int x0 = 0; x0 < 2; ++x0)
      for (int x1 = 0; x1 < 2; ++x1)
        for (int g = 0; g < 3; ++g) eff[x0][x1] += post(x1, x0 * 3 + g) * parent.effects[g];
    Pid p = steer(e, 2, Pmd(2, eff));
    CHECK(is_simple_pid(p).verdict == Verdict::Simple);
  }
}

TEST_CASE("random samplers") {
  int valid = 0;
  for (std::uint64_t s = 0; s < 250; ++s) {
    valid += validate_pid(random_pid(2, 2, 2, 2, s)).valid;
    valid += validate_pid(random_simple_pid(2, 2, 2, 3, 1000 + s).pid).valid;
  }
  CHECK(valid == 500);

  Pid a = random_pid(2, 3, 2, 2, 77), b = random_pid(2, 3, 2, 2, 77);
  CHECK(pid_distance(a, b) == 0);
  CHECK(pid_distance(a, random_pid(2, 3, 2, 2, 78)) > 0);

  PidSampling one;
  one.env_dim = 1;
  CHECK(is_simple_pid(random_pid(2, 2, 2, 2, 5, one)).verdict == Verdict::Simple);

  SimpleSample ss = random_simple_pid(2, 2, 2, 2, 9);
  CHECK(is_simple_pid(ss.pid).verdict == Verdict::Simple);
  CHECK(pid_distance(assemble_simple(ss.decomposition, 2), ss.pid) < 1e-14);

  Rng rng(3);
  Pid single = pid_from_instrument(random_instrument(2, 2, 3, 2, rng), 1);
  CHECK(is_simple_pid(single).verdict == Verdict::Simple);
}

TEST_CASE("deterministic post-processing relabels the mother") {
  Rng rng(33);
  Instrument mother = random_instrument(2, 2, 2, 2, rng);
  SimpleDecomposition dec{mother, ClassicalChannel::deterministic(2, {1, 0, 0, 1})};
  Pid p = assemble_simple(dec, 2);
  CHECK(maxabs(p.block(0, 1).mat() - mother.branches[0].mat()) < 1e-14);
  CHECK(maxabs(p.block(0, 0).mat() - mother.branches[1].mat()) < 1e-14);
  CHECK(maxabs(p.block(1, 0).mat() - mother.branches[0].mat()) < 1e-14);
  CHECK(maxabs(p.block(1, 1).mat() - mother.branches[1].mat()) < 1e-14);
}

TEST_CASE("classical channels and strategies") {
  ClassicalChannel c = ClassicalChannel::deterministic(3, {2, 0});
  CHECK(c.stochasticity_defect() == 0);
  CHECK(c(2, 0) == 1.0);
  CHECK_THROWS_AS(ClassicalChannel::deterministic(2, {2}), DimensionError);

  CHECK(num_strategies(2, 3) == 9);
  CHECK(strategy(0, 2, 3) == std::vector<int>{0, 0});
  CHECK(strategy(1, 2, 3) == std::vector<int>{0, 1});
  CHECK(strategy(3, 2, 3) == std::vector<int>{1, 0});
  CHECK_THROWS(num_strategies(13, 2));
}

TEST_CASE("tensor and mixtures of devices") {
  Pid a = random_pid(2, 2, 2, 2, 1), b = random_pid(1, 2, 2, 3, 2);
  Pid t = tensor_pid(a, b);
  CHECK(t.n_programs() == 4);
  CHECK(t.n_outcomes() == 6);
  CHECK(validate_pid(t).valid);
  Pid m = scale_mix({{0.25, &a}, {0.75, &a}});
  CHECK(pid_distance(m, a) < 1e-14);
}

TEST_CASE("random CPTP objects") {
  Rng rng(34);
  for (int t = 0; t < 20; ++t) {
    ChoiMatrix c = random_channel(2, 3, 1 + t % 3, rng);
    CHECK(c.is_cp());
    CHECK(c.is_tp());
    CHECK(random_instrument(3, 2, 3, 2, rng).defect() < 1e-12);
    CHECK(random_pmd(3, 2, 3, 2, rng).defect() < 1e-12);
    CHECK(random_stochastic(3, 4, rng).stochasticity_defect() < 1e-12);
    CMatrix u = random_unitary(3, rng);
    CHECK(maxabs(u.adjoint() * u - CMatrix::Identity(3, 3)) < 1e-12);
  }
}
