#include "pidkit/random.hpp"

#include <cmath>
#include <numbers>

namespace pidkit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream * kGolden + 0x632BE59BD9B4E019ULL))) {}

std::uint64_t Rng::next_u64() { return mix64(key_ + (++counter_) * kGolden); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

cplx Rng::complex_normal() {
  double re = normal();
  double im = normal();
  return cplx(re, im) / std::sqrt(2.0);
}

Rng Rng::split(std::uint64_t stream) const { return Rng(key_, stream + 1); }

CMatrix random_gaussian(int rows, int cols, Rng& rng) {
  CMatrix g(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) g(r, c) = rng.complex_normal();
  return g;
}

CMatrix random_isometry(int rows, int cols, Rng& rng) {
  if (rows < cols) throw DimensionError("isometry needs rows >= cols");
  CMatrix g = random_gaussian(rows, cols, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(rows, cols);
  CMatrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (int k = 0; k < cols; ++k) {
    double a = std::abs(r(k, k));
    if (a > 0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

CMatrix random_unitary(int d, Rng& rng) { return random_isometry(d, d, rng); }

CMatrix random_state(int d, int rank, Rng& rng) {
  CMatrix g = random_gaussian(d, rank, rng);
  CMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

ChoiMatrix random_channel(int din, int dout, int kraus_rank, Rng& rng) {
  if (kraus_rank <= 0) kraus_rank = din * dout;
  CMatrix v = random_isometry(dout * kraus_rank, din, rng);
  std::vector<CMatrix> kraus;
  for (int k = 0; k < kraus_rank; ++k) kraus.push_back(v.block(k * dout, 0, dout, din));
  return choi_from_kraus(kraus);
}

Instrument random_instrument(int din, int dout, int n_branches, int kraus_rank, Rng& rng) {
  if (kraus_rank <= 0) kraus_rank = din;
  CMatrix v = random_isometry(dout * kraus_rank * n_branches, din, rng);
  std::vector<ChoiMatrix> branches;
  for (int g = 0; g < n_branches; ++g) {
    std::vector<CMatrix> kraus;
    for (int k = 0; k < kraus_rank; ++k)
      kraus.push_back(v.block((g * kraus_rank + k) * dout, 0, dout, din));
    branches.push_back(choi_from_kraus(kraus));
  }
  return Instrument(std::move(branches));
}

Povm random_povm(int d, int n, int rank, Rng& rng) {
  if (rank <= 0) rank = d;
  std::vector<CMatrix> w;
  CMatrix s = CMatrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    CMatrix g = random_gaussian(d, rank, rng);
    w.push_back(g * g.adjoint());
    s += w.back();
  }
  CMatrix isq = psd_pinv_sqrt(s, 1e-14).pinv_sqrt;
  Povm p{d, {}};
  for (auto& e : w) p.effects.push_back(hermitize(isq * e * isq));
  return p;
}

Pmd random_pmd(int d, int n_programs, int n_outcomes, int rank, Rng& rng) {
  std::vector<std::vector<CMatrix>> e;
  for (int x0 = 0; x0 < n_programs; ++x0) e.push_back(random_povm(d, n_outcomes, rank, rng).effects);
  return Pmd(d, std::move(e));
}

ClassicalChannel random_stochastic(int n_out, int n_in, Rng& rng) {
  RMatrix t(n_out, n_in);
  for (int c = 0; c < n_in; ++c) {
    for (int r = 0; r < n_out; ++r) t(r, c) = -std::log(1.0 - rng.uniform());
    t.col(c) /= t.col(c).sum();
  }
  return ClassicalChannel(n_out, n_in, t);
}

Pid random_pid(int din, int dout, int n_programs, int n_outcomes, std::uint64_t seed,
               const PidSampling& opts) {
  Rng rng(seed);
  int de = opts.env_dim > 0 ? opts.env_dim : std::max(2, dout);
  int kr = opts.kraus_rank > 0 ? opts.kraus_rank : din;
  int er = opts.effect_rank > 0 ? opts.effect_rank : de;
  Rng rc = rng.split(0), rm = rng.split(1);
  ChoiMatrix e = random_channel(din, dout * de, kr, rc);
  Pmd m = random_pmd(de, n_programs, n_outcomes, er, rm);
  return steer(e, dout, m);
}

Pid assemble_simple(const SimpleDecomposition& dec, int n_programs) {
  const int ng = dec.mother.size();
  const int nx1 = dec.post.n_out();
  if (dec.post.n_in() != n_programs * ng)
    throw DimensionError("post-processing input must be X0 x G");
  std::vector<std::vector<ChoiMatrix>> blocks(
      n_programs,
      std::vector<ChoiMatrix>(nx1, ChoiMatrix::zero(dec.mother.din, dec.mother.dout)));
  for (int x0 = 0; x0 < n_programs; ++x0)
    for (int x1 = 0; x1 < nx1; ++x1)
      for (int g = 0; g < ng; ++g) {
        double w = dec.post(x1, x0 * ng + g);
        if (w != 0.0) blocks[x0][x1] += w * dec.mother.branches[g];
      }
  return Pid(dec.mother.din, dec.mother.dout, std::move(blocks));
}

SimpleSample random_simple_pid(int din, int dout, int n_programs, int n_outcomes,
                               std::uint64_t seed, int n_branches, int kraus_rank) {
  Rng rng(seed);
  Rng ri = rng.split(0), rp = rng.split(1);
  SimpleDecomposition dec{random_instrument(din, dout, n_branches, kraus_rank, ri),
                          random_stochastic(n_outcomes, n_programs * n_branches, rp)};
  Pid p = assemble_simple(dec, n_programs);
  return {std::move(p), std::move(dec)};
}

}  // namespace pidkit
