#include "pidkit/games.hpp"

#include <algorithm>
#include <cmath>

#include "pidkit/seesaw.hpp"
#include "pidkit/simulation.hpp"

namespace pidkit {

using sdp::HermitianProgram;
using sdp::SdpStatus;

namespace {

double re_trace_product(const CMatrix& a, const CMatrix& b) {
  // Re Tr[a b] without forming the product
  return (a.transpose().cwiseProduct(b)).sum().real();
}

bool same_matrix(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows()) return false;
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() <= 1e-14 * scale;
}

// max sum_{m,n} Re Tr[W_{m,n} Omega_{n|m}] over simple Omega with input din and output dout.
SimpleOptimum simple_max(const std::vector<std::vector<CMatrix>>& w, int din, int dout,
                         const CompatOptions& opts) {
  const int nm = static_cast<int>(w.size());
  const int nn = nm > 0 ? static_cast<int>(w[0].size()) : 0;
  if (nm == 0 || nn == 0) throw DimensionError("game has no programs or outcomes");
  // Representatives of identical-effect classes per m.
  std::vector<std::vector<int>> reps(nm);
  for (int m = 0; m < nm; ++m)
    for (int n = 0; n < nn; ++n) {
      bool seen = false;
      for (int r : reps[m])
        if (same_matrix(w[m][r], w[m][n])) {
          seen = true;
          break;
        }
      if (!seen) reps[m].push_back(n);
    }
  long count = 1;
  for (const auto& r : reps) {
    count *= static_cast<long>(r.size());
    if (count > kMaxStrategies) throw ValueError("too many distinct simple strategies for this game");
  }
  std::vector<std::vector<int>> strat;
  for (long s = 0; s < count; ++s) {
    std::vector<int> lam(nm);
    long rest = s;
    for (int m = nm - 1; m >= 0; --m) {
      const long k = static_cast<long>(reps[m].size());
      lam[m] = reps[m][rest % k];
      rest /= k;
    }
    strat.push_back(lam);
  }
  const int n = din * dout;
  HermitianProgram hp;
  std::vector<int> blocks;
  std::vector<std::pair<int, HermitianProgram::Adjoint>> terms;
  for (const auto& lam : strat) {
    CMatrix f = CMatrix::Zero(n, n);
    for (int m = 0; m < nm; ++m) f += w[m][lam[m]];
    int b = hp.add_complex_block("G", n);
    hp.add_objective(b, -hermitize(f));
    blocks.push_back(b);
    terms.push_back({b, [dout](const CMatrix& e) { return kron(e, CMatrix::Identity(dout, dout)); }});
  }
  hp.add_matrix_equality(din, terms, CMatrix::Identity(din, din));
  auto res = hp.solve(opts.solver);
  if (res.status != SdpStatus::Optimal)
    throw NumericalError(std::string("simple guessing SDP: solver returned ") + sdp::to_string(res.status));
  SimpleOptimum out;
  out.value = -res.primal_value;
  out.n_blocks = static_cast<int>(strat.size());
  out.strategy.n_programs = nm;
  out.strategy.n_outcomes = nn;
  out.strategy.strategies = strat;
  std::vector<ChoiMatrix> g;
  for (int b : blocks) g.emplace_back(din, dout, res.x[b]);
  out.strategy.mother = Instrument(std::move(g));
  out.strategy.mother_defect = out.strategy.mother.defect();
  return out;
}

CMatrix psd_part(const CMatrix& m) {
  auto e = eig_hermitian(m);
  RVector v = e.values.cwiseMax(0.0);
  return e.vectors * v.asDiagonal() * e.vectors.adjoint();
}

}  // namespace

double GameSpec::defect() const {
  const int n = d_ref * dout;
  CMatrix s = CMatrix::Zero(n, n);
  double d = 0;
  for (const auto& row : effects)
    for (const auto& e : row) {
      s += e;
      d = std::max(d, -std::min(0.0, min_eigenvalue(e)));
    }
  return std::max(d, (s - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff());
}

void GameSpec::check() const {
  if (n_m <= 0 || n_n <= 0 || d_ref <= 0 || dout <= 0 || static_cast<int>(effects.size()) != n_m)
    throw DimensionError("game: bad shape");
  for (const auto& row : effects) {
    if (static_cast<int>(row.size()) != n_n) throw DimensionError("game: ragged effect table");
    for (const auto& e : row)
      if (e.rows() != d_ref * dout || e.cols() != d_ref * dout) throw DimensionError("game: effect size");
  }
  if (defect() > 1e-9) throw ValueError("game effects do not form a POVM");
}

double game_value(const GameSpec& g, const Pid& s) {
  if (s.din() != g.d_ref || s.dout() != g.dout || s.n_programs() != g.n_m || s.n_outcomes() != g.n_n)
    throw DimensionError("strategy shape does not match the game");
  double v = 0;
  for (int m = 0; m < g.n_m; ++m)
    for (int n = 0; n < g.n_n; ++n) v += re_trace_product(g.effects[m][n], s.block(m, n).mat());
  return v / g.d_ref;
}

SimpleOptimum pguess_simple_full(const GameSpec& g, const CompatOptions& opts) {
  g.check();
  auto out = simple_max(g.effects, g.d_ref, g.dout, opts);
  out.value /= g.d_ref;
  return out;
}

double pguess_simple(const GameSpec& g, const CompatOptions& opts) { return pguess_simple_full(g, opts).value; }

double witness_norm(const DualWitness& w) {
  if (w.alpha.empty() || w.alpha[0].empty()) throw ValueError("empty dual witness");
  const int n = static_cast<int>(w.alpha[0][0].rows());
  CMatrix s = CMatrix::Zero(n, n);
  for (const auto& row : w.alpha)
    for (const auto& a : row) s += psd_part(a);
  return std::max(0.0, max_eigenvalue(s));
}

GameSpec witness_game(const DualWitness& w, int din, int dout, int n_dummy) {
  if (n_dummy <= 0) throw ValueError("witness game needs at least one dummy outcome");
  const int nx0 = static_cast<int>(w.alpha.size());
  if (nx0 == 0) throw ValueError("empty dual witness");
  const int nx1 = static_cast<int>(w.alpha[0].size());
  const int n = din * dout;
  for (const auto& row : w.alpha)
    for (const auto& a : row)
      if (a.rows() != n) throw DimensionError("witness operator size mismatch");
  if (dual_feasibility_defect(w, din, dout) > 1e-6) throw ValueError("dual witness is not feasible");
  const double c = witness_norm(w);
  GameSpec g{nx0, nx1 + n_dummy, din, dout, {}};
  CMatrix used = CMatrix::Zero(n, n);
  g.effects.assign(nx0, std::vector<CMatrix>(g.n_n, CMatrix::Zero(n, n)));
  if (c > 1e-12)
    for (int m = 0; m < nx0; ++m)
      for (int x1 = 0; x1 < nx1; ++x1) {
        g.effects[m][x1] = psd_part(w.alpha[m][x1]) / c;
        used += g.effects[m][x1];
      }
  CMatrix rest = psd_part(hermitize(CMatrix::Identity(n, n) - used)) / (static_cast<double>(nx0) * n_dummy);
  for (int m = 0; m < nx0; ++m)
    for (int k = 0; k < n_dummy; ++k) g.effects[m][nx1 + k] = rest;
  return g;
}

GameSpec witness_game(const RoiCertificate& cert, int din, int dout, int n_dummy) {
  return witness_game(cert.witness, din, dout, n_dummy);
}

Pid extend_outcomes(const Pid& p, int n_outcomes) {
  if (n_outcomes < p.n_outcomes()) throw DimensionError("extend_outcomes: cannot drop outcomes");
  auto blocks = p.blocks();
  for (auto& row : blocks)
    while (static_cast<int>(row.size()) < n_outcomes) row.push_back(ChoiMatrix::zero(p.din(), p.dout()));
  return Pid(p.din(), p.dout(), std::move(blocks));
}

long sufficient_dummy_size(double c, int d, int n_programs, int n_outcomes, double eps) {
  if (eps <= 0) throw ValueError("eps must be positive");
  return static_cast<long>(std::floor(2.0 * c * d * n_programs * n_outcomes / eps)) + 1;
}

long dummy_for_ratio(double c, int n_programs, double rel_gap) {
  if (rel_gap <= 0 || rel_gap >= 1) throw ValueError("rel_gap must lie in (0, 1)");
  return std::max(1L, static_cast<long>(std::ceil(c * (1 - rel_gap) / (n_programs * rel_gap))));
}

BoundReport verify_robustness_bound(const Pid& p, const std::vector<int>& schedule, const BoundOptions& opts) {
  auto cert = roi(p, opts.compat);
  BoundReport rep;
  rep.roi = cert.r;
  rep.dual = cert.witness.value;
  rep.c = witness_norm(cert.witness);
  double prev = 0;
  for (int nd : schedule) {
    GameSpec g = witness_game(cert.witness, p.din(), p.dout(), nd);
    BoundPoint pt;
    pt.n_dummy = nd;
    pt.identity_value = game_value(g, extend_outcomes(p, g.n_n));
    pt.pguess_simple = pguess_simple(g, opts.compat);
    double best = std::max(pt.identity_value, pt.pguess_simple);
    if (opts.seesaw) {
      SeesawOptions so;
      so.restarts = opts.seesaw_restarts;
      so.iters = opts.seesaw_iters;
      so.seed = opts.seed;
      so.solver = opts.compat.solver;
      pt.seesaw_value = seesaw_pguess(p, g, so).value;
      best = std::max(best, pt.seesaw_value);
    }
    pt.ratio = best / pt.pguess_simple;
    pt.lower_bound = (1 + rep.roi) / (1 + rep.c / (static_cast<double>(p.n_programs()) * nd));
    if (pt.ratio > 1 + rep.roi + 1e-5) ++rep.cap_violations;
    if (!rep.points.empty() && pt.ratio < prev - 1e-7) rep.monotone = false;
    prev = pt.ratio;
    rep.points.push_back(pt);
  }
  return rep;
}

double PiGameSpec::defect() const {
  double d = povm_l.defect();
  double total = 0;
  for (const auto& a : ensemble)
    for (const auto& b : a)
      for (const auto& s : b) {
        d = std::max(d, -std::min(0.0, min_eigenvalue(s)));
        total += s.trace().real();
      }
  return std::max(d, std::abs(total - 1.0));
}

void PiGameSpec::check() const {
  if (n_m <= 0 || n_n <= 0 || din <= 0 || dout <= 0 || static_cast<int>(ensemble.size()) != n_m)
    throw DimensionError("post-information game: bad shape");
  if (povm_l.dim != dout || povm_l.effects.empty()) throw DimensionError("post-information game: POVM dimension");
  for (const auto& a : ensemble) {
    if (static_cast<int>(a.size()) != n_n) throw DimensionError("post-information game: ragged ensemble");
    for (const auto& b : a) {
      if (static_cast<int>(b.size()) != n_l()) throw DimensionError("post-information game: ragged ensemble");
      for (const auto& s : b)
        if (s.rows() != din || s.cols() != din) throw DimensionError("post-information game: state size");
    }
  }
  if (defect() > 1e-9) throw ValueError("post-information game: not a normalised ensemble with a POVM");
}

namespace {

std::vector<std::vector<CMatrix>> pi_scores(const PiGameSpec& g) {
  std::vector<std::vector<CMatrix>> w(g.n_m, std::vector<CMatrix>(g.n_n));
  for (int m = 0; m < g.n_m; ++m)
    for (int n = 0; n < g.n_n; ++n) {
      CMatrix s = CMatrix::Zero(g.din * g.dout, g.din * g.dout);
      for (int l = 0; l < g.n_l(); ++l) s += kron(g.ensemble[m][n][l].transpose(), g.povm_l.effects[l]);
      w[m][n] = s;
    }
  return w;
}

}  // namespace

double pi_game_value(const PiGameSpec& g, const Pid& s) {
  if (s.din() != g.din || s.dout() != g.dout || s.n_programs() != g.n_m || s.n_outcomes() != g.n_n)
    throw DimensionError("strategy shape does not match the post-information game");
  auto w = pi_scores(g);
  double v = 0;
  for (int m = 0; m < g.n_m; ++m)
    for (int n = 0; n < g.n_n; ++n) v += re_trace_product(w[m][n], s.block(m, n).mat());
  return v;
}

SimpleOptimum pi_pguess_simple_full(const PiGameSpec& g, const CompatOptions& opts) {
  g.check();
  return simple_max(pi_scores(g), g.din, g.dout, opts);
}

double pi_pguess_simple(const PiGameSpec& g, const CompatOptions& opts) {
  return pi_pguess_simple_full(g, opts).value;
}

DualFrameBuilder::DualFrameBuilder(const Povm& l) : l_(l) {
  const int k = static_cast<int>(l.effects.size());
  const int d = l.dim;
  if (k == 0 || d <= 0) throw ValueError("dual frame: empty POVM");
  RMatrix gram(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) gram(a, b) = re_trace_product(l.effects[a], l.effects[b]);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
  const double top = es.eigenvalues().maxCoeff();
  const double cut = 1e-10 * std::max(top, 1e-300);
  int rank = 0;
  RVector inv = RVector::Zero(k);
  for (int i = 0; i < k; ++i)
    if (es.eigenvalues()(i) > cut) {
      inv(i) = 1.0 / es.eigenvalues()(i);
      ++rank;
    }
  if (rank < d * d)
    throw ValueError("POVM is not informationally complete: Gram rank " + std::to_string(rank) + " < " +
                     std::to_string(d * d));
  gram_pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

DualFrame DualFrameBuilder::build(const std::vector<std::vector<CMatrix>>& targets, int d0) const {
  const int k = static_cast<int>(l_.effects.size());
  const int d1 = l_.dim;
  DualFrame f;
  f.d0 = d0;
  f.d1 = d1;
  f.mu.resize(targets.size());
  for (size_t y0 = 0; y0 < targets.size(); ++y0)
    for (const auto& j : targets[y0]) {
      if (j.rows() != d0 * d1 || j.cols() != d0 * d1) throw DimensionError("dual frame: target size");
      std::vector<CMatrix> mu(k, CMatrix::Zero(d0, d0));
      for (int i = 0; i < d0; ++i)
        for (int jj = 0; jj < d0; ++jj) {
          CMatrix blk = j.block(i * d1, jj * d1, d1, d1);
          CVector t(k);
          for (int b = 0; b < k; ++b) t(b) = (l_.effects[b].transpose().cwiseProduct(blk)).sum();
          CVector coef = gram_pinv_.cast<cplx>() * t;
          for (int a = 0; a < k; ++a) mu[a](i, jj) = coef(a);
        }
      CMatrix rec = CMatrix::Zero(d0 * d1, d0 * d1);
      for (int a = 0; a < k; ++a) {
        mu[a] = (mu[a] + mu[a].adjoint()) / 2.0;
        rec += kron(mu[a], l_.effects[a]);
      }
      f.residual = std::max(f.residual, (rec - j).cwiseAbs().maxCoeff());
      f.mu[y0].push_back(std::move(mu));
    }
  if (f.residual > 1e-8) throw NumericalError("dual frame reconstruction residual above 1e-8");
  return f;
}

DualFrame ic_dual_frame(const Povm& l, const std::vector<std::vector<CMatrix>>& targets, int d0) {
  return DualFrameBuilder(l).build(targets, d0);
}

PiGameSpec witness_ensemble(const DualFrame& f, const Povm& l) {
  const int ny0 = static_cast<int>(f.mu.size());
  if (ny0 == 0 || f.mu[0].empty()) throw ValueError("witness ensemble: empty frame");
  const int ny1 = static_cast<int>(f.mu[0].size());
  const int nl = static_cast<int>(l.effects.size());
  double c = 0, cp = 0;
  for (const auto& a : f.mu)
    for (const auto& b : a)
      for (const auto& m : b) {
        c = std::max(c, operator_norm(m));
        cp += m.trace().real();
      }
  PiGameSpec g;
  g.n_m = ny0;
  g.n_n = ny1;
  g.din = f.d0;
  g.dout = f.d1;
  g.povm_l = l;
  const double total = cp + c * f.d0 * ny0 * ny1 * nl;
  const CMatrix id = CMatrix::Identity(f.d0, f.d0);
  g.ensemble.assign(ny0, std::vector<std::vector<CMatrix>>(ny1));
  for (int m = 0; m < ny0; ++m)
    for (int n = 0; n < ny1; ++n)
      for (int k = 0; k < nl; ++k) {
        if (total <= 1e-300) {
          // mu = 0: nothing to witness, every index triple equally likely
          g.ensemble[m][n].push_back(id / (static_cast<double>(f.d0) * ny0 * ny1 * nl));
        } else {
          g.ensemble[m][n].push_back(hermitize((f.mu[m][n][k].transpose() + c * id) / total));
        }
      }
  return g;
}

Povm tetrahedron_povm() {
  const double s = 1.0 / std::sqrt(3.0);
  const double dirs[4][3] = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  Povm p;
  p.dim = 2;
  for (const auto& v : dirs) {
    CMatrix e(2, 2);
    e << cplx(1 + v[2], 0), cplx(v[0], -v[1]), cplx(v[0], v[1]), cplx(1 - v[2], 0);
    p.effects.push_back(e / 4.0);
  }
  return p;
}

}  // namespace pidkit
