#include "pidkit/seesaw.hpp"

#include <algorithm>
#include <cmath>

namespace pidkit {

using sdp::HermitianProgram;
using sdp::SdpStatus;

namespace {

struct Chains {
  std::vector<std::vector<ChoiMatrix>> g;  // F then Lambda_{x1|x0} (x) id_D
};

Chains chains(const FreeSimulation& f, const Pid& p) {
  Chains c;
  ChoiMatrix id_d = ChoiMatrix::identity(f.d_side);
  c.g.resize(f.n_x0);
  for (int x0 = 0; x0 < f.n_x0; ++x0)
    for (int x1 = 0; x1 < f.n_x1; ++x1) c.g[x0].push_back(link_product(f.pre, tensor_choi(p.block(x0, x1), id_d)));
  return c;
}

// t[x0][x1][k](m, n) = Re Tr[M_{m,n} J_{K_k o G_{x0 x1}}] / d
using Scores = std::vector<std::vector<std::vector<RMatrix>>>;

Scores scores(const FreeSimulation& f, const Chains& ch, const GameSpec& g) {
  Scores t(f.n_x0, std::vector<std::vector<RMatrix>>(f.n_x1));
  for (int x0 = 0; x0 < f.n_x0; ++x0)
    for (int x1 = 0; x1 < f.n_x1; ++x1)
      for (const auto& k : f.post.branches) {
        CMatrix c = link_product(ch.g[x0][x1], k).mat();
        RMatrix s(g.n_m, g.n_n);
        for (int m = 0; m < g.n_m; ++m)
          for (int n = 0; n < g.n_n; ++n)
            s(m, n) = (g.effects[m][n].transpose().cwiseProduct(c)).sum().real() / g.d_ref;
        t[x0][x1].push_back(s);
      }
  return t;
}

double value_from(const FreeSimulation& f, const Scores& t) {
  const int nk = f.n_k(), nl = f.n_l();
  double v = 0;
  for (int x0 = 0; x0 < f.n_x0; ++x0)
    for (int x1 = 0; x1 < f.n_x1; ++x1)
      for (int k = 0; k < nk; ++k)
        for (int l = 0; l < nl; ++l)
          for (int m = 0; m < f.n_y0; ++m) {
            double pp = f.p(x0 * nl + l, m * nk + k);
            if (pp == 0) continue;
            for (int n = 0; n < f.n_y1; ++n) v += pp * f.q(n, x1 * nl + l) * t[x0][x1][k](m, n);
          }
  return v;
}

// Sum over (m, n) of the classical weight times M_{m,n}, for fixed (x0, x1, k).
CMatrix weighted_effect(const FreeSimulation& f, const GameSpec& g, int x0, int x1, int k) {
  const int nk = f.n_k(), nl = f.n_l();
  const int n = g.d_ref * g.dout;
  CMatrix s = CMatrix::Zero(n, n);
  for (int m = 0; m < g.n_m; ++m)
    for (int y1 = 0; y1 < g.n_n; ++y1) {
      double c = 0;
      for (int l = 0; l < nl; ++l) c += f.q(y1, x1 * nl + l) * f.p(x0 * nl + l, m * nk + k);
      if (c != 0) s += c * g.effects[m][y1];
    }
  return s / g.d_ref;
}

void update_p(FreeSimulation& f, const Scores& t) {
  const int nk = f.n_k(), nl = f.n_l();
  RMatrix p = RMatrix::Zero(f.n_x0 * nl, f.n_y0 * nk);
  for (int m = 0; m < f.n_y0; ++m)
    for (int k = 0; k < nk; ++k) {
      int best = 0;
      double bv = -1e300;
      for (int x0 = 0; x0 < f.n_x0; ++x0)
        for (int l = 0; l < nl; ++l) {
          double v = 0;
          for (int x1 = 0; x1 < f.n_x1; ++x1)
            for (int n = 0; n < f.n_y1; ++n) v += f.q(n, x1 * nl + l) * t[x0][x1][k](m, n);
          if (v > bv + 1e-15) {
            bv = v;
            best = x0 * nl + l;
          }
        }
      p(best, m * nk + k) = 1.0;
    }
  f.p = ClassicalChannel(f.n_x0 * nl, f.n_y0 * nk, p);
}

void update_q(FreeSimulation& f, const Scores& t) {
  const int nk = f.n_k(), nl = f.n_l();
  RMatrix q = RMatrix::Zero(f.n_y1, f.n_x1 * nl);
  for (int x1 = 0; x1 < f.n_x1; ++x1)
    for (int l = 0; l < nl; ++l) {
      RVector v = RVector::Zero(f.n_y1);
      for (int x0 = 0; x0 < f.n_x0; ++x0)
        for (int k = 0; k < nk; ++k)
          for (int m = 0; m < f.n_y0; ++m) {
            double pp = f.p(x0 * nl + l, m * nk + k);
            if (pp != 0) v += pp * t[x0][x1][k].row(m).transpose();
          }
      int best = 0;
      for (int n = 1; n < f.n_y1; ++n)
        if (v(n) > v(best) + 1e-15) best = n;
      q(best, x1 * nl + l) = 1.0;
    }
  f.q = ClassicalChannel(f.n_y1, f.n_x1 * nl, q);
}

// Maximises sum_k Re Tr[phi_k J_k] over instruments (one branch: channels) with
// the given input/output dimensions.
std::vector<CMatrix> best_instrument(const std::vector<CMatrix>& phi, int din, int dout,
                                     const sdp::SolverOptions& o, bool& ok) {
  HermitianProgram hp;
  std::vector<int> b;
  std::vector<std::pair<int, HermitianProgram::Adjoint>> terms;
  for (const auto& f : phi) {
    int id = hp.add_complex_block("K", din * dout);
    hp.add_objective(id, -hermitize(f));
    b.push_back(id);
    terms.push_back({id, [dout](const CMatrix& e) { return kron(e, CMatrix::Identity(dout, dout)); }});
  }
  hp.add_matrix_equality(din, terms, CMatrix::Identity(din, din));
  auto res = hp.solve(o);
  ok = res.status == SdpStatus::Optimal;
  std::vector<CMatrix> out;
  for (int id : b) out.push_back(res.x[id]);
  return out;
}

// Gradient of Re Tr[mt J_{K o G}] with respect to J_K; G: X -> E, K: E -> Y.
CMatrix post_gradient(const ChoiMatrix& gch, const CMatrix& mt, int dy) {
  const int dx = gch.din(), e = gch.dout();
  const CMatrix& jg = gch.mat();
  CMatrix phi = CMatrix::Zero(e * dy, e * dy);
  for (int a = 0; a < e; ++a)
    for (int b = 0; b < e; ++b) {
      CMatrix blk = CMatrix::Zero(dy, dy);
      for (int i = 0; i < dx; ++i)
        for (int j = 0; j < dx; ++j) {
          cplx gv = jg(i * e + a, j * e + b);
          if (gv != 0.0) blk += gv * mt.block(j * dy, i * dy, dy, dy);
        }
      phi.block(b * dy, a * dy, dy, dy) = blk;
    }
  return phi;
}

// Solver output can sit 1e-10 outside the cone; clip it.
ChoiMatrix clean(const CMatrix& m, int din, int dout) {
  auto e = eig_hermitian(hermitize(m));
  RVector v = e.values.cwiseMax(0.0);
  return ChoiMatrix(din, dout, e.vectors * v.asDiagonal() * e.vectors.adjoint());
}

// Renormalises so that the branches sum to a trace-preserving map.
std::vector<ChoiMatrix> renormalise(const std::vector<ChoiMatrix>& ks) {
  const int din = ks[0].din(), dout = ks[0].dout();
  CMatrix tot = CMatrix::Zero(din, din);
  for (const auto& k : ks) tot += k.marginal();
  auto ps = psd_pinv_sqrt(tot, 1e-12);
  if (ps.rank < din) return ks;
  CMatrix s = kron(ps.pinv_sqrt, CMatrix::Identity(dout, dout));
  std::vector<ChoiMatrix> out;
  for (const auto& k : ks) out.emplace_back(din, dout, s * k.mat() * s.adjoint());
  return out;
}

FreeSimulation embedding_start(const Pid& p, const GameSpec& g) {
  std::vector<int> map(p.n_outcomes());
  for (int x1 = 0; x1 < p.n_outcomes(); ++x1) map[x1] = x1;
  std::vector<ChoiMatrix> k{ChoiMatrix::identity(p.dout())};
  return make_simulation(ChoiMatrix::identity(p.din()), Instrument(k), ClassicalChannel::identity(p.n_programs()),
                         ClassicalChannel::deterministic(g.n_n, map), p.din(), p.dout(), p.n_programs(),
                         p.n_outcomes());
}

FreeSimulation fit(FreeSimulation f, const SeesawOptions& o, int d_side) {
  f = pad_side(f, std::max(f.d_side, d_side));
  f = pad_k(f, std::max(f.n_k(), o.n_k));
  f = pad_l(f, std::max(f.n_l(), o.n_l));
  return f;
}

}  // namespace

SeesawResult seesaw_refine(const Pid& p, const GameSpec& g, FreeSimulation f, const SeesawOptions& o) {
  g.check();
  if (f.n_y0 != g.n_m || f.n_y1 != g.n_n || f.d_b0 != g.d_ref || f.d_b1 != g.dout)
    throw DimensionError("see-saw start does not produce a strategy for this game");
  SeesawResult r;
  Chains ch = chains(f, p);
  Scores t = scores(f, ch, g);
  double cur = value_from(f, t);
  r.trace.push_back(cur);
  const int da0 = f.d_a0, da1 = f.d_a1, ds = f.d_side;
  for (int it = 0; it < o.iters; ++it) {
    const double start = cur;
    // classical tables: exact coordinate maximisation
    update_p(f, t);
    update_q(f, t);
    cur = value_from(f, t);

    // post-processing instrument
    {
      std::vector<CMatrix> phi;
      for (int k = 0; k < f.n_k(); ++k) {
        CMatrix s = CMatrix::Zero(da1 * ds * f.d_b1, da1 * ds * f.d_b1);
        for (int x0 = 0; x0 < f.n_x0; ++x0)
          for (int x1 = 0; x1 < f.n_x1; ++x1)
            s += post_gradient(ch.g[x0][x1], weighted_effect(f, g, x0, x1, k), f.d_b1);
        phi.push_back(s);
      }
      bool ok = false;
      auto ks = best_instrument(phi, da1 * ds, f.d_b1, o.solver, ok);
      if (ok) {
        std::vector<ChoiMatrix> kc;
        for (const auto& k : ks) kc.push_back(clean(k, da1 * ds, f.d_b1));
        FreeSimulation trial = f;
        trial.post = Instrument(renormalise(kc));
        if (trial.post.defect() <= 1e-8) {
          Scores tt = scores(trial, ch, g);
          double v = value_from(trial, tt);
          if (v > cur) {
            f = std::move(trial);
            t = std::move(tt);
            cur = v;
          }
        }
      }
    }

    // pre-processing channel
    {
      ChoiMatrix id_d = ChoiMatrix::identity(ds);
      CMatrix phi = CMatrix::Zero(f.d_b0 * da0 * ds, f.d_b0 * da0 * ds);
      for (int x0 = 0; x0 < f.n_x0; ++x0)
        for (int x1 = 0; x1 < f.n_x1; ++x1) {
          ChoiMatrix lifted = tensor_choi(p.block(x0, x1), id_d);
          for (int k = 0; k < f.n_k(); ++k) {
            ChoiMatrix e = link_product(lifted, f.post.branches[k]);
            phi += adjoint_on_second(weighted_effect(f, g, x0, x1, k), f.d_b0, e);
          }
        }
      bool ok = false;
      auto fs = best_instrument({phi}, f.d_b0, da0 * ds, o.solver, ok);
      if (ok) {
        FreeSimulation trial = f;
        std::vector<ChoiMatrix> one{clean(fs[0], f.d_b0, da0 * ds)};
        trial.pre = renormalise(one)[0];
        if ((trial.pre.marginal() - CMatrix::Identity(f.d_b0, f.d_b0)).cwiseAbs().maxCoeff() <= 1e-8) {
          Chains cc = chains(trial, p);
          Scores tt = scores(trial, cc, g);
          double v = value_from(trial, tt);
          if (v > cur) {
            f = std::move(trial);
            ch = std::move(cc);
            t = std::move(tt);
            cur = v;
          }
        }
      }
    }
    r.trace.push_back(cur);
    if (cur - start < o.tol) break;
  }
  f.check();
  r.strategy = std::move(f);
  r.value = game_value(g, apply_free_simulation(r.strategy, p));
  return r;
}

SeesawResult seesaw_pguess(const Pid& p, const GameSpec& g, const SeesawOptions& o) {
  g.check();
  const int d_side = o.d_side > 0 ? o.d_side : p.din() * p.dout();
  SimulationShape shape{g.n_m, g.n_n, g.d_ref, g.dout, d_side, o.n_k, o.n_l};
  std::vector<FreeSimulation> starts;
  if (p.n_programs() == g.n_m && p.din() == g.d_ref && p.dout() == g.dout && g.n_n >= p.n_outcomes())
    starts.push_back(fit(embedding_start(p, g), o, d_side));
  if (static_cast<int>(starts.size()) < o.restarts) {
    auto simple = pguess_simple_full(g);
    starts.push_back(fit(reachability_simulation(p.din(), p.dout(), p.n_programs(), p.n_outcomes(), simple.strategy),
                         o, d_side));
  }
  for (int i = 0; static_cast<int>(starts.size()) < o.restarts; ++i)
    starts.push_back(random_free_simulation(p.din(), p.dout(), p.n_programs(), p.n_outcomes(), shape,
                                            o.seed * 1000003ULL + static_cast<std::uint64_t>(i)));
  SeesawResult best;
  best.value = -1;
  for (size_t i = 0; i < starts.size(); ++i) {
    SeesawResult r = seesaw_refine(p, g, starts[i], o);
    if (r.value > best.value) {
      best = std::move(r);
      best.restart = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace pidkit
