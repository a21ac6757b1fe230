#include "pidkit/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "pidkit/random.hpp"

namespace pidkit {

namespace {

ChoiMatrix permuted(const ChoiMatrix& j, std::initializer_list<int> dims, std::initializer_list<int> perm,
                    int din, int dout) {
  return ChoiMatrix(din, dout, permute_subsystems(j.mat(), dims, perm));
}

// Kraus-free CP map rho -> <e|rho|e> restricted to the first d states of a larger space.
ChoiMatrix compression(int d_big, int d_small) {
  CMatrix iso = CMatrix::Zero(d_small, d_big);
  for (int i = 0; i < d_small; ++i) iso(i, i) = 1.0;
  std::vector<CMatrix> k{iso};
  return choi_from_kraus(k);
}

ChoiMatrix inclusion(int d_small, int d_big) {
  CMatrix iso = CMatrix::Zero(d_big, d_small);
  for (int i = 0; i < d_small; ++i) iso(i, i) = 1.0;
  std::vector<CMatrix> k{iso};
  return choi_from_kraus(k);
}

}  // namespace

double FreeSimulation::defect() const {
  double d = 0;
  d = std::max(d, -std::min(0.0, min_eigenvalue(pre.mat())));
  d = std::max(d, (pre.marginal() - CMatrix::Identity(d_b0, d_b0)).cwiseAbs().maxCoeff());
  d = std::max(d, post.defect());
  d = std::max(d, p.stochasticity_defect());
  d = std::max(d, q.stochasticity_defect());
  return d;
}

void FreeSimulation::check() const {
  if (pre.din() != d_b0 || pre.dout() != d_a0 * d_side)
    throw DimensionError("simulation: pre-processing shape mismatch");
  if (post.size() == 0 || post.din != d_a1 * d_side || post.dout != d_b1)
    throw DimensionError("simulation: post-processing shape mismatch");
  if (n_x1 <= 0 || q.n_in() % n_x1 != 0) throw DimensionError("simulation: q shape mismatch");
  int nl = n_l();
  if (q.n_out() != n_y1) throw DimensionError("simulation: q output mismatch");
  if (p.n_out() != n_x0 * nl || p.n_in() != n_y0 * n_k())
    throw DimensionError("simulation: p shape mismatch");
  if (defect() > 1e-8) throw ValueError("simulation: not a free simulation (defect above 1e-8)");
}

FreeSimulation make_simulation(ChoiMatrix pre, Instrument post, ClassicalChannel p, ClassicalChannel q,
                               int d_a0, int d_a1, int n_x0, int n_x1) {
  FreeSimulation f;
  f.d_a0 = d_a0;
  f.d_a1 = d_a1;
  f.n_x0 = n_x0;
  f.n_x1 = n_x1;
  if (d_a0 <= 0 || pre.dout() % d_a0 != 0) throw DimensionError("simulation: side dimension");
  f.d_side = pre.dout() / d_a0;
  f.d_b0 = pre.din();
  f.d_b1 = post.dout;
  f.n_y1 = q.n_out();
  f.n_y0 = post.size() > 0 ? p.n_in() / post.size() : 0;
  f.pre = std::move(pre);
  f.post = std::move(post);
  f.p = std::move(p);
  f.q = std::move(q);
  f.check();
  return f;
}

Pid apply_free_simulation(const FreeSimulation& f, const Pid& src) {
  if (src.din() != f.d_a0 || src.dout() != f.d_a1 || src.n_programs() != f.n_x0 ||
      src.n_outcomes() != f.n_x1)
    throw DimensionError("simulation does not accept this source device");
  const int nk = f.n_k(), nl = f.n_l();
  ChoiMatrix id_d = ChoiMatrix::identity(f.d_side);
  std::vector<std::vector<ChoiMatrix>> out(
      f.n_y0, std::vector<ChoiMatrix>(f.n_y1, ChoiMatrix::zero(f.d_b0, f.d_b1)));
  for (int x0 = 0; x0 < f.n_x0; ++x0)
    for (int x1 = 0; x1 < f.n_x1; ++x1) {
      ChoiMatrix mid = link_product(f.pre, tensor_choi(src.block(x0, x1), id_d));
      for (int k = 0; k < nk; ++k) {
        ChoiMatrix t = link_product(mid, f.post.branches[k]);
        for (int y0 = 0; y0 < f.n_y0; ++y0)
          for (int y1 = 0; y1 < f.n_y1; ++y1) {
            double c = 0;
            for (int l = 0; l < nl; ++l) c += f.q(y1, x1 * nl + l) * f.p(x0 * nl + l, y0 * nk + k);
            if (c != 0) out[y0][y1] += c * t;
          }
      }
    }
  return Pid(f.d_b0, f.d_b1, std::move(out));
}

FreeSimulation identity_simulation(int din, int dout, int nx0, int nx1) {
  std::vector<ChoiMatrix> k{ChoiMatrix::identity(dout)};
  return make_simulation(ChoiMatrix::identity(din), Instrument(k), ClassicalChannel::identity(nx0),
                         ClassicalChannel::identity(nx1), din, dout, nx0, nx1);
}

FreeSimulation compose_sequential(const FreeSimulation& g, const FreeSimulation& f) {
  if (g.d_a0 != f.d_b0 || g.d_a1 != f.d_b1 || g.n_x0 != f.n_y0 || g.n_x1 != f.n_y1)
    throw DimensionError("compose_sequential: shapes do not chain");
  const int de = g.d_side;
  // C0 -> B0 (x) E -> A0 (x) D (x) E
  ChoiMatrix pre = link_product(g.pre, tensor_choi(f.pre, ChoiMatrix::identity(de)));
  std::vector<ChoiMatrix> ks;
  for (const auto& k1 : f.post.branches) {
    ChoiMatrix lifted = tensor_choi(k1, ChoiMatrix::identity(de));
    for (const auto& k2 : g.post.branches) ks.push_back(link_product(lifted, k2));
  }
  const int nk1 = f.n_k(), nk2 = g.n_k(), nl1 = f.n_l(), nl2 = g.n_l();
  const int nk = nk1 * nk2, nl = nl1 * nl2;
  RMatrix p = RMatrix::Zero(f.n_x0 * nl, g.n_y0 * nk);
  for (int z0 = 0; z0 < g.n_y0; ++z0)
    for (int k1 = 0; k1 < nk1; ++k1)
      for (int k2 = 0; k2 < nk2; ++k2)
        for (int y0 = 0; y0 < f.n_y0; ++y0)
          for (int l2 = 0; l2 < nl2; ++l2) {
            double p2 = g.p(y0 * nl2 + l2, z0 * nk2 + k2);
            if (p2 == 0) continue;
            for (int x0 = 0; x0 < f.n_x0; ++x0)
              for (int l1 = 0; l1 < nl1; ++l1)
                p(x0 * nl + l1 * nl2 + l2, z0 * nk + k1 * nk2 + k2) +=
                    p2 * f.p(x0 * nl1 + l1, y0 * nk1 + k1);
          }
  RMatrix q = RMatrix::Zero(g.n_y1, f.n_x1 * nl);
  for (int x1 = 0; x1 < f.n_x1; ++x1)
    for (int l1 = 0; l1 < nl1; ++l1)
      for (int l2 = 0; l2 < nl2; ++l2)
        for (int y1 = 0; y1 < f.n_y1; ++y1) {
          double q1 = f.q(y1, x1 * nl1 + l1);
          if (q1 == 0) continue;
          for (int z1 = 0; z1 < g.n_y1; ++z1)
            q(z1, x1 * nl + l1 * nl2 + l2) += q1 * g.q(z1, y1 * nl2 + l2);
        }
  return make_simulation(std::move(pre), Instrument(std::move(ks)),
                         ClassicalChannel(f.n_x0 * nl, g.n_y0 * nk, p),
                         ClassicalChannel(g.n_y1, f.n_x1 * nl, q), f.d_a0, f.d_a1, f.n_x0, f.n_x1);
}

FreeSimulation compose_parallel(const FreeSimulation& a, const FreeSimulation& b) {
  ChoiMatrix pre = permuted(tensor_choi(a.pre, b.pre),
                            {a.d_b0, b.d_b0, a.d_a0, a.d_side, b.d_a0, b.d_side}, {0, 1, 2, 4, 3, 5},
                            a.d_b0 * b.d_b0, a.d_a0 * b.d_a0 * a.d_side * b.d_side);
  std::vector<ChoiMatrix> ks;
  for (const auto& ka : a.post.branches)
    for (const auto& kb : b.post.branches)
      ks.push_back(permuted(tensor_choi(ka, kb),
                            {a.d_a1, a.d_side, b.d_a1, b.d_side, a.d_b1, b.d_b1}, {0, 2, 1, 3, 4, 5},
                            a.d_a1 * b.d_a1 * a.d_side * b.d_side, a.d_b1 * b.d_b1));
  const int nka = a.n_k(), nkb = b.n_k(), nla = a.n_l(), nlb = b.n_l();
  const int nk = nka * nkb, nl = nla * nlb;
  const int nx0 = a.n_x0 * b.n_x0, nx1 = a.n_x1 * b.n_x1, ny0 = a.n_y0 * b.n_y0, ny1 = a.n_y1 * b.n_y1;
  RMatrix p = RMatrix::Zero(nx0 * nl, ny0 * nk);
  for (int ya = 0; ya < a.n_y0; ++ya)
    for (int yb = 0; yb < b.n_y0; ++yb)
      for (int ka = 0; ka < nka; ++ka)
        for (int kb = 0; kb < nkb; ++kb) {
          int col = (ya * b.n_y0 + yb) * nk + ka * nkb + kb;
          for (int xa = 0; xa < a.n_x0; ++xa)
            for (int la = 0; la < nla; ++la) {
              double pa = a.p(xa * nla + la, ya * nka + ka);
              if (pa == 0) continue;
              for (int xb = 0; xb < b.n_x0; ++xb)
                for (int lb = 0; lb < nlb; ++lb)
                  p((xa * b.n_x0 + xb) * nl + la * nlb + lb, col) = pa * b.p(xb * nlb + lb, yb * nkb + kb);
            }
        }
  RMatrix q = RMatrix::Zero(ny1, nx1 * nl);
  for (int xa = 0; xa < a.n_x1; ++xa)
    for (int xb = 0; xb < b.n_x1; ++xb)
      for (int la = 0; la < nla; ++la)
        for (int lb = 0; lb < nlb; ++lb) {
          int col = (xa * b.n_x1 + xb) * nl + la * nlb + lb;
          for (int ya = 0; ya < a.n_y1; ++ya)
            for (int yb = 0; yb < b.n_y1; ++yb)
              q(ya * b.n_y1 + yb, col) = a.q(ya, xa * nla + la) * b.q(yb, xb * nlb + lb);
        }
  return make_simulation(std::move(pre), Instrument(std::move(ks)), ClassicalChannel(nx0 * nl, ny0 * nk, p),
                         ClassicalChannel(ny1, nx1 * nl, q), a.d_a0 * b.d_a0, a.d_a1 * b.d_a1, nx0, nx1);
}

FreeSimulation pad_side(const FreeSimulation& f, int d_side) {
  if (d_side < f.d_side) throw DimensionError("pad_side: cannot shrink the side system");
  if (d_side == f.d_side) return f;
  ChoiMatrix pre = link_product(f.pre, tensor_choi(ChoiMatrix::identity(f.d_a0), inclusion(f.d_side, d_side)));
  ChoiMatrix squeeze = tensor_choi(ChoiMatrix::identity(f.d_a1), compression(d_side, f.d_side));
  std::vector<ChoiMatrix> ks;
  for (const auto& k : f.post.branches) ks.push_back(link_product(squeeze, k));
  // The unused part of the side system goes to branch 0 and prepares |0>.
  std::vector<CMatrix> junk;
  for (int a = 0; a < f.d_a1; ++a)
    for (int s = f.d_side; s < d_side; ++s) {
      CMatrix op = CMatrix::Zero(f.d_b1, f.d_a1 * d_side);
      op(0, a * d_side + s) = 1.0;
      junk.push_back(op);
    }
  ks[0] += choi_from_kraus(junk);
  return make_simulation(std::move(pre), Instrument(std::move(ks)), f.p, f.q, f.d_a0, f.d_a1, f.n_x0, f.n_x1);
}

FreeSimulation pad_k(const FreeSimulation& f, int n_k) {
  const int nk = f.n_k(), nl = f.n_l();
  if (n_k < nk) throw DimensionError("pad_k: cannot drop branches");
  if (n_k == nk) return f;
  std::vector<ChoiMatrix> ks = f.post.branches;
  while (static_cast<int>(ks.size()) < n_k) ks.push_back(ChoiMatrix::zero(f.post.din, f.post.dout));
  RMatrix p = RMatrix::Zero(f.n_x0 * nl, f.n_y0 * n_k);
  for (int y0 = 0; y0 < f.n_y0; ++y0) {
    for (int k = 0; k < nk; ++k) p.col(y0 * n_k + k) = f.p.table().col(y0 * nk + k);
    for (int k = nk; k < n_k; ++k) p(0, y0 * n_k + k) = 1.0;  // never reached
  }
  return make_simulation(f.pre, Instrument(std::move(ks)), ClassicalChannel(f.n_x0 * nl, f.n_y0 * n_k, p), f.q,
                         f.d_a0, f.d_a1, f.n_x0, f.n_x1);
}

FreeSimulation pad_l(const FreeSimulation& f, int n_l) {
  const int nk = f.n_k(), nl = f.n_l();
  if (n_l < nl) throw DimensionError("pad_l: cannot drop labels");
  if (n_l == nl) return f;
  RMatrix p = RMatrix::Zero(f.n_x0 * n_l, f.n_y0 * nk);
  for (int x0 = 0; x0 < f.n_x0; ++x0)
    for (int l = 0; l < nl; ++l) p.row(x0 * n_l + l) = f.p.table().row(x0 * nl + l);
  RMatrix q = RMatrix::Zero(f.n_y1, f.n_x1 * n_l);
  for (int x1 = 0; x1 < f.n_x1; ++x1) {
    for (int l = 0; l < nl; ++l) q.col(x1 * n_l + l) = f.q.table().col(x1 * nl + l);
    for (int l = nl; l < n_l; ++l) q(0, x1 * n_l + l) = 1.0;  // never reached
  }
  return make_simulation(f.pre, f.post, ClassicalChannel(f.n_x0 * n_l, f.n_y0 * nk, p),
                         ClassicalChannel(f.n_y1, f.n_x1 * n_l, q), f.d_a0, f.d_a1, f.n_x0, f.n_x1);
}

FreeSimulation mix_simulations(const std::vector<std::pair<double, FreeSimulation>>& terms) {
  if (terms.empty()) throw ValueError("mix_simulations: no terms");
  const FreeSimulation& s0 = terms[0].second;
  int ds = 0, nk = 0, nl = 0;
  double wsum = 0;
  for (const auto& [w, s] : terms) {
    if (w < 0) throw ValueError("mix_simulations: negative weight");
    if (s.d_a0 != s0.d_a0 || s.d_a1 != s0.d_a1 || s.d_b0 != s0.d_b0 || s.d_b1 != s0.d_b1 ||
        s.n_x0 != s0.n_x0 || s.n_x1 != s0.n_x1 || s.n_y0 != s0.n_y0 || s.n_y1 != s0.n_y1)
      throw DimensionError("mix_simulations: source/target shapes differ");
    ds = std::max(ds, s.d_side);
    nk = std::max(nk, s.n_k());
    nl = std::max(nl, s.n_l());
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw ValueError("mix_simulations: weights must sum to one");
  const int nr = static_cast<int>(terms.size());
  const int d_side = ds * nr, nk2 = nk * nr, nl2 = nl * nr;
  const int da1 = s0.d_a1;
  ChoiMatrix pre = ChoiMatrix::zero(s0.d_b0, s0.d_a0 * d_side);
  std::vector<ChoiMatrix> ks(nk2, ChoiMatrix::zero(da1 * d_side, s0.d_b1));
  RMatrix p = RMatrix::Zero(s0.n_x0 * nl2, s0.n_y0 * nk2);
  RMatrix q = RMatrix::Zero(s0.n_y1, s0.n_x1 * nl2);
  for (int r = 0; r < nr; ++r) {
    FreeSimulation s = pad_l(pad_k(pad_side(terms[r].second, ds), nk), nl);
    // The register r rides along as the last factor of the side system.
    pre += terms[r].first * ChoiMatrix(s0.d_b0, s0.d_a0 * d_side, kron(s.pre.mat(), basis_projector(nr, r)));
    for (int k = 0; k < nk; ++k) {
      CMatrix j = kron(s.post.branches[k].mat(), basis_projector(nr, r));
      j = permute_subsystems(j, {da1 * ds, s0.d_b1, nr}, {0, 2, 1});
      ks[k * nr + r] = ChoiMatrix(da1 * d_side, s0.d_b1, j);
    }
    for (int y0 = 0; y0 < s0.n_y0; ++y0)
      for (int k = 0; k < nk; ++k)
        for (int x0 = 0; x0 < s0.n_x0; ++x0)
          for (int l = 0; l < nl; ++l)
            p(x0 * nl2 + l * nr + r, y0 * nk2 + k * nr + r) = s.p(x0 * nl + l, y0 * nk + k);
    for (int x1 = 0; x1 < s0.n_x1; ++x1)
      for (int l = 0; l < nl; ++l) q.col(x1 * nl2 + l * nr + r) = s.q.table().col(x1 * nl + l);
  }
  // Columns (y0, k, r') paired with a register r != r' are never reached; keep them stochastic.
  for (int c = 0; c < p.cols(); ++c)
    if (p.col(c).sum() == 0) p(0, c) = 1.0;
  return make_simulation(std::move(pre), Instrument(std::move(ks)), ClassicalChannel(s0.n_x0 * nl2, s0.n_y0 * nk2, p),
                         ClassicalChannel(s0.n_y1, s0.n_x1 * nl2, q), s0.d_a0, s0.d_a1, s0.n_x0, s0.n_x1);
}

FreeSimulation reachability_simulation(int d_a0, int d_a1, int n_x0, int n_x1, const SimplicityCertificate& t) {
  const int db0 = t.mother.din, db1 = t.mother.dout, ng = t.mother.size();
  const int ny0 = t.n_programs, ny1 = t.n_outcomes;
  // B0 -> A0 (x) D with D = B0: prepare |0> on A0, pass the input to D.
  CMatrix j = kron(basis_projector(d_a0, 0), ChoiMatrix::identity(db0).mat());
  ChoiMatrix pre(db0, d_a0 * db0, permute_subsystems(j, {d_a0, db0, db0}, {1, 0, 2}));
  std::vector<ChoiMatrix> ks;
  for (const auto& g : t.mother.branches)
    ks.push_back(ChoiMatrix(d_a1 * db0, db1, kron(CMatrix::Identity(d_a1, d_a1), g.mat())));
  // l carries lambda_g(y0); the source's own output is ignored.
  RMatrix p = RMatrix::Zero(n_x0 * ny1, ny0 * ng);
  for (int y0 = 0; y0 < ny0; ++y0)
    for (int g = 0; g < ng; ++g) p(t.strategies[g][y0], y0 * ng + g) = 1.0;
  RMatrix q = RMatrix::Zero(ny1, n_x1 * ny1);
  for (int x1 = 0; x1 < n_x1; ++x1)
    for (int l = 0; l < ny1; ++l) q(l, x1 * ny1 + l) = 1.0;
  return make_simulation(std::move(pre), Instrument(std::move(ks)), ClassicalChannel(n_x0 * ny1, ny0 * ng, p),
                         ClassicalChannel(ny1, n_x1 * ny1, q), d_a0, d_a1, n_x0, n_x1);
}

FreeSimulation random_free_simulation(int d_a0, int d_a1, int n_x0, int n_x1, const SimulationShape& s,
                                      std::uint64_t seed) {
  Rng rng(seed);
  ChoiMatrix pre = random_channel(s.d_b0, d_a0 * s.d_side, 0, rng);
  Instrument post = random_instrument(d_a1 * s.d_side, s.d_b1, s.n_k, 0, rng);
  ClassicalChannel p = random_stochastic(n_x0 * s.n_l, s.n_y0 * s.n_k, rng);
  ClassicalChannel q = random_stochastic(s.n_y1, n_x1 * s.n_l, rng);
  return make_simulation(std::move(pre), std::move(post), std::move(p), std::move(q), d_a0, d_a1, n_x0, n_x1);
}

Pmd apply_pmd_simulation(const PmdSimulation& s, const Pmd& m) {
  const Instrument& inst = s.instrument;
  if (inst.dout != m.dim || m.n_programs() != s.n_x0 || m.n_outcomes() != s.n_x1)
    throw DimensionError("pmd simulation does not accept this device");
  const int nk = inst.size();
  const int nl = s.q.n_in() / s.n_x1;
  const int ny0 = s.p.n_in() / nk, ny1 = s.q.n_out();
  if (s.p.n_out() != s.n_x0 * nl) throw DimensionError("pmd simulation: p shape mismatch");
  std::vector<std::vector<CMatrix>> eff(ny0, std::vector<CMatrix>(ny1, CMatrix::Zero(inst.din, inst.din)));
  for (int x0 = 0; x0 < s.n_x0; ++x0)
    for (int x1 = 0; x1 < s.n_x1; ++x1)
      for (int k = 0; k < nk; ++k) {
        CMatrix t = apply_adjoint(inst.branches[k], m.effects[x0][x1]);
        for (int y0 = 0; y0 < ny0; ++y0)
          for (int y1 = 0; y1 < ny1; ++y1) {
            double c = 0;
            for (int l = 0; l < nl; ++l) c += s.q(y1, x1 * nl + l) * s.p(x0 * nl + l, y0 * nk + k);
            if (c != 0) eff[y0][y1] += c * t;
          }
      }
  return Pmd(inst.din, std::move(eff));
}

}  // namespace pidkit
