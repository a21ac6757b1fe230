#include "pidkit/sem.hpp"

#include <cmath>

namespace pidkit {

SemResult sem(const Pid& p, double rank_tol) {
  auto v = validate_pid(p);
  if (!v.valid) throw ValueError("sem: invalid device: " + v.message);
  auto ps = psd_pinv_sqrt(p.marginal().mat(), rank_tol);
  SemResult out;
  out.rank = ps.rank;
  out.support = ps.support;
  out.values = ps.values;
  out.cutoff = ps.cutoff;
  if (ps.rank > 0 && ps.values(ps.rank - 1) <= 10.0 * ps.cutoff)
    out.warning = "smallest kept eigenvalue is within a factor 10 of the rank cutoff";
  // D^{-1/2} U^dagger: coordinates on A* in the eigenbasis.
  CMatrix t = ps.values.cwiseSqrt().cwiseInverse().asDiagonal() * ps.support.adjoint();
  std::vector<std::vector<CMatrix>> eff(p.n_programs());
  for (int x0 = 0; x0 < p.n_programs(); ++x0)
    for (int x1 = 0; x1 < p.n_outcomes(); ++x1)
      eff[x0].push_back(t * p.block(x0, x1).mat() * t.adjoint());
  out.pmd = Pmd(ps.rank, std::move(eff));
  return out;
}

ChoiMatrix CanonicalDilation::channel() const {
  std::vector<CMatrix> k{v};
  return choi_from_kraus(k);
}

CanonicalDilation canonical_dilation(const SemResult& s, int din, int dout) {
  if (s.support.rows() != din * dout) throw DimensionError("dilation: support size mismatch");
  CanonicalDilation d{din, dout, s.rank, CMatrix::Zero(dout * s.rank, din)};
  for (int sidx = 0; sidx < s.rank; ++sidx) {
    double w = std::sqrt(s.values(sidx));
    for (int i = 0; i < din; ++i)
      for (int a = 0; a < dout; ++a) d.v(a * s.rank + sidx, i) = w * s.support(i * dout + a, sidx);
  }
  return d;
}

CanonicalDilation canonical_dilation(const Pid& p, double rank_tol) {
  return canonical_dilation(sem(p, rank_tol), p.din(), p.dout());
}

Pid reconstruct_pid(const CanonicalDilation& v, const SemResult& s) {
  std::vector<std::vector<CMatrix>> t(s.pmd.n_programs());
  for (int x0 = 0; x0 < s.pmd.n_programs(); ++x0)
    for (const auto& e : s.pmd.effects[x0]) t[x0].push_back(e.transpose());
  return steer(v.channel(), v.dout, Pmd(s.rank, std::move(t)));
}

double sem_monotone_value(const Pid& p, const CompatOptions& opts) {
  return roi_pmd(sem(p).pmd, opts).r;
}

}  // namespace pidkit
