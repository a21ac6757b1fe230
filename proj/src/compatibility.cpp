#include "pidkit/compatibility.hpp"

#include <algorithm>
#include <cmath>

namespace pidkit {

namespace {

using sdp::HermitianProgram;
using sdp::SdpStatus;

// Blocks j[x0][x1] on A0 (x) A1. A measurement device enters with dout = 1
// and its effects in place of Choi matrices; the programs below only see
// partial traces and PSD orderings, which do not care about the transpose.
struct Assemblage {
  int din = 0, dout = 0, nx0 = 0, nx1 = 0;
  std::vector<std::vector<CMatrix>> j;
  int n() const { return din * dout; }
};

Assemblage from_pid(const Pid& p) {
  Assemblage a{p.din(), p.dout(), p.n_programs(), p.n_outcomes(), {}};
  a.j.resize(a.nx0);
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) a.j[x0].push_back(p.block(x0, x1).mat());
  return a;
}

Assemblage from_pmd(const Pmd& m) {
  return Assemblage{m.dim, 1, m.n_programs(), m.n_outcomes(), m.effects};
}

std::vector<std::vector<int>> all_strategies(int nx0, int nx1) {
  long L = num_strategies(nx0, nx1);
  std::vector<std::vector<int>> s;
  s.reserve(L);
  for (long l = 0; l < L; ++l) s.push_back(strategy(l, nx0, nx1));
  return s;
}

HermitianProgram::Adjoint identity_map() {
  return [](const CMatrix& e) { return e; };
}
HermitianProgram::Adjoint negated_map() {
  return [](const CMatrix& e) { return CMatrix(-e); };
}

struct PrimalOut {
  SdpStatus status;
  double t = 0;
  std::vector<CMatrix> eta;
  std::vector<std::vector<CMatrix>> slack;
  int iterations = 0;
};

PrimalOut solve_primal(const Assemblage& a, const std::vector<std::vector<int>>& strat,
                       const sdp::SolverOptions& o) {
  HermitianProgram hp;
  const int n = a.n();
  const int L = static_cast<int>(strat.size());
  std::vector<int> eta(L);
  for (int l = 0; l < L; ++l) eta[l] = hp.add_complex_block("eta", n);
  std::vector<std::vector<int>> slack(a.nx0, std::vector<int>(a.nx1));
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) slack[x0][x1] = hp.add_complex_block("slack", n);
  const int t = hp.add_real_block("t", 1);
  hp.add_objective(t, CMatrix::Ones(1, 1));
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) {
      std::vector<std::pair<int, HermitianProgram::Adjoint>> terms;
      for (int l = 0; l < L; ++l)
        if (strat[l][x0] == x1) terms.push_back({eta[l], identity_map()});
      terms.push_back({slack[x0][x1], negated_map()});
      hp.add_matrix_equality(n, terms, a.j[x0][x1]);
    }
  {
    const int dout = a.dout;
    std::vector<std::pair<int, HermitianProgram::Adjoint>> terms;
    for (int l = 0; l < L; ++l)
      terms.push_back({eta[l], [dout](const CMatrix& e) {
                         return kron(e, CMatrix::Identity(dout, dout));
                       }});
    terms.push_back({t, [](const CMatrix& e) {
                       return CMatrix::Constant(1, 1, -e.trace().real());
                     }});
    hp.add_matrix_equality(a.din, terms, CMatrix::Zero(a.din, a.din));
  }
  auto res = hp.solve(o);
  PrimalOut out;
  out.status = res.status;
  out.iterations = res.raw.iterations;
  out.t = res.x[t](0, 0).real();
  for (int l = 0; l < L; ++l) out.eta.push_back(res.x[eta[l]]);
  out.slack.resize(a.nx0);
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) out.slack[x0].push_back(res.x[slack[x0][x1]]);
  return out;
}

struct DualOut {
  SdpStatus status;
  DualWitness w;
  int iterations = 0;
};

DualOut solve_dual(const Assemblage& a, const std::vector<std::vector<int>>& strat,
                   const sdp::SolverOptions& o) {
  HermitianProgram hp;
  const int n = a.n();
  const int L = static_cast<int>(strat.size());
  std::vector<std::vector<int>> alpha(a.nx0, std::vector<int>(a.nx1));
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) {
      alpha[x0][x1] = hp.add_complex_block("alpha", n);
      hp.add_objective(alpha[x0][x1], -a.j[x0][x1]);
    }
  // Only sum_x0 beta_x0 enters the constraints; it is PSD whenever the
  // cone condition holds, so it is carried as one PSD block.
  const int beta = hp.add_complex_block("beta_sum", a.din);
  hp.add_constraint({{beta, CMatrix::Identity(a.din, a.din)}},
                    static_cast<double>(a.din) * a.nx0);
  const int dout = a.dout, din = a.din;
  for (int l = 0; l < L; ++l) {
    const int q = hp.add_complex_block("cone_slack", n);
    std::vector<std::pair<int, HermitianProgram::Adjoint>> terms;
    terms.push_back({q, identity_map()});
    terms.push_back({beta, [din, dout](const CMatrix& e) {
                       return CMatrix(-partial_trace(e, {din, dout}, {0}));
                     }});
    for (int x0 = 0; x0 < a.nx0; ++x0) terms.push_back({alpha[x0][strat[l][x0]], identity_map()});
    hp.add_matrix_equality(n, terms, CMatrix::Zero(n, n));
  }
  auto res = hp.solve(o);
  DualOut out;
  out.status = res.status;
  out.iterations = res.raw.iterations;
  out.w.alpha.resize(a.nx0);
  double s = 0;
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) {
      out.w.alpha[x0].push_back(res.x[alpha[x0][x1]]);
      s += (res.x[alpha[x0][x1]] * a.j[x0][x1]).trace().real();
    }
  for (int x0 = 0; x0 < a.nx0; ++x0) out.w.beta.push_back(res.x[beta] / a.nx0);
  out.w.value = s / (static_cast<double>(a.din) * a.nx0) - 1.0;
  return out;
}

struct FeasOut {
  SdpStatus status;
  std::vector<CMatrix> eta;
};

FeasOut solve_feasibility(const Assemblage& a, const std::vector<std::vector<int>>& strat,
                          const sdp::SolverOptions& o) {
  HermitianProgram hp;
  const int n = a.n();
  const int L = static_cast<int>(strat.size());
  std::vector<int> eta(L);
  for (int l = 0; l < L; ++l) eta[l] = hp.add_complex_block("eta", n);
  // For x0 >= 1 the last outcome is implied by the others and by x0 = 0.
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) {
      if (x0 > 0 && x1 == a.nx1 - 1) continue;
      std::vector<std::pair<int, HermitianProgram::Adjoint>> terms;
      for (int l = 0; l < L; ++l)
        if (strat[l][x0] == x1) terms.push_back({eta[l], identity_map()});
      hp.add_matrix_equality(n, terms, a.j[x0][x1]);
    }
  auto res = hp.solve(o);
  FeasOut out;
  out.status = res.status;
  for (int l = 0; l < L; ++l) out.eta.push_back(res.x[eta[l]]);
  return out;
}

double match_residual(const Assemblage& a, const std::vector<std::vector<int>>& strat,
                      const std::vector<CMatrix>& g) {
  double r = 0;
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) {
      CMatrix s = -a.j[x0][x1];
      for (size_t l = 0; l < strat.size(); ++l)
        if (strat[l][x0] == x1) s += g[l];
      r = std::max(r, s.cwiseAbs().maxCoeff());
    }
  return r;
}

double tp_residual(const Assemblage& a, const std::vector<CMatrix>& g) {
  CMatrix s = CMatrix::Zero(a.n(), a.n());
  for (const auto& m : g) s += m;
  CMatrix marg = partial_trace(s, {a.din, a.dout}, {0});
  return (marg - CMatrix::Identity(a.din, a.din)).cwiseAbs().maxCoeff();
}

double psd_violation(const std::vector<CMatrix>& g) {
  double v = 0;
  for (const auto& m : g) v = std::max(v, -min_eigenvalue(m));
  return v;
}

// Mother operators for an assemblage, or nothing when no certificate passes.
std::optional<std::vector<CMatrix>> find_mother(const Assemblage& a,
                                                const std::vector<std::vector<int>>& strat,
                                                const PrimalOut& primal,
                                                const CompatOptions& opts) {
  auto accept = [&](const std::vector<CMatrix>& g) {
    return match_residual(a, strat, g) <= opts.residual_tol &&
           tp_residual(a, g) <= opts.residual_tol && psd_violation(g) <= opts.residual_tol;
  };
  std::vector<CMatrix> g;
  for (const auto& e : primal.eta) g.push_back(e / primal.t);
  if (accept(g)) return g;
  auto feas = solve_feasibility(a, strat, opts.solver);
  if (feas.status == SdpStatus::Optimal && accept(feas.eta)) return feas.eta;
  return std::nullopt;
}

void check_valid(const Pid& p) {
  auto v = validate_pid(p);
  if (!v.valid) throw ValueError("device is not a valid programmable instrument: " + v.message);
}

void check_valid(const Pmd& m) {
  if (m.defect() > kTpTol) throw ValueError("measurement device effects are not valid POVMs");
}

void require_solved(SdpStatus s, const char* what) {
  if (s != SdpStatus::Optimal)
    throw NumericalError(std::string(what) + ": solver returned " + sdp::to_string(s));
}

}  // namespace

Pid assemble(const SimplicityCertificate& c) {
  std::vector<std::vector<ChoiMatrix>> blocks(
      c.n_programs, std::vector<ChoiMatrix>(c.n_outcomes,
                                            ChoiMatrix::zero(c.mother.din, c.mother.dout)));
  for (size_t l = 0; l < c.strategies.size(); ++l)
    for (int x0 = 0; x0 < c.n_programs; ++x0) blocks[x0][c.strategies[l][x0]] += c.mother.branches[l];
  return Pid(c.mother.din, c.mother.dout, std::move(blocks));
}

double certificate_residual(const SimplicityCertificate& c, const Pid& p) {
  return pid_distance(assemble(c), p);
}

double dual_feasibility_defect(const DualWitness& w, int din, int dout) {
  const int nx0 = static_cast<int>(w.alpha.size());
  const int nx1 = nx0 ? static_cast<int>(w.alpha[0].size()) : 0;
  double d = 0, tr = 0;
  for (const auto& row : w.alpha)
    for (const auto& a : row) d = std::max(d, -min_eigenvalue(a));
  for (const auto& b : w.beta) tr += b.trace().real();
  d = std::max(d, std::abs(tr - static_cast<double>(din) * nx0));
  const long L = num_strategies(nx0, nx1);
  CMatrix bsum = CMatrix::Zero(din, din);
  for (const auto& b : w.beta) bsum += b;
  CMatrix base = kron(bsum, CMatrix::Identity(dout, dout));
  for (long l = 0; l < L; ++l) {
    auto s = strategy(l, nx0, nx1);
    CMatrix m = base;
    for (int x0 = 0; x0 < nx0; ++x0) m -= w.alpha[x0][s[x0]];
    d = std::max(d, -min_eigenvalue(m));
  }
  return d;
}

double witness_value(const DualWitness& w, const Pid& p) {
  double s = 0;
  for (int x0 = 0; x0 < p.n_programs(); ++x0)
    for (int x1 = 0; x1 < p.n_outcomes(); ++x1)
      s += (w.alpha[x0][x1] * p.block(x0, x1).mat()).trace().real();
  return s / (static_cast<double>(p.din()) * p.n_programs()) - 1.0;
}

RoiPrimal roi_primal(const Pid& p, const CompatOptions& opts) {
  check_valid(p);
  Assemblage a = from_pid(p);
  auto strat = all_strategies(a.nx0, a.nx1);
  auto out = solve_primal(a, strat, opts.solver);
  require_solved(out.status, "robustness primal");
  RoiPrimal r;
  r.status = out.status;
  r.iterations = out.iterations;
  r.r = out.t - 1.0;
  std::vector<std::vector<ChoiMatrix>> noise(a.nx0), mix(a.nx0);
  for (int x0 = 0; x0 < a.nx0; ++x0)
    for (int x1 = 0; x1 < a.nx1; ++x1) {
      CMatrix omega = a.j[x0][x1] + out.slack[x0][x1];
      mix[x0].emplace_back(a.din, a.dout, omega / out.t);
      if (r.r > 1e-8)
        noise[x0].emplace_back(a.din, a.dout, out.slack[x0][x1] / r.r);
      else
        noise[x0].push_back(p.block(x0, x1));
    }
  r.noise = Pid(a.din, a.dout, std::move(noise));
  r.simple_mix = Pid(a.din, a.dout, std::move(mix));
  std::vector<ChoiMatrix> g;
  for (const auto& e : out.eta) g.emplace_back(a.din, a.dout, e / out.t);
  r.mix_certificate = SimplicityCertificate{a.nx0, a.nx1, strat, Instrument(std::move(g)), 0, 0};
  r.mix_certificate.residual = certificate_residual(r.mix_certificate, r.simple_mix);
  r.mix_certificate.mother_defect = r.mix_certificate.mother.defect();
  return r;
}

RoiDual roi_dual(const Pid& p, const CompatOptions& opts) {
  check_valid(p);
  Assemblage a = from_pid(p);
  auto out = solve_dual(a, all_strategies(a.nx0, a.nx1), opts.solver);
  require_solved(out.status, "robustness dual");
  return RoiDual{out.status, out.w.value, out.w, out.iterations};
}

RoiCertificate roi(const Pid& p, const CompatOptions& opts) {
  auto pr = roi_primal(p, opts);
  auto du = roi_dual(p, opts);
  RoiCertificate c;
  c.r = pr.r;
  c.noise = pr.noise;
  c.simple_mix = pr.simple_mix;
  c.mix_certificate = pr.mix_certificate;
  c.witness = du.witness;
  c.gap = std::abs(pr.r - du.r);
  return c;
}

SimplicityResult is_simple_pid(const Pid& p, const CompatOptions& opts) {
  check_valid(p);
  Assemblage a = from_pid(p);
  auto strat = all_strategies(a.nx0, a.nx1);
  auto primal = solve_primal(a, strat, opts.solver);
  require_solved(primal.status, "robustness primal");
  SimplicityResult res;
  res.roi = primal.t - 1.0;
  if (res.roi <= opts.simple_tol) {
    if (auto g = find_mother(a, strat, primal, opts)) {
      std::vector<ChoiMatrix> branches;
      for (const auto& m : *g) branches.emplace_back(a.din, a.dout, m);
      SimplicityCertificate c{a.nx0, a.nx1, strat, Instrument(std::move(branches)), 0, 0};
      c.residual = certificate_residual(c, p);
      c.mother_defect = c.mother.defect();
      res.verdict = Verdict::Simple;
      res.certificate = std::move(c);
      return res;
    }
  }
  auto dual = solve_dual(a, strat, opts.solver);
  require_solved(dual.status, "robustness dual");
  res.verdict = Verdict::NonSimple;
  res.witness = dual.w;
  return res;
}

CompatibilityResult is_compatible_pmd(const Pmd& m, const CompatOptions& opts) {
  check_valid(m);
  Assemblage a = from_pmd(m);
  auto strat = all_strategies(a.nx0, a.nx1);
  auto primal = solve_primal(a, strat, opts.solver);
  require_solved(primal.status, "robustness primal");
  CompatibilityResult res;
  res.roi = primal.t - 1.0;
  if (res.roi <= opts.simple_tol) {
    if (auto g = find_mother(a, strat, primal, opts)) {
      CompatibilityCertificate c{a.nx0, a.nx1, strat, Povm{m.dim, *g}, 0};
      c.residual = match_residual(a, strat, *g);
      res.compatible = true;
      res.certificate = std::move(c);
      return res;
    }
  }
  auto dual = solve_dual(a, strat, opts.solver);
  require_solved(dual.status, "robustness dual");
  res.witness = dual.w;
  return res;
}

RoiPmd roi_pmd(const Pmd& m, const CompatOptions& opts) {
  check_valid(m);
  Assemblage a = from_pmd(m);
  auto strat = all_strategies(a.nx0, a.nx1);
  auto primal = solve_primal(a, strat, opts.solver);
  require_solved(primal.status, "robustness primal");
  auto dual = solve_dual(a, strat, opts.solver);
  require_solved(dual.status, "robustness dual");
  return RoiPmd{primal.t - 1.0, dual.w.value, dual.w};
}

ChoiMatrix build_incoherent_extension(const SimplicityCertificate& c) {
  const int din = c.mother.din, dout = c.mother.dout, ne = c.mother.size();
  CMatrix j = CMatrix::Zero(din * dout * ne, din * dout * ne);
  for (int g = 0; g < ne; ++g) j += kron(c.mother.branches[g].mat(), basis_projector(ne, g));
  return ChoiMatrix(din, dout * ne, j);
}

Pmd incoherent_readout(const SimplicityCertificate& c) {
  const int ne = c.mother.size();
  std::vector<std::vector<CMatrix>> eff(c.n_programs, std::vector<CMatrix>(c.n_outcomes, CMatrix::Zero(ne, ne)));
  for (int g = 0; g < ne; ++g)
    for (int x0 = 0; x0 < c.n_programs; ++x0) eff[x0][c.strategies[g][x0]](g, g) = 1.0;
  return Pmd(ne, std::move(eff));
}

}  // namespace pidkit
