#include "pidkit/devices.hpp"

#include <algorithm>
#include <cmath>

namespace pidkit {

ClassicalChannel::ClassicalChannel(int n_out, int n_in, const RMatrix& table) : table_(table) {
  if (n_out <= 0 || n_in <= 0 || table.rows() != n_out || table.cols() != n_in)
    throw DimensionError("classical channel shape mismatch");
}

ClassicalChannel ClassicalChannel::identity(int n) {
  return ClassicalChannel(n, n, RMatrix::Identity(n, n));
}

ClassicalChannel ClassicalChannel::deterministic(int n_out, const std::vector<int>& map) {
  RMatrix t = RMatrix::Zero(n_out, static_cast<int>(map.size()));
  for (size_t i = 0; i < map.size(); ++i) {
    if (map[i] < 0 || map[i] >= n_out) throw DimensionError("deterministic map out of range");
    t(map[i], static_cast<Eigen::Index>(i)) = 1.0;
  }
  return ClassicalChannel(n_out, static_cast<int>(map.size()), t);
}

double ClassicalChannel::stochasticity_defect() const {
  double d = std::max(0.0, -table_.minCoeff());
  for (Eigen::Index c = 0; c < table_.cols(); ++c)
    d = std::max(d, std::abs(table_.col(c).sum() - 1.0));
  return d;
}

double Povm::defect() const {
  CMatrix s = CMatrix::Zero(dim, dim);
  double d = 0;
  for (const auto& e : effects) {
    d = std::max(d, -min_eigenvalue(e));
    s += e;
  }
  return std::max(d, (s - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff());
}

Pmd::Pmd(int d, std::vector<std::vector<CMatrix>> e) : dim(d), effects(std::move(e)) {
  if (dim <= 0 || effects.empty() || effects[0].empty())
    throw DimensionError("measurement device needs programs and outcomes");
  for (auto& row : effects) {
    if (row.size() != effects[0].size())
      throw DimensionError("every program needs the same number of outcomes");
    for (auto& m : row) {
      if (m.rows() != dim || m.cols() != dim) throw DimensionError("effect size mismatch");
      m = hermitize(m);
    }
  }
}

double Pmd::defect() const {
  double d = 0;
  for (const auto& row : effects) d = std::max(d, Povm{dim, row}.defect());
  return d;
}

Instrument::Instrument(std::vector<ChoiMatrix> b) : branches(std::move(b)) {
  if (branches.empty()) throw DimensionError("instrument needs at least one branch");
  din = branches[0].din();
  dout = branches[0].dout();
  for (const auto& c : branches)
    if (c.din() != din || c.dout() != dout) throw DimensionError("instrument branch shape mismatch");
}

ChoiMatrix Instrument::total() const {
  ChoiMatrix t = ChoiMatrix::zero(din, dout);
  for (const auto& c : branches) t += c;
  return t;
}

double Instrument::defect() const {
  double d = 0;
  for (const auto& c : branches) d = std::max(d, -min_eigenvalue(c.mat()));
  return std::max(d, (total().marginal() - CMatrix::Identity(din, din)).cwiseAbs().maxCoeff());
}

Pid::Pid(int din, int dout, std::vector<std::vector<ChoiMatrix>> blocks)
    : din_(din), dout_(dout), blocks_(std::move(blocks)) {
  if (blocks_.empty() || blocks_[0].empty())
    throw DimensionError("device needs at least one program and one outcome");
  for (const auto& row : blocks_) {
    if (row.size() != blocks_[0].size())
      throw DimensionError("every program needs the same number of outcomes");
    for (const auto& c : row)
      if (c.din() != din_ || c.dout() != dout_) throw DimensionError("block dimension mismatch");
  }
}

ChoiMatrix Pid::channel(int x0) const {
  ChoiMatrix t = ChoiMatrix::zero(din_, dout_);
  for (const auto& c : blocks_[x0]) t += c;
  return t;
}

ChoiMatrix Pid::marginal() const {
  ChoiMatrix t = ChoiMatrix::zero(din_, dout_);
  for (int x0 = 0; x0 < n_programs(); ++x0) t += channel(x0);
  return (1.0 / n_programs()) * t;
}

PidValidation validate_pid(const Pid& p) {
  PidValidation v;
  std::vector<ChoiMatrix> ch;
  for (int x0 = 0; x0 < p.n_programs(); ++x0) {
    for (int x1 = 0; x1 < p.n_outcomes(); ++x1)
      v.cp_defect = std::max(v.cp_defect, -min_eigenvalue(p.block(x0, x1).mat()));
    ch.push_back(p.channel(x0));
    v.tp_defect = std::max(
        v.tp_defect,
        (ch.back().marginal() - CMatrix::Identity(p.din(), p.din())).cwiseAbs().maxCoeff());
  }
  for (size_t a = 0; a < ch.size(); ++a)
    for (size_t b = a + 1; b < ch.size(); ++b)
      v.nonsignaling_defect =
          std::max(v.nonsignaling_defect, trace_norm(ch[a].mat() - ch[b].mat()));
  v.valid = v.cp_defect <= kCpTol && v.tp_defect <= kTpTol && v.nonsignaling_defect <= kSignalTol;
  if (v.cp_defect > kCpTol) v.message += "block not completely positive; ";
  if (v.tp_defect > kTpTol) v.message += "not trace preserving; ";
  if (v.nonsignaling_defect > kSignalTol) v.message += "channel depends on the program; ";
  if (v.valid) v.message = "ok";
  return v;
}

Pid steer(const ChoiMatrix& broadcast, int d_a1, const Pmd& m) {
  if (d_a1 <= 0 || broadcast.dout() % d_a1 != 0)
    throw DimensionError("steer: output does not factor as A1 (x) E");
  const int de = broadcast.dout() / d_a1;
  if (m.dim != de) throw DimensionError("steer: measurement acts on the wrong dimension");
  const int da0 = broadcast.din();
  CMatrix id = CMatrix::Identity(da0 * d_a1, da0 * d_a1);
  std::vector<std::vector<ChoiMatrix>> blocks(m.n_programs());
  for (int x0 = 0; x0 < m.n_programs(); ++x0)
    for (int x1 = 0; x1 < m.n_outcomes(); ++x1) {
      CMatrix t = kron(id, m.effects[x0][x1]) * broadcast.mat();
      CMatrix j = partial_trace(t, {da0, d_a1, de}, {0, 1});
      blocks[x0].emplace_back(da0, d_a1, (j + j.adjoint()) / 2.0);
    }
  return Pid(da0, d_a1, std::move(blocks));
}

Pid pid_from_instrument(const Instrument& inst, int n_programs) {
  std::vector<std::vector<ChoiMatrix>> blocks(n_programs, inst.branches);
  return Pid(inst.din, inst.dout, std::move(blocks));
}

Pid pid_from_pmd(const Pmd& m) {
  std::vector<std::vector<ChoiMatrix>> blocks(m.n_programs());
  for (int x0 = 0; x0 < m.n_programs(); ++x0)
    for (const auto& e : m.effects[x0]) blocks[x0].emplace_back(m.dim, 1, CMatrix(e.transpose()));
  return Pid(m.dim, 1, std::move(blocks));
}

Pid tensor_pid(const Pid& p, const Pid& q) {
  const int np = p.n_programs(), nq = q.n_programs();
  const int op = p.n_outcomes(), oq = q.n_outcomes();
  std::vector<std::vector<ChoiMatrix>> blocks(np * nq);
  for (int x0 = 0; x0 < np; ++x0)
    for (int y0 = 0; y0 < nq; ++y0)
      for (int x1 = 0; x1 < op; ++x1)
        for (int y1 = 0; y1 < oq; ++y1)
          blocks[x0 * nq + y0].push_back(tensor_choi(p.block(x0, x1), q.block(y0, y1)));
  return Pid(p.din() * q.din(), p.dout() * q.dout(), std::move(blocks));
}

Pid scale_mix(const std::vector<std::pair<double, const Pid*>>& terms) {
  if (terms.empty()) throw DimensionError("scale_mix: no terms");
  const Pid& f = *terms[0].second;
  std::vector<std::vector<ChoiMatrix>> blocks(
      f.n_programs(), std::vector<ChoiMatrix>(f.n_outcomes(), ChoiMatrix::zero(f.din(), f.dout())));
  for (const auto& [w, p] : terms) {
    if (p->n_programs() != f.n_programs() || p->n_outcomes() != f.n_outcomes() ||
        p->din() != f.din() || p->dout() != f.dout())
      throw DimensionError("scale_mix: shape mismatch");
    for (int x0 = 0; x0 < f.n_programs(); ++x0)
      for (int x1 = 0; x1 < f.n_outcomes(); ++x1) blocks[x0][x1] += w * p->block(x0, x1);
  }
  return Pid(f.din(), f.dout(), std::move(blocks));
}

double pid_distance(const Pid& a, const Pid& b) {
  if (a.n_programs() != b.n_programs() || a.n_outcomes() != b.n_outcomes() ||
      a.din() != b.din() || a.dout() != b.dout())
    throw DimensionError("pid_distance: shape mismatch");
  double d = 0;
  for (int x0 = 0; x0 < a.n_programs(); ++x0)
    for (int x1 = 0; x1 < a.n_outcomes(); ++x1)
      d = std::max(d, (a.block(x0, x1).mat() - b.block(x0, x1).mat()).cwiseAbs().maxCoeff());
  return d;
}

long num_strategies(int n_programs, int n_outcomes) {
  if (n_programs <= 0 || n_outcomes <= 0) throw DimensionError("empty label set");
  long n = 1;
  for (int i = 0; i < n_programs; ++i) {
    n *= n_outcomes;
    if (n > kMaxStrategies)
      throw ValueError("more than 4096 deterministic strategies (|X1|^|X0| too large)");
  }
  return n;
}

std::vector<int> strategy(long index, int n_programs, int n_outcomes) {
  std::vector<int> s(n_programs);
  for (int x0 = n_programs - 1; x0 >= 0; --x0) {
    s[x0] = static_cast<int>(index % n_outcomes);
    index /= n_outcomes;
  }
  return s;
}

}  // namespace pidkit
