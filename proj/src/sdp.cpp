#include "pidkit/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <map>

namespace pidkit::sdp {

SymSparse SymSparse::from_dense(const RMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("symmetric matrix must be square");
  SymSparse s;
  if (m.size() == 0) return s;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValueError("coefficient matrix has an antisymmetric part");
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r <= c; ++r) {
      double v = r == c ? m(r, c) : 0.5 * (m(r, c) + m(c, r));
      if (v != 0.0) s.entries_.push_back({static_cast<int>(r), static_cast<int>(c), v});
    }
  return s;
}

void SymSparse::add(int row, int col, double value) {
  if (row > col) std::swap(row, col);
  if (value != 0.0) entries_.push_back({row, col, value});
}

double SymSparse::dot(const RMatrix& x) const {
  double s = 0.0;
  for (const auto& e : entries_)
    s += e.row == e.col ? e.value * x(e.row, e.row) : e.value * (x(e.row, e.col) + x(e.col, e.row));
  return s;
}

void SymSparse::add_to(RMatrix& dst, double scale) const {
  for (const auto& e : entries_) {
    dst(e.row, e.col) += scale * e.value;
    if (e.row != e.col) dst(e.col, e.row) += scale * e.value;
  }
}

RMatrix SymSparse::dense(int n) const {
  RMatrix m = RMatrix::Zero(n, n);
  add_to(m, 1.0);
  return m;
}

double SymSparse::frobenius() const {
  // Duplicate entries are rare; go through a map to be exact.
  std::map<std::pair<int, int>, double> acc;
  for (const auto& e : entries_) acc[{e.row, e.col}] += e.value;
  double s = 0.0;
  for (const auto& [k, v] : acc) s += (k.first == k.second ? 1.0 : 2.0) * v * v;
  return std::sqrt(s);
}

int SdpProblem::add_block(std::string name, int dim) {
  blocks.push_back({std::move(name), dim});
  return static_cast<int>(blocks.size()) - 1;
}

void SdpProblem::validate() const {
  auto check_term = [&](const Term& t) {
    if (t.block < 0 || t.block >= static_cast<int>(blocks.size()))
      throw DimensionError("term references an unknown block");
    int n = blocks[t.block].dim;
    for (const auto& e : t.matrix.entries())
      if (e.row < 0 || e.col >= n || e.row > e.col)
        throw DimensionError("coefficient entry outside its block");
    for (const auto& e : t.matrix.entries())
      if (!std::isfinite(e.value)) throw ValueError("non-finite coefficient");
  };
  for (const auto& b : blocks)
    if (b.dim <= 0) throw DimensionError("block dimension must be positive");
  for (const auto& t : objective) check_term(t);
  for (const auto& c : constraints) {
    for (const auto& t : c.terms) check_term(t);
    if (!std::isfinite(c.rhs)) throw ValueError("non-finite right-hand side");
  }
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::Unbounded: return "unbounded";
    case SdpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

RMatrix embed_complex(const CMatrix& h) {
  const Eigen::Index n = h.rows();
  RMatrix r(2 * n, 2 * n);
  r.topLeftCorner(n, n) = h.real();
  r.bottomRightCorner(n, n) = h.real();
  r.topRightCorner(n, n) = -h.imag();
  r.bottomLeftCorner(n, n) = h.imag();
  return r;
}

namespace {

struct Data {
  int m = 0;
  std::vector<int> n;
  RVector b;
  std::vector<RMatrix> c;
  // per block: (constraint index, coefficient)
  std::vector<std::vector<std::pair<int, SymSparse>>> touch;
  double norm_b = 0, norm_c = 0;
};

Data prepare(const SdpProblem& p) {
  Data d;
  d.m = static_cast<int>(p.constraints.size());
  for (const auto& blk : p.blocks) d.n.push_back(blk.dim);
  const int nb = static_cast<int>(d.n.size());
  d.b.resize(d.m);
  d.c.resize(nb);
  for (int k = 0; k < nb; ++k) d.c[k] = RMatrix::Zero(d.n[k], d.n[k]);
  for (const auto& t : p.objective) t.matrix.add_to(d.c[t.block], 1.0);
  d.touch.resize(nb);
  for (int i = 0; i < d.m; ++i) {
    const auto& con = p.constraints[i];
    d.b(i) = con.rhs;
    std::map<int, SymSparse> merged;
    for (const auto& t : con.terms)
      for (const auto& e : t.matrix.entries()) merged[t.block].add(e.row, e.col, e.value);
    for (auto& [blk, s] : merged)
      if (!s.empty()) d.touch[blk].push_back({i, std::move(s)});
  }
  d.norm_b = d.b.norm();
  double nc = 0;
  for (const auto& c : d.c) nc += c.squaredNorm();
  d.norm_c = std::sqrt(nc);
  return d;
}

RVector amap(const Data& d, const std::vector<RMatrix>& x) {
  RVector r = RVector::Zero(d.m);
  for (size_t k = 0; k < d.touch.size(); ++k)
    for (const auto& [i, s] : d.touch[k]) r(i) += s.dot(x[k]);
  return r;
}

std::vector<RMatrix> aadj(const Data& d, const RVector& y) {
  std::vector<RMatrix> out(d.n.size());
  for (size_t k = 0; k < d.n.size(); ++k) {
    out[k] = RMatrix::Zero(d.n[k], d.n[k]);
    for (const auto& [i, s] : d.touch[k]) s.add_to(out[k], y(i));
  }
  return out;
}

double inner(const std::vector<RMatrix>& a, const std::vector<RMatrix>& b) {
  double s = 0;
  for (size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double norm(const std::vector<RMatrix>& a) { return std::sqrt(inner(a, a)); }

struct Scaling {
  RMatrix lx;    // chol(X)
  RMatrix lz;    // chol(Z)
  RMatrix g;     // W = G G^T, G^T Z G = G^{-1} X G^{-T} = diag(d)
  RMatrix ginv;
  RMatrix w;
  RVector d;
};

bool nt_scaling(const RMatrix& x, const RMatrix& z, Scaling& s) {
  Eigen::LLT<RMatrix> cx(x), cz(z);
  if (cx.info() != Eigen::Success || cz.info() != Eigen::Success) return false;
  s.lx = cx.matrixL();
  s.lz = cz.matrixL();
  RMatrix k = s.lz.transpose() * s.lx;
  Eigen::JacobiSVD<RMatrix> svd(k, Eigen::ComputeFullU | Eigen::ComputeFullV);
  s.d = svd.singularValues();
  if (s.d.minCoeff() <= 0 || !s.d.allFinite()) return false;
  RVector isq = s.d.cwiseSqrt().cwiseInverse();
  RVector sq = s.d.cwiseSqrt();
  s.g = s.lx * svd.matrixV() * isq.asDiagonal();
  RMatrix linv = s.lx.triangularView<Eigen::Lower>().solve(RMatrix::Identity(x.rows(), x.rows()));
  s.ginv = sq.asDiagonal() * svd.matrixV().transpose() * linv;
  s.w = s.g * s.g.transpose();
  return true;
}

// Largest step a in (0, inf] with x + a dx >= 0, given chol(x).
double max_step(const RMatrix& l, const RMatrix& dx) {
  RMatrix t = l.triangularView<Eigen::Lower>().solve(dx);
  RMatrix u = l.triangularView<Eigen::Lower>().solve(t.transpose());
  u = (u + u.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(u, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues()(0);
  if (lmin >= 0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

RMatrix schur(const Data& d, const std::vector<Scaling>& sc) {
  RMatrix m = RMatrix::Zero(d.m, d.m);
  for (size_t k = 0; k < d.n.size(); ++k) {
    const auto& w = sc[k].w;
    const int n = d.n[k];
    const auto& touch = d.touch[k];
    for (size_t a = 0; a < touch.size(); ++a) {
      const auto& [i, si] = touch[a];
      RMatrix p;
      if (2 * si.entries().size() < static_cast<size_t>(n)) {
        p = RMatrix::Zero(n, n);
        for (const auto& e : si.entries()) {
          if (e.row == e.col) {
            p.noalias() += e.value * w.col(e.row) * w.row(e.row);
          } else {
            p.noalias() += e.value * w.col(e.row) * w.row(e.col);
            p.noalias() += e.value * w.col(e.col) * w.row(e.row);
          }
        }
      } else {
        p = w * si.dense(n) * w;
      }
      for (size_t c = a; c < touch.size(); ++c) {
        const auto& [j, sj] = touch[c];
        double v = sj.dot(p);
        m(i, j) += v;
        if (c != a) m(j, i) += v;
      }
    }
  }
  return m;
}

struct Factor {
  Eigen::LLT<RMatrix> llt;
  Eigen::LDLT<RMatrix> ldlt;
  bool use_ldlt = false;
  RVector solve(const RVector& r) const {
    if (use_ldlt) return ldlt.solve(r);
    return llt.solve(r);
  }
};

bool factor(RMatrix m, Factor& f) {
  f.llt.compute(m);
  if (f.llt.info() == Eigen::Success) {
    f.use_ldlt = false;
    return true;
  }
  double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  for (double reg = 1e-14; reg <= 1e-8; reg *= 100) {
    RMatrix mr = m;
    mr.diagonal().array() += reg * scale;
    f.llt.compute(mr);
    if (f.llt.info() == Eigen::Success) {
      f.use_ldlt = false;
      return true;
    }
  }
  f.ldlt.compute(m);
  f.use_ldlt = true;
  return f.ldlt.info() == Eigen::Success;
}

struct Direction {
  std::vector<RMatrix> dx, dz;
  RVector dy;
};

Direction solve_direction(const Data& d, const std::vector<Scaling>& sc, const Factor& f,
                          const RVector& rp, const std::vector<RMatrix>& rd,
                          const std::vector<RMatrix>& rc) {
  const size_t nb = d.n.size();
  std::vector<RMatrix> wrdw(nb);
  for (size_t k = 0; k < nb; ++k) wrdw[k] = sc[k].w * rd[k] * sc[k].w;
  RVector rhs = rp - amap(d, rc) + amap(d, wrdw);
  Direction dir;
  dir.dy = f.solve(rhs);
  auto ady = aadj(d, dir.dy);
  dir.dz.resize(nb);
  dir.dx.resize(nb);
  for (size_t k = 0; k < nb; ++k) {
    dir.dz[k] = rd[k] - ady[k];
    RMatrix t = rc[k] - sc[k].w * dir.dz[k] * sc[k].w;
    dir.dx[k] = (t + t.transpose()) / 2.0;
    dir.dz[k] = (dir.dz[k] + dir.dz[k].transpose()) / 2.0;
  }
  // Refinement against A(dX) = rp. Updating dX and dZ together keeps
  // dX + W dZ W = Rc intact.
  for (int pass = 0; pass < 6; ++pass) {
    RVector e = rp - amap(d, dir.dx);
    if (e.norm() <= 1e-15 * (1 + rp.norm())) break;
    RVector dy = f.solve(e);
    auto a = aadj(d, dy);
    dir.dy += dy;
    for (size_t k = 0; k < nb; ++k) {
      RMatrix t = sc[k].w * a[k] * sc[k].w;
      dir.dx[k] += (t + t.transpose()) / 2.0;
      dir.dz[k] -= a[k];
    }
  }
  return dir;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SolverOptions& opt) {
  problem.validate();
  Data d = prepare(problem);
  const size_t nb = d.n.size();
  SdpSolution sol;
  int ntot = 0;
  for (int n : d.n) ntot += n;

  // Constraints without coefficients are either trivially satisfied or infeasible.
  std::vector<bool> empty_row(d.m, true);
  for (const auto& t : d.touch)
    for (const auto& [i, s] : t) empty_row[i] = false;
  for (int i = 0; i < d.m; ++i)
    if (empty_row[i] && std::abs(d.b(i)) > opt.feas_tol * (1 + d.norm_b)) {
      sol.status = SdpStatus::Infeasible;
      sol.y = RVector::Zero(d.m);
      sol.y(i) = d.b(i) > 0 ? 1.0 : -1.0;
      return sol;
    }

  std::vector<RMatrix> x(nb), z(nb);
  RVector y = RVector::Zero(d.m);
  for (size_t k = 0; k < nb; ++k) {
    const double n = d.n[k];
    double xi = std::max(10.0, std::sqrt(n));
    double eta = std::max(10.0, std::sqrt(n));
    double amax = 0;
    for (const auto& [i, s] : d.touch[k]) {
      double fa = s.frobenius();
      amax = std::max(amax, fa);
      xi = std::max(xi, std::sqrt(n) * (1 + std::abs(d.b(i))) / (1 + fa));
    }
    eta = std::max(eta, (1 + std::max(amax, d.c[k].norm())) / std::sqrt(n));
    x[k] = xi * RMatrix::Identity(d.n[k], d.n[k]);
    z[k] = eta * RMatrix::Identity(d.n[k], d.n[k]);
  }

  auto finish = [&](SdpStatus st, int iters) {
    sol.status = st;
    sol.x = x;
    sol.z = z;
    sol.y = y;
    sol.iterations = iters;
    sol.primal_value = inner(d.c, x);
    sol.dual_value = d.b.dot(y);
    RVector rp = d.b - amap(d, x);
    auto ady = aadj(d, y);
    double rd = 0;
    for (size_t k = 0; k < nb; ++k) rd += (d.c[k] - z[k] - ady[k]).squaredNorm();
    sol.primal_residual = rp.norm() / (1 + d.norm_b);
    sol.dual_residual = std::sqrt(rd) / (1 + d.norm_c);
    sol.gap = std::abs(sol.primal_value - sol.dual_value) / (1 + std::abs(sol.primal_value));
    sol.complementarity = inner(x, z) / (1 + std::abs(sol.primal_value));
    return sol;
  };

  std::vector<Scaling> sc(nb);
  // Best iterate seen, scored by the worst measure relative to its tolerance.
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<RMatrix> best_x, best_z;
  RVector best_y;
  int best_iter = 0;
  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    RVector rp = d.b - amap(d, x);
    auto ady = aadj(d, y);
    std::vector<RMatrix> rd(nb);
    for (size_t k = 0; k < nb; ++k) rd[k] = d.c[k] - z[k] - ady[k];
    double pobj = inner(d.c, x), dobj = d.b.dot(y);
    double relp = rp.norm() / (1 + d.norm_b);
    double reld = norm(rd) / (1 + d.norm_c);
    double xz = inner(x, z);
    double gap = std::abs(pobj - dobj) / (1 + std::abs(pobj));
    double compl_ = xz / (1 + std::abs(pobj));
    if (opt.verbose)
      std::fprintf(stderr, "%3d pobj %+.10e dobj %+.10e relp %.2e reld %.2e gap %.2e compl %.2e\n",
                   iter, pobj, dobj, relp, reld, gap, compl_);
    if (relp <= opt.feas_tol && reld <= opt.feas_tol && gap <= opt.gap_tol &&
        compl_ <= opt.gap_tol)
      return finish(SdpStatus::Optimal, iter);
    const double score = std::max({relp / opt.feas_tol, reld / opt.feas_tol, gap / opt.gap_tol,
                                   std::abs(compl_) / opt.gap_tol});
    if (score < best_score) {
      best_score = score;
      best_x = x;
      best_z = z;
      best_y = y;
      best_iter = iter;
    }

    // Farkas ray for the primal: b^T y > 0 with -A*(y) >= 0.
    if (dobj > opt.feas_tol * (1 + y.norm())) {
      bool ray = true;
      for (size_t k = 0; k < nb && ray; ++k) {
        RMatrix t = -ady[k] / dobj;
        Eigen::SelfAdjointEigenSolver<RMatrix> es(t, Eigen::EigenvaluesOnly);
        ray = es.eigenvalues()(0) >= -opt.feas_tol;
      }
      if (ray || dobj > opt.divergence * (1 + d.norm_b)) {
        finish(SdpStatus::Infeasible, iter);
        sol.y = y / dobj;
        return sol;
      }
    }
    if (-pobj > opt.divergence * (1 + d.norm_c) && relp <= opt.feas_tol)
      return finish(SdpStatus::Unbounded, iter);
    if (iter == opt.max_iter) break;

    bool ok = true;
    for (size_t k = 0; k < nb && ok; ++k) ok = nt_scaling(x[k], z[k], sc[k]);
    if (!ok) break;
    Factor f;
    if (!factor(schur(d, sc), f)) break;

    const double mu = xz / ntot;
    std::vector<RMatrix> rc(nb);
    for (size_t k = 0; k < nb; ++k) rc[k] = -x[k];
    Direction aff = solve_direction(d, sc, f, rp, rd, rc);
    if (!aff.dy.allFinite()) break;
    double ap = 1.0, ad = 1.0;
    for (size_t k = 0; k < nb; ++k) {
      ap = std::min(ap, max_step(sc[k].lx, aff.dx[k]));
      ad = std::min(ad, max_step(sc[k].lz, aff.dz[k]));
    }
    double xz_aff = 0;
    for (size_t k = 0; k < nb; ++k)
      xz_aff += (x[k] + ap * aff.dx[k]).cwiseProduct(z[k] + ad * aff.dz[k]).sum();
    double sigma = std::clamp(std::pow(std::max(xz_aff, 0.0) / xz, 3.0), 0.0, 1.0);

    for (size_t k = 0; k < nb; ++k) {
      const auto& s = sc[k];
      RMatrix dxs = s.ginv * aff.dx[k] * s.ginv.transpose();
      RMatrix dzs = s.g.transpose() * aff.dz[k] * s.g;
      RMatrix r = -0.5 * (dxs * dzs + dzs * dxs);
      r.diagonal().array() += sigma * mu;
      r.diagonal() -= s.d.cwiseAbs2();
      const int n = d.n[k];
      RMatrix sol_l(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sol_l(i, j) = 2.0 * r(i, j) / (s.d(i) + s.d(j));
      rc[k] = s.g * sol_l * s.g.transpose();
    }
    Direction dir = solve_direction(d, sc, f, rp, rd, rc);
    if (!dir.dy.allFinite()) break;
    double mp = std::numeric_limits<double>::infinity(), md = mp;
    for (size_t k = 0; k < nb; ++k) {
      mp = std::min(mp, max_step(sc[k].lx, dir.dx[k]));
      md = std::min(md, max_step(sc[k].lz, dir.dz[k]));
    }
    double gamma = std::min(0.99, 0.9 + 0.09 * std::min({1.0, mp, md}));
    ap = std::min(1.0, gamma * mp);
    ad = std::min(1.0, gamma * md);
    if (ap < 1e-12 && ad < 1e-12) break;
    for (size_t k = 0; k < nb; ++k) {
      x[k] += ap * dir.dx[k];
      z[k] += ad * dir.dz[k];
      x[k] = (x[k] + x[k].transpose()) / 2.0;
      z[k] = (z[k] + z[k].transpose()) / 2.0;
    }
    y += ad * dir.dy;
    sol.iterations = iter + 1;
  }
  const int iters = sol.iterations;
  if (best_score <= opt.stall_factor) {
    x = best_x;
    z = best_z;
    y = best_y;
  }
  finish(SdpStatus::NumericalFailure, iters);
  if (best_score <= opt.stall_factor) {
    if (opt.verbose) std::fprintf(stderr, "stalled; using iterate %d (score %.2f)\n", best_iter, best_score);
    sol.status = SdpStatus::Optimal;
    sol.reduced_accuracy = best_score > 1;
  }
  return sol;
}

KktReport kkt_report(const SdpProblem& problem, const SdpSolution& s) {
  Data d = prepare(problem);
  KktReport r{};
  RVector rp = d.b - amap(d, s.x);
  auto ady = aadj(d, s.y);
  double rd = 0;
  r.min_eig_x = std::numeric_limits<double>::infinity();
  r.min_eig_z = r.min_eig_x;
  for (size_t k = 0; k < d.n.size(); ++k) {
    rd += (d.c[k] - s.z[k] - ady[k]).squaredNorm();
    Eigen::SelfAdjointEigenSolver<RMatrix> ex(s.x[k], Eigen::EigenvaluesOnly),
        ez(s.z[k], Eigen::EigenvaluesOnly);
    r.min_eig_x = std::min(r.min_eig_x, ex.eigenvalues()(0));
    r.min_eig_z = std::min(r.min_eig_z, ez.eigenvalues()(0));
  }
  r.primal_residual = rp.norm() / (1 + d.norm_b);
  r.dual_residual = std::sqrt(rd) / (1 + d.norm_c);
  double pobj = inner(d.c, s.x);
  r.complementarity = inner(s.x, s.z) / (1 + std::abs(pobj));
  return r;
}

}  // namespace pidkit::sdp
