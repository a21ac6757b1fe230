// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "pidkit/games.hpp"
#include "pidkit/random.hpp"
#include "pidkit/sem.hpp"
#include "pidkit/simulation.hpp"

using namespace pidkit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

PidSampling steerable() {
  PidSampling s;
  s.effect_rank = 1;
  return s;
}

std::vector<CMatrix> z_basis() { return {basis_projector(2, 0), basis_projector(2, 1)}; }
std::vector<CMatrix> x_basis() {
  CMatrix p(2, 2), m(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  m << 0.5, -0.5, -0.5, 0.5;
  return {p, m};
}

// The 200-device suite shared by criteria 1 and 2.
struct SuiteEntry {
  Pid pid;
  bool constructed_simple;
};

std::vector<SuiteEntry> suite() {
  std::vector<SuiteEntry> s;
  for (std::uint64_t i = 0; i < 100; ++i) s.push_back({random_simple_pid(2, 2, 2, 2, 50000 + i).pid, true});
  for (std::uint64_t i = 0; i < 100; ++i) s.push_back({random_pid(2, 2, 2, 2, 60000 + i, steerable()), false});
  return s;
}

Outcome faithfulness(const std::vector<SuiteEntry>& devices) {
  int agree = 0, simple_ok = 0, nonsimple = 0;
  for (const auto& e : devices) {
    bool simple = is_simple_pid(e.pid).verdict == Verdict::Simple;
    bool zero = roi_primal(e.pid).r <= 1e-6;
    bool compatible = is_compatible_pmd(sem(e.pid).pmd).compatible;
    agree += simple == zero && zero == compatible;
    simple_ok += !e.constructed_simple || simple;
    nonsimple += !simple;
  }
  const int n = static_cast<int>(devices.size());
  return {agree == n && simple_ok == n,
          std::to_string(agree) + "/" + std::to_string(n) + " agree, " + std::to_string(nonsimple) +
              " non-simple, constructed simple recognised " + std::to_string(simple_ok - 100) + "/100"};
}

Outcome duality(const std::vector<SuiteEntry>& devices) {
  double worst = 0;
  for (const auto& e : devices) worst = std::max(worst, std::abs(roi_primal(e.pid).r - roi_dual(e.pid).r));
  return {worst <= 1e-6, fmt("max |primal - dual| = %.3g", worst)};
}

Outcome benchmark() {
  CMatrix phi = CMatrix::Zero(4, 4);
  phi(0, 0) = phi(0, 3) = phi(3, 0) = phi(3, 3) = 0.5;
  Pid a = steer(ChoiMatrix(1, 4, phi), 2, Pmd(2, {x_basis(), z_basis()}));
  const double target = std::sqrt(2.0) - 1;
  double rp = roi_primal(a).r, rd = roi_dual(a).r, rs = roi_pmd(sem(a).pmd).r;
  bool pass = std::abs(rp - target) <= 2e-4 && std::abs(rd - target) <= 2e-4 && std::abs(rs - target) <= 2e-4;
  char buf[200];
  std::snprintf(buf, sizeof buf, "primal %.6f dual %.6f sem %.6f, target %.6f (3-2sqrt2 = %.6f)", rp, rd, rs,
                target, 3 - 2 * std::sqrt(2.0));
  return {pass, buf};
}

Outcome simulations() {
  int valid = 0, simple_kept = 0;
  double seq = 0, par = 0, mix = 0;
  const int n = 500;
  for (int t = 0; t < n; ++t) {
    std::uint64_t seed = 70000 + 10 * t;
    SimulationShape s1;
    s1.n_y0 = 2 + t % 2;
    s1.n_y1 = 2 + (t / 2) % 2;
    s1.d_side = 1 + t % 3;
    FreeSimulation f = random_free_simulation(2, 2, 2, 2, s1, seed);
    Pid p = random_pid(2, 2, 2, 2, seed + 1, steerable());
    Pid fp = apply_free_simulation(f, p);
    valid += validate_pid(fp).valid;
    simple_kept +=
        is_simple_pid(apply_free_simulation(f, random_simple_pid(2, 2, 2, 2, seed + 2).pid)).verdict ==
        Verdict::Simple;

    FreeSimulation g = random_free_simulation(2, 2, s1.n_y0, s1.n_y1, {}, seed + 3);
    seq = std::max(seq, pid_distance(apply_free_simulation(compose_sequential(g, f), p),
                                     apply_free_simulation(g, fp)));

    FreeSimulation h = random_free_simulation(2, 2, 2, 2, s1, seed + 4);
    const double w = 0.1 + 0.8 * (t % 7) / 6.0;
    Pid hp = apply_free_simulation(h, p);
    Pid expect = scale_mix({{w, &fp}, {1 - w, &hp}});
    mix = std::max(mix, pid_distance(apply_free_simulation(mix_simulations({{w, f}, {1 - w, h}}), p), expect));

    if (t % 5 == 0) {
      Pid q = random_pid(1, 2, 2, 2, seed + 5);
      SimulationShape s2;
      s2.d_b0 = 1;
      FreeSimulation k = random_free_simulation(1, 2, 2, 2, s2, seed + 6);
      par = std::max(par, pid_distance(apply_free_simulation(compose_parallel(f, k), tensor_pid(p, q)),
                                       tensor_pid(fp, apply_free_simulation(k, q))));
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "valid %d/%d, simple kept %d/%d, sequential %.2g parallel %.2g mixture %.2g", valid,
                n, simple_kept, n, seq, par, mix);
  return {valid == n && simple_kept == n && seq <= 1e-9 && par <= 1e-9 && mix <= 1e-9, buf};
}

Outcome reconstruction() {
  double worst = 0;
  int deficient = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    PidSampling opt = steerable();
    opt.kraus_rank = 1 + static_cast<int>(i % 2);
    Pid p = random_pid(2, 2, 2, 2, 80000 + i, opt);
    SemResult s = sem(p);
    deficient += s.rank < p.din() * p.dout();
    worst = std::max(worst, pid_distance(reconstruct_pid(canonical_dilation(s, p.din(), p.dout()), s), p));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "max defect %.3g over 50 devices, %d with rank-deficient marginal", worst,
                deficient);
  return {worst <= 1e-7 && deficient > 0, buf};
}

Outcome robustness_bound() {
  int nonsimple = 0, bad = 0;
  double worst_gap = 0;
  std::uint64_t seed = 90000;
  while (nonsimple < 20) {
    Pid p = random_pid(2, 2, 2, 2, seed++, steerable());
    if (roi_primal(p).r <= 1e-6) continue;
    ++nonsimple;
    BoundReport r = verify_robustness_bound(p, {8, 64, 512});
    double rel = 1 - r.points.back().ratio / (1 + r.roi);
    worst_gap = std::max(worst_gap, rel);
    bad += !(r.monotone && r.cap_violations == 0 && rel <= 0.01);
  }
  double simple_dev = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    BoundReport r = verify_robustness_bound(random_simple_pid(2, 2, 2, 2, 91000 + i).pid, {8, 64, 512});
    for (const auto& pt : r.points) simple_dev = std::max(simple_dev, std::abs(pt.ratio - 1));
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d/20 non-simple devices off, worst shortfall at 512 %.3g%%, simple |ratio-1| %.2g",
                bad, 100 * worst_gap, simple_dev);
  return {bad == 0 && simple_dev <= 1e-5, buf};
}

Outcome sem_monotone() {
  double worst = -1e300;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Pid p = random_pid(2, 2, 2, 2, 100000 + i, steerable());
    SimulationShape shape;
    shape.d_side = 1 + static_cast<int>(i % 3);
    FreeSimulation f = random_free_simulation(2, 2, 2, 2, shape, 110000 + i);
    worst = std::max(worst, sem_monotone_value(apply_free_simulation(f, p)) - sem_monotone_value(p));
  }
  return {worst <= 1e-5, fmt("max increase %.3g", worst)};
}

// Solver suite ---------------------------------------------------------------

RMatrix rand_sym(int n, Rng& rng) {
  RMatrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  return (g + g.transpose()) / 2;
}

RMatrix rand_pd(int n, Rng& rng) {
  RMatrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  return g * g.transpose() / n + 0.1 * RMatrix::Identity(n, n);
}

sdp::SdpProblem random_problem(Rng& rng) {
  using namespace sdp;
  SdpProblem p;
  int nb = 1 + static_cast<int>(rng.uniform() * 3);
  int free_dim = 0;
  for (int b = 0; b < nb; ++b) {
    int n = 1 + static_cast<int>(rng.uniform() * 4);
    p.add_block("b" + std::to_string(b), n);
    free_dim += n * (n + 1) / 2;
  }
  int m = 1 + static_cast<int>(rng.uniform() * std::min(free_dim - 1, 8));
  std::vector<RMatrix> x0, c;
  for (const auto& b : p.blocks) {
    x0.push_back(rand_pd(b.dim, rng));
    c.push_back(rand_pd(b.dim, rng));
  }
  for (int i = 0; i < m; ++i) {
    double y = rng.normal();
    Constraint con;
    for (int b = 0; b < nb; ++b) {
      if (rng.uniform() < 0.3 && b != i % nb) continue;
      RMatrix a = rand_sym(p.blocks[b].dim, rng);
      con.rhs += (a.array() * x0[b].array()).sum();
      c[b] += y * a;
      con.terms.push_back({b, SymSparse::from_dense(a)});
    }
    p.constraints.push_back(std::move(con));
  }
  for (int b = 0; b < nb; ++b) p.objective.push_back({b, SymSparse::from_dense(c[b])});
  return p;
}

double grid_min_state(const RMatrix& c, int steps) {
  double best = 1e300;
  for (int k = 0; k < steps; ++k) {
    double th = 2 * std::numbers::pi * k / steps;
    best = std::min(best, 0.5 * (c(0, 0) * (1 + std::sin(th)) + c(1, 1) * (1 - std::sin(th))) +
                              c(0, 1) * std::cos(th));
  }
  return best;
}

Outcome solver() {
  using namespace sdp;
  Rng rng(120000);
  double kkt = 0, weak = -1e300;
  int optimal = 0;
  for (int t = 0; t < 50; ++t) {
    SdpProblem p = random_problem(rng);
    SdpSolution s = solve(p, {1e-9, 1e-9, 200, 1e8});
    if (s.status != SdpStatus::Optimal) continue;
    ++optimal;
    KktReport k = kkt_report(p, s);
    kkt = std::max({kkt, k.primal_residual, k.dual_residual, k.complementarity, -k.min_eig_x, -k.min_eig_z});
    weak = std::max(weak, s.dual_value - s.primal_value);
  }
  double grid = 0;
  for (int t = 0; t < 20; ++t) {
    RMatrix c1 = rand_sym(2, rng), c2 = rand_sym(2, rng), c3 = rand_sym(2, rng);
    SdpProblem p;
    int b1 = p.add_block("x1", 2), b2 = p.add_block("x2", 2), b3 = p.add_block("x3", 2);
    p.objective = {{b1, SymSparse::from_dense(c1)}, {b2, SymSparse::from_dense(c2)}, {b3, SymSparse::from_dense(c3)}};
    SymSparse id = SymSparse::from_dense(RMatrix::Identity(2, 2));
    p.constraints.push_back({{{b1, id}, {b2, id}}, 1.0});
    p.constraints.push_back({{{b3, id}}, 1.0});
    SdpSolution s = solve(p);
    double g1 = grid_min_state(c1, 20000), g2 = grid_min_state(c2, 20000), g3 = grid_min_state(c3, 20000);
    double best = 1e300;
    for (int k = 0; k <= 1000; ++k) best = std::min(best, k / 1000.0 * g1 + (1 - k / 1000.0) * g2 + g3);
    grid = std::max(grid, s.status == SdpStatus::Optimal ? std::abs(s.primal_value - best) : 1e300);
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%d/50 optimal, max KKT residual %.3g, max dual-primal %.3g, grid gap %.3g", optimal,
                kkt, weak, grid);
  return {optimal == 50 && kkt <= 1e-8 && weak <= 1e-9 && grid <= 1e-4, buf};
}

}  // namespace

int main() {
  std::vector<SuiteEntry> devices = suite();
  std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"faithfulness", [&] { return faithfulness(devices); }},
      {"primal-dual agreement", [&] { return duality(devices); }},
      {"X/Z benchmark value", benchmark},
      {"free simulation suite", simulations},
      {"SEM reconstruction", reconstruction},
      {"witness-game ratios", robustness_bound},
      {"SEM monotone", sem_monotone},
      {"solver suite", solver},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %zu %s: %s: %s (%.1f s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
