// Non-transient guessing games, post-information games and the witnesses
// built from dual certificates.
#pragma once

#include <optional>
#include <vector>

#include "pidkit/compatibility.hpp"

namespace pidkit {

// Bipartite POVM {M_{m,n}} on C0 (x) C1; a strategy is a device with programs
// m, outcomes n, input C0 and output C1.
struct GameSpec {
  int n_m = 0;
  int n_n = 0;
  int d_ref = 0;  // C0
  int dout = 0;   // C1
  std::vector<std::vector<CMatrix>> effects;  // [m][n]

  double defect() const;  // POVM violation
  void check() const;
};

// (1/d_ref) sum Tr[M_{m,n} J_{n|m}]
double game_value(const GameSpec& g, const Pid& strategy);

struct SimpleOptimum {
  double value = 0;
  SimplicityCertificate strategy;  // optimal simple strategy (strategies map m -> n)
  int n_blocks = 0;                // strategy blocks after merging identical outcomes
};

// Outcomes n with identical effects for a given m are merged before strategies
// are enumerated; the optimum is unchanged.
SimpleOptimum pguess_simple_full(const GameSpec& g, const CompatOptions& opts = {});
double pguess_simple(const GameSpec& g, const CompatOptions& opts = {});

// Witness game from a dual certificate: alpha_{n|m}/c on the real outcomes,
// the remainder split evenly over n_dummy extra outcomes.
GameSpec witness_game(const DualWitness& w, int din, int dout, int n_dummy);
GameSpec witness_game(const RoiCertificate& cert, int din, int dout, int n_dummy);
double witness_norm(const DualWitness& w);  // c = ||sum alpha||_inf

// The device itself as a strategy for a game with extra (never produced) outcomes.
Pid extend_outcomes(const Pid& p, int n_outcomes);

// Smallest n_dummy separating two devices by margin eps in the hyperplane
// construction: floor(2 c d |Y0||Y1| / eps) + 1.
long sufficient_dummy_size(double c, int d, int n_programs, int n_outcomes, double eps);
// Smallest n_dummy with (1+r)/(1 + c/(|X0| n)) >= (1+r)(1 - rel_gap).
long dummy_for_ratio(double c, int n_programs, double rel_gap);

struct BoundPoint {
  int n_dummy = 0;
  double identity_value = 0;  // game value of the device itself
  double seesaw_value = 0;    // 0 when the see-saw is not run
  double pguess_simple = 0;
  double ratio = 0;        // best lower bound on P_guess over pguess_simple
  double lower_bound = 0;  // (1+r) / (1 + c/(|X0| n_dummy))
};

struct BoundReport {
  double roi = 0;
  double dual = 0;
  double c = 0;
  std::vector<BoundPoint> points;
  int cap_violations = 0;  // ratios above 1 + roi + 1e-5
  bool monotone = true;    // ratios nondecreasing along the schedule (1e-7 slack, SDP noise)
};

struct BoundOptions {
  CompatOptions compat;
  bool seesaw = false;
  int seesaw_restarts = 2;
  int seesaw_iters = 10;
  std::uint64_t seed = 1;
};

BoundReport verify_robustness_bound(const Pid& p, const std::vector<int>& schedule,
                                    const BoundOptions& opts = {});

// Post-information game: ensemble sigma_{m,n,l} on the strategy input and a
// POVM {L_l} on its output.
struct PiGameSpec {
  int n_m = 0, n_n = 0;
  int din = 0, dout = 0;
  std::vector<std::vector<std::vector<CMatrix>>> ensemble;  // [m][n][l]
  Povm povm_l;

  int n_l() const { return static_cast<int>(povm_l.effects.size()); }
  double defect() const;  // negativity, trace normalisation and POVM defects
  void check() const;
};

// sum Tr[(sigma^T (x) L_l) J_{n|m}]
double pi_game_value(const PiGameSpec& g, const Pid& strategy);
SimpleOptimum pi_pguess_simple_full(const PiGameSpec& g, const CompatOptions& opts = {});
double pi_pguess_simple(const PiGameSpec& g, const CompatOptions& opts = {});

// J_O[y0][y1] = sum_l mu[y0][y1][l] (x) L_l with minimal Frobenius norm.
struct DualFrame {
  int d0 = 0, d1 = 0;
  std::vector<std::vector<std::vector<CMatrix>>> mu;  // [y0][y1][l] on d0
  double residual = 0;
};

class DualFrameBuilder {
 public:
  // Throws ValueError when L is not informationally complete.
  explicit DualFrameBuilder(const Povm& l);
  DualFrame build(const std::vector<std::vector<CMatrix>>& targets, int d0) const;
  const Povm& povm() const { return l_; }

 private:
  Povm l_;
  RMatrix gram_pinv_;
};

DualFrame ic_dual_frame(const Povm& l, const std::vector<std::vector<CMatrix>>& targets, int d0);

PiGameSpec witness_ensemble(const DualFrame& mu, const Povm& l);

// Normalised tetrahedron POVM on a qubit, the default informationally complete choice.
Povm tetrahedron_povm();

}  // namespace pidkit
