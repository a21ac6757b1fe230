// Alternating lower bound on the guessing probability reachable from a device
// through free simulations.
#pragma once

#include <cstdint>
#include <vector>

#include "pidkit/games.hpp"
#include "pidkit/simulation.hpp"

namespace pidkit {

struct SeesawOptions {
  int restarts = 8;
  int iters = 50;
  double tol = 1e-8;
  int d_side = 0;  // 0: din * dout of the source device
  int n_k = 2;
  int n_l = 2;
  std::uint64_t seed = 1;
  sdp::SolverOptions solver{1e-9, 1e-9, 200, 1e8};
};

struct SeesawResult {
  double value = 0;  // game_value of apply_free_simulation(strategy, p)
  FreeSimulation strategy;
  std::vector<double> trace;  // best value after each sweep of the winning restart
  int restart = -1;
};

// Restart 0 starts from the device itself when the game shape allows it,
// restart 1 from the optimal simple strategy, the rest from random simulations.
SeesawResult seesaw_pguess(const Pid& p, const GameSpec& g, const SeesawOptions& opts = {});

// One improvement run from a given simulation; values never decrease.
SeesawResult seesaw_refine(const Pid& p, const GameSpec& g, FreeSimulation start, const SeesawOptions& opts);

}  // namespace pidkit
