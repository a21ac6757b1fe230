// Free simulations between programmable instrument devices.
//
// A simulation turns a source device Lambda (programs x0, outcomes x1,
// A0 -> A1) into a target device (programs y0, outcomes y1, B0 -> B1):
//
//   Gamma_{y1|y0} = sum q(y1|x1,l) p(x0,l|y0,k) K_k o (Lambda_{x1|x0} (x) id_D) o F
#pragma once

#include <cstdint>
#include <vector>

#include "pidkit/compatibility.hpp"

namespace pidkit {

struct FreeSimulation {
  int n_x0 = 0, n_x1 = 0;  // source labels
  int n_y0 = 0, n_y1 = 0;  // target labels
  int d_a0 = 0, d_a1 = 0;  // source systems
  int d_b0 = 0, d_b1 = 0;  // target systems
  int d_side = 1;          // side system D
  ChoiMatrix pre;          // F: B0 -> A0 (x) D
  Instrument post;         // K_k: A1 (x) D -> B1
  ClassicalChannel p;      // p(x0, l | y0, k): row x0*|L| + l, column y0*|K| + k
  ClassicalChannel q;      // q(y1 | x1, l): column x1*|L| + l

  int n_k() const { return post.size(); }
  int n_l() const { return q.n_in() / n_x1; }
  // Largest violation of shape, CPTP or stochasticity requirements.
  double defect() const;
  void check() const;  // throws DimensionError / ValueError
};

FreeSimulation make_simulation(ChoiMatrix pre, Instrument post, ClassicalChannel p,
                               ClassicalChannel q, int d_a0, int d_a1, int n_x0, int n_x1);

Pid apply_free_simulation(const FreeSimulation& f, const Pid& source);

FreeSimulation identity_simulation(int din, int dout, int n_programs, int n_outcomes);

// `second` after `first`.
FreeSimulation compose_sequential(const FreeSimulation& second, const FreeSimulation& first);

// Acts on tensor_pid(a-source, b-source) and yields tensor_pid(a-target, b-target).
FreeSimulation compose_parallel(const FreeSimulation& a, const FreeSimulation& b);

// Convex combination; shapes are padded to a common side dimension and label sets.
FreeSimulation mix_simulations(const std::vector<std::pair<double, FreeSimulation>>& terms);

// Same action with a larger side system or extra unused labels.
FreeSimulation pad_side(const FreeSimulation& f, int d_side);
FreeSimulation pad_k(const FreeSimulation& f, int n_k);
FreeSimulation pad_l(const FreeSimulation& f, int n_l);

// Discards the source and prepares the simple target device described by the
// certificate (a trace-and-reprepare simulation).
FreeSimulation reachability_simulation(int d_a0, int d_a1, int n_x0, int n_x1,
                                       const SimplicityCertificate& target);

struct SimulationShape {
  int n_y0 = 2, n_y1 = 2, d_b0 = 2, d_b1 = 2;
  int d_side = 2, n_k = 2, n_l = 2;
};

FreeSimulation random_free_simulation(int d_a0, int d_a1, int n_x0, int n_x1,
                                      const SimulationShape& shape, std::uint64_t seed);

// Simulation of measurement devices: N_{y1|y0} = sum q p K_k^dagger[M_{x1|x0}].
struct PmdSimulation {
  Instrument instrument;  // K_k from the target system to the source system
  ClassicalChannel p;     // p(x0, l | y0, k)
  ClassicalChannel q;     // q(y1 | x1, l)
  int n_x0 = 0, n_x1 = 0;
};

Pmd apply_pmd_simulation(const PmdSimulation& s, const Pmd& m);

}  // namespace pidkit
