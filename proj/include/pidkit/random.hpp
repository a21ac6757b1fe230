// Seeded sampling of channels, instruments, measurements and devices.
#pragma once

#include <cstdint>

#include "pidkit/devices.hpp"

namespace pidkit {

// Counter-based generator: output k is a SplitMix64 finaliser applied to
// key + k * golden. split() derives an independent child key, so streams can
// be handed to sub-samplers without consuming the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();
  cplx complex_normal();  // E|z|^2 = 1
  Rng split(std::uint64_t stream) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

CMatrix random_gaussian(int rows, int cols, Rng& rng);
// Haar-distributed isometry with rows >= cols.
CMatrix random_isometry(int rows, int cols, Rng& rng);
CMatrix random_unitary(int d, Rng& rng);
CMatrix random_state(int d, int rank, Rng& rng);

ChoiMatrix random_channel(int din, int dout, int kraus_rank, Rng& rng);
Instrument random_instrument(int din, int dout, int n_branches, int kraus_rank, Rng& rng);
Povm random_povm(int d, int n, int rank, Rng& rng);
Pmd random_pmd(int d, int n_programs, int n_outcomes, int rank, Rng& rng);
// Columns drawn uniformly from the probability simplex.
ClassicalChannel random_stochastic(int n_out, int n_in, Rng& rng);

struct PidSampling {
  int env_dim = 0;      // 0: max(2, dout)
  int kraus_rank = 0;   // 0: din
  int effect_rank = 0;  // 0: env_dim
};

// Steers a random broadcast channel A0 -> A1 (x) E with a random PMD on E.
Pid random_pid(int din, int dout, int n_programs, int n_outcomes, std::uint64_t seed,
               const PidSampling& opts = {});

// Mother instrument with a classical post-processing p(x1 | x0, g).
struct SimpleDecomposition {
  Instrument mother;
  ClassicalChannel post;  // outcome x1, input x0 * |G| + g
};

Pid assemble_simple(const SimpleDecomposition& dec, int n_programs);

struct SimpleSample {
  Pid pid;
  SimpleDecomposition decomposition;
};

SimpleSample random_simple_pid(int din, int dout, int n_programs, int n_outcomes,
                               std::uint64_t seed, int n_branches = 3, int kraus_rank = 0);

}  // namespace pidkit
