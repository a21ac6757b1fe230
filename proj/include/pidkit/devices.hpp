// Programmable instrument devices, measurement devices and steering.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pidkit/linalg.hpp"

namespace pidkit {

// Column-stochastic table p(out | in).
class ClassicalChannel {
 public:
  ClassicalChannel() = default;
  ClassicalChannel(int n_out, int n_in, const RMatrix& table);

  static ClassicalChannel identity(int n);
  static ClassicalChannel deterministic(int n_out, const std::vector<int>& map);

  int n_in() const { return static_cast<int>(table_.cols()); }
  int n_out() const { return static_cast<int>(table_.rows()); }
  double operator()(int out, int in) const { return table_(out, in); }
  const RMatrix& table() const { return table_; }

  double stochasticity_defect() const;  // max column-sum or negativity violation

 private:
  RMatrix table_;
};

struct Povm {
  int dim = 0;
  std::vector<CMatrix> effects;
  double defect() const;  // max(-min eig, ||sum - I||)
};

// Programmable measurement device: effects[x0][x1] on a dim-dimensional space.
struct Pmd {
  int dim = 0;
  std::vector<std::vector<CMatrix>> effects;

  Pmd() = default;
  Pmd(int dim, std::vector<std::vector<CMatrix>> effects);
  int n_programs() const { return static_cast<int>(effects.size()); }
  int n_outcomes() const { return effects.empty() ? 0 : static_cast<int>(effects[0].size()); }
  double defect() const;
};

struct Instrument {
  int din = 0;
  int dout = 0;
  std::vector<ChoiMatrix> branches;

  Instrument() = default;
  explicit Instrument(std::vector<ChoiMatrix> branches);
  int size() const { return static_cast<int>(branches.size()); }
  ChoiMatrix total() const;
  double defect() const;  // max(cp violation, tp violation)
};

// Programmable instrument device: blocks[x0][x1] is the Choi matrix of the
// instrument branch x1 under program x0.
class Pid {
 public:
  Pid() = default;
  Pid(int din, int dout, std::vector<std::vector<ChoiMatrix>> blocks);

  int din() const { return din_; }
  int dout() const { return dout_; }
  int n_programs() const { return static_cast<int>(blocks_.size()); }
  int n_outcomes() const { return blocks_.empty() ? 0 : static_cast<int>(blocks_[0].size()); }
  const ChoiMatrix& block(int x0, int x1) const { return blocks_[x0][x1]; }
  const std::vector<std::vector<ChoiMatrix>>& blocks() const { return blocks_; }

  // sum_x1 J_{x1|x0}
  ChoiMatrix channel(int x0) const;
  // Average of channel(x0) over programs; equal to each of them for a valid device.
  ChoiMatrix marginal() const;

 private:
  int din_ = 0;
  int dout_ = 0;
  std::vector<std::vector<ChoiMatrix>> blocks_;
};

struct PidValidation {
  bool valid = false;
  double cp_defect = 0;            // max(0, -min eig) over blocks
  double tp_defect = 0;            // max |Tr_out sum_x1 J - I|
  double nonsignaling_defect = 0;  // max trace-norm distance between channels
  std::string message;
};

inline constexpr double kCpTol = 1e-9;
inline constexpr double kTpTol = 1e-8;
inline constexpr double kSignalTol = 1e-8;

PidValidation validate_pid(const Pid& p);

// Lambda_{x1|x0} = Tr_E[(I (x) M_{x1|x0}) E(.)] for a channel E: A0 -> A1 (x) E.
Pid steer(const ChoiMatrix& broadcast, int d_a1, const Pmd& m);

// The device that ignores its program: blocks[x0][x1] = inst.branch(x1).
Pid pid_from_instrument(const Instrument& inst, int n_programs);

// Treats a measurement device as a device with one-dimensional output.
Pid pid_from_pmd(const Pmd& m);

// (p (x) q)_{(x1,y1)|(x0,y0)} with factors ordered (p, q).
Pid tensor_pid(const Pid& p, const Pid& q);

Pid scale_mix(const std::vector<std::pair<double, const Pid*>>& terms);

double pid_distance(const Pid& a, const Pid& b);  // max entry difference over blocks

// Deterministic strategies lambda: X0 -> X1, lexicographic with x0 = 0 most significant.
inline constexpr long kMaxStrategies = 4096;
long num_strategies(int n_programs, int n_outcomes);  // throws when above kMaxStrategies
std::vector<int> strategy(long index, int n_programs, int n_outcomes);

}  // namespace pidkit
