// Simplicity of programmable instrument devices, compatibility of measurement
// devices, and the robustness of incompatibility with its dual witness.
#pragma once

#include <optional>
#include <vector>

#include "pidkit/devices.hpp"
#include "pidkit/sdp.hpp"

namespace pidkit {

struct CompatOptions {
  sdp::SolverOptions solver{1e-9, 1e-9, 200, 1e8};
  double simple_tol = 1e-6;    // robustness at or below this counts as zero
  double residual_tol = 1e-7;  // acceptance threshold for a mother certificate
};

// Mother instrument indexed by deterministic strategies: the device equals
// sum_{lambda(x0)=x1} G_lambda.
struct SimplicityCertificate {
  int n_programs = 0;
  int n_outcomes = 0;
  std::vector<std::vector<int>> strategies;
  Instrument mother;
  double residual = 0;  // max entry deviation from the device blocks
  double mother_defect = 0;
};

Pid assemble(const SimplicityCertificate& c);
double certificate_residual(const SimplicityCertificate& c, const Pid& p);

// alpha[x0][x1] on A0 (x) A1, beta[x0] on A0. Witnesses non-simplicity when
// value = sum Tr[alpha J] / (d |X0|) - 1 > 0.
struct DualWitness {
  std::vector<std::vector<CMatrix>> alpha;
  std::vector<CMatrix> beta;
  double value = 0;
};

// Largest violation of alpha >= 0, sum Tr beta = d|X0| and
// sum_x0 (beta (x) I - alpha_{lambda(x0)|x0}) >= 0 for every lambda.
double dual_feasibility_defect(const DualWitness& w, int din, int dout);
double witness_value(const DualWitness& w, const Pid& p);

enum class Verdict { Simple, NonSimple };

struct SimplicityResult {
  Verdict verdict = Verdict::NonSimple;
  std::optional<SimplicityCertificate> certificate;
  std::optional<DualWitness> witness;
  double roi = 0;
};

struct RoiPrimal {
  sdp::SdpStatus status = sdp::SdpStatus::NumericalFailure;
  double r = 0;
  Pid noise;        // Upsilon with (Lambda + r Upsilon)/(1+r) simple
  Pid simple_mix;   // (Lambda + r Upsilon)/(1+r)
  SimplicityCertificate mix_certificate;
  int iterations = 0;
};

struct RoiDual {
  sdp::SdpStatus status = sdp::SdpStatus::NumericalFailure;
  double r = 0;
  DualWitness witness;
  int iterations = 0;
};

struct RoiCertificate {
  double r = 0;
  Pid noise;
  Pid simple_mix;
  SimplicityCertificate mix_certificate;
  DualWitness witness;
  double gap = 0;  // |primal - dual|
};

SimplicityResult is_simple_pid(const Pid& p, const CompatOptions& opts = {});
RoiPrimal roi_primal(const Pid& p, const CompatOptions& opts = {});
RoiDual roi_dual(const Pid& p, const CompatOptions& opts = {});
RoiCertificate roi(const Pid& p, const CompatOptions& opts = {});

// Parent POVM indexed by deterministic strategies.
struct CompatibilityCertificate {
  int n_programs = 0;
  int n_outcomes = 0;
  std::vector<std::vector<int>> strategies;
  Povm parent;
  double residual = 0;
};

struct CompatibilityResult {
  bool compatible = false;
  std::optional<CompatibilityCertificate> certificate;
  std::optional<DualWitness> witness;
  double roi = 0;
};

CompatibilityResult is_compatible_pmd(const Pmd& m, const CompatOptions& opts = {});

struct RoiPmd {
  double r = 0;
  double dual = 0;
  DualWitness witness;
};
RoiPmd roi_pmd(const Pmd& m, const CompatOptions& opts = {});

// E = sum_lambda G_lambda (x) |lambda><lambda| : A0 -> A1 (x) E, together with
// the read-out PMD sum_{lambda(x0)=x1} |lambda><lambda| that steers it back.
ChoiMatrix build_incoherent_extension(const SimplicityCertificate& c);
Pmd incoherent_readout(const SimplicityCertificate& c);

}  // namespace pidkit
