// Steering-equivalent measurement device of a programmable instrument device
// and the canonical dilation that steers it back.
#pragma once

#include <string>

#include "pidkit/compatibility.hpp"

namespace pidkit {

struct SemResult {
  Pmd pmd;          // effects on A*, coordinates in the support eigenbasis
  int rank = 0;     // dim A*
  CMatrix support;  // (din*dout) x rank eigenvectors of the marginal Choi matrix
  RVector values;   // kept eigenvalues, descending
  double cutoff = 0;
  std::string warning;  // set when the rank decision is close to the cutoff
};

SemResult sem(const Pid& p, double rank_tol = kDefaultRankTol);

// Isometry V: A0 -> A1 (x) A*, rows indexed a * rank + s.
struct CanonicalDilation {
  int din = 0;
  int dout = 0;
  int rank = 0;
  CMatrix v;
  ChoiMatrix channel() const;
};

CanonicalDilation canonical_dilation(const SemResult& s, int din, int dout);
CanonicalDilation canonical_dilation(const Pid& p, double rank_tol = kDefaultRankTol);

// Steers the dilation with the transposed SEM.
Pid reconstruct_pid(const CanonicalDilation& v, const SemResult& s);

double sem_monotone_value(const Pid& p, const CompatOptions& opts = {});

}  // namespace pidkit
