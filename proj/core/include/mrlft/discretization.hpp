#pragma once

#include <string>
#include <vector>

#include "mrlft/state_space.hpp"
#include "mrlft/uncertain_ss.hpp"

namespace mrlft {

// Method used to turn the continuous-time uncertain plant into a
// discrete-time one while keeping the LFT structure rational in the
// uncertain parameters.
enum class DiscretizationMethod {
  RationalApprox,  // resolvent-based update with certified error channels
  Tustin,          // bilinear substitution, no error channels
  FullZoh          // matrix exponential of the whole realization, no error channels
};

// How the discretization error bound is obtained.
enum class ErrorBoundMethod {
  VertexApprox,         // leading series term maximized over box vertices
  GridSampled,          // exact error factor sampled on a Latin hypercube
  SeriesTailCertified   // termwise triangle-inequality series plus tail, certified
};

struct ErrorBoundReport {
  double bound = 0.0;               // radius of the error ball actually used
  ErrorBoundMethod method = ErrorBoundMethod::SeriesTailCertified;
  int order = 1;
  bool certified = false;
  int truncation_order = 0;         // number of series terms summed
  double tail_bound = 0.0;          // certified remainder after truncation
  double vertex_value = 0.0;        // leading-term vertex approximation, for reference
};

struct PadeOptions {
  ErrorBoundMethod bound_method = ErrorBoundMethod::SeriesTailCertified;
  int grid_samples = 200;           // used by GridSampled
  unsigned seed = 12345;            // used by GridSampled
  double drop_tol = 1e-14;          // epsilon channels dropped when bound <= drop_tol
  bool strict_affine_check = false; // error instead of warn when A(delta) is not affine
};

struct PadeResult {
  UncertainStateSpace sys;          // discrete-time model, epsilon channels normalized to unit ball
  ErrorBoundReport report;
};

// Matrix exponential.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// Exact zero-order-hold discretization of a certain system via the
// augmented-matrix exponential. Inputs are held constant over the step.
StateSpaceModel zoh_exact(const StateSpaceModel& sys, double ts);

// Exact discretization error factor for the order-1 or order-2 rational
// update: De = Qn(TA) * S(TA) - I where S(X) = sum X^k/(k+1)!,
// Q1(X) = I - X/2 and Q2(X) = I - X/2 + X^2/12. Substituting this value
// into the rational model reproduces the exact ZOH update.
Eigen::MatrixXd delta_eps_exact(const Eigen::MatrixXd& a, double ts, int order);

// Bound on the spectral norm of delta_eps_exact over the unit parameter box
// of `sys` (all blocks must be real scalars). SeriesTailCertified returns a
// certified overbound; VertexApprox returns the leading-term approximation;
// GridSampled returns an observed maximum.
ErrorBoundReport error_bound(const UncertainStateSpace& sys, double ts, int order,
                             ErrorBoundMethod method, const PadeOptions& opts = {});

// Rational (resolvent-based) discretization of an uncertain plant with
// certified error channels. The update is
//   x+ = x + T (I + De) Qn(TA)^-1 (A x + B w)
// realized so the plant structure appears once (order 1) or twice (order 2)
// and De appears as one (order 1) or two tied (order 2) full blocks, each
// normalized to the unit ball by the certified bound. Value outputs sample
// the plant outputs at the step instants.
PadeResult pade_discretize(const UncertainStateSpace& sys, double ts, int order,
                           const PadeOptions& opts = {});

// Bilinear substitution applied to the whole realization. Exact in the
// uncertainty structure (one copy), no error channels, all outputs read the
// trapezoidal midpoint state.
UncertainStateSpace tustin_discretize(const UncertainStateSpace& sys, double ts);

// Matrix exponential of the whole realization with the uncertainty channels
// treated as held inputs. Exact only at the nominal point; no error channels.
UncertainStateSpace full_zoh_discretize(const UncertainStateSpace& sys, double ts);

// One scalar uncertainty entry of a reduced error structure.
struct EpsEntry {
  int row = 0;
  int col = 0;
  double scale = 0.0;  // |E(row,col)| <= scale over the covered set
};

struct EpsReduction {
  BlockStructure structure;        // one real scalar block per retained entry
  std::vector<EpsEntry> entries;
  bool fallback_full = false;      // true when reduction failed and a full block is kept
};

// Replaces a full error block by independent scalar entries. Support is the
// set of entries exceeding support_tol * bound in any sample; each entry is
// normalized by its per-sample maximum magnitude, so every sample lies in
// the reduced set. `prefix` names the scalar parameters (prefix_r_c).
EpsReduction reduce_eps_structure(const std::vector<Eigen::MatrixXd>& eps_samples,
                                  double bound, const std::string& prefix = "eps",
                                  double support_tol = 1e-9);

}  // namespace mrlft
