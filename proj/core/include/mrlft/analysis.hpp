#pragma once

#include <string>
#include <vector>

#include "mrlft/branch_and_bound.hpp"
#include "mrlft/mu.hpp"
#include "mrlft/uncertain_ss.hpp"

namespace mrlft {

enum class Metric {
    StabilityMargin,  // largest uniform uncertainty scaling preserving stability
    WorstCaseHinf,    // peak w -> z gain over the unit uncertainty box
};

const char* to_string(Metric m);

struct AnalysisOptions {
    double threshold = 0.05;     // target relative gap between the bounds
    int max_boxes = 2000;        // refinement budget
    double max_seconds = 120.0;  // wall-clock budget
    double bilinear_k = 1.0;     // frequency-map parameter for explicit conversions
    int jobs = 0;                // 0 = MRLFT_JOBS or hardware default
    unsigned seed = 99u;
    int freq_points = 60;        // base frequency-grid size
    int peak_candidates = 8;     // frequencies refined with the full machinery
    MuOptions mu;                // inner structured-value options
};

struct MuPoint {
    double omega = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct AnalysisResult {
    Metric metric = Metric::StabilityMargin;
    double lower = 0.0;  // certified bound (margin: stable below; gain: achieved)
    double upper = 0.0;  // complementary bound; may be +inf when no witness exists
    double peak_frequency = 0.0;
    DeltaValues critical;           // normalized coordinates of the worst case found
    std::vector<MuPoint> sweep;     // per-frequency bound trace at the root box
    BnbStats stats;
    bool certified = false;         // gap closed within threshold and budget
    // True when the analyzed model carries discretization-error channels
    // (params prefixed "eps"), so the bounds cover the approximation error.
    bool error_channels_included = false;
    std::string note;

    double gap() const;  // relative bound gap, 0 when tight or unbounded
};

struct HinfResult {
    double value = 0.0;
    double peak_omega = 0.0;
    bool finite = true;  // false iff the system is not asymptotically stable
};

// Maps a discrete realization to a continuous one through the bilinear
// transform z = (k + s)/(k - s); transfer values are preserved with the
// frequency map w_c = k tan(w_d Ts / 2). Gains and structured values are
// invariant under the map.
StateSpaceModel bilinear_to_continuous(const StateSpaceModel& sys, double k);
UncertainStateSpace bilinear_to_continuous(const UncertainStateSpace& sys, double k);

// Peak frequency-response gain by imaginary-axis Hamiltonian bisection
// (discrete systems go through the norm-preserving bilinear map). Unstable
// systems report finite = false with an infinite value.
HinfResult hinf_norm(const StateSpaceModel& sys, double tol = 1e-6);

// Bounds on the robust-stability margin: the largest k such that the closed
// loop stays stable for every structured uncertainty of size below k. By
// scaling homogeneity this is the reciprocal of the structured-value peak
// over frequency; `upper` additionally reflects destabilizing parameter
// vertices found by direct eigenvalue search.
AnalysisResult robust_stability_margin(const UncertainStateSpace& sys,
                                       const AnalysisOptions& opts = {});

// Bounds on the worst-case w -> z gain over the unit uncertainty box. The
// upper bound comes from a gain-scaled structured-value test with the
// performance channel appended as a complex full block; the lower bound is
// an achieved gain at a concrete parameter point. Branch-and-bound over the
// parameter box tightens both until threshold or budget. Requires robust
// stability over the box (checked; throws IllPosedError otherwise).
AnalysisResult worst_case_hinf(const UncertainStateSpace& sys,
                               const AnalysisOptions& opts = {});

}  // namespace mrlft
