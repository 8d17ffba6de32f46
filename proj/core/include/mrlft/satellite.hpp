#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "mrlft/analysis.hpp"
#include "mrlft/hybrid_sim.hpp"
#include "mrlft/multirate.hpp"

namespace mrlft {

// Flexible-satellite attitude benchmark: first-order actuator, rigid double
// integrator, and a poorly damped flexible mode entering as a positive
// acceleration feedback. Four physical parameters carry relative box
// uncertainty; the normalized params are dJ, da, dw (repeated twice), dx.
struct SatelliteParams {
    double inertia = 1.0;
    double coupling = 0.5;      // flexible-mode acceleration feedback gain
    double damping = 0.001;     // flexible-mode damping ratio
    double mode_freq = 4.0;     // rad/s
    double actuator_tc = 0.2;   // s
    double rel_inertia = 0.1;   // relative half-ranges of the uncertain box
    double rel_coupling = 0.1;
    double rel_mode_freq = 0.1;
    double rel_damping = 0.1;
};

// Two-rate PID split: static derivative gain on the body rate at t1, and a
// discrete proportional + forward-Euler integral path on the angle at q*t1.
struct PidParams {
    double kp = 1.65;
    double ki = 0.5;
    double kd = 2.7;
    double t1 = 0.1;  // s
    int q = 2;        // slow period = q * t1
};

// Continuous uncertain plant, 5 states (actuator, flex position, flex
// velocity, body rate, body angle). Inputs [w_delta | w_p | u], outputs
// [z_delta | body rate | body rate, body angle].
UncertainStateSpace build_plant(const SatelliteParams& p = {});

// The two sampled loops plus routing u = -(rate command + angle commands).
MultirateController build_controller(const PidParams& c = {});

// Continuous closed loop of the same PID acting without sampling (the design
// reference): plant states plus one integrator state.
StateSpaceModel continuous_closed_loop(const SatelliteParams& p, const PidParams& c,
                                       const DeltaValues& values = {});

// Loop transfer L(s) of the equivalent single-loop form u = -C(s) theta,
// C(s) = kd s + kp + ki/s, evaluated at s = j omega.
std::complex<double> loop_transfer(const SatelliteParams& p, const PidParams& c, double omega,
                                   const DeltaValues& values = {});

struct CrossoverPoint {
    double omega = 0.0;   // unity-gain frequency, rad/s
    double margin = 0.0;  // delay to reach 180 degrees, s
};

struct DelayMarginReport {
    double margin = 0.0;  // min over crossings; infinite when |L| < 1 everywhere
    std::vector<CrossoverPoint> crossings;
};

// Delay margin of the continuous design at a parameter point.
DelayMarginReport delay_margin(const SatelliteParams& p, const PidParams& c,
                               const DeltaValues& values = {});

// Worst vertex of the parameter box by delay margin.
struct CriticalVertex {
    DeltaValues values;
    DelayMarginReport report;
};
CriticalVertex critical_vertex(const SatelliteParams& p, const PidParams& c);

struct PoleReport {
    std::vector<std::complex<double>> poles;
    std::complex<double> dominant;  // slowest oscillatory pair (smallest |s| with Im > 0)
};
PoleReport closed_loop_poles(const SatelliteParams& p, const PidParams& c,
                             const DeltaValues& values = {});

// Design sanity gates checked before any table reproduction: dominant-mode
// natural frequency, nominal delay margin, critical-vertex delay margin.
struct GateCheck {
    std::string name;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool pass = false;
};
std::vector<GateCheck> reconstruction_gates(const SatelliteParams& p = {},
                                            const PidParams& c = {});

struct ReproduceOptions {
    std::string out_dir = "out";  // CSVs land here; traces under out_dir/figs
    double threshold = 10.0;      // analysis gap threshold (loose: report sweep bounds)
    int freq_points = 60;
    int jobs = 0;
    unsigned seed = 99;
    bool write_files = true;
    bool skip_gains = false;      // structure + margin tables only
    std::vector<std::string> modes;  // gain-table subset, e.g. {"SR-HF"}; empty = all
};

// Discrete structure audit per approximation order (slow-rate model).
struct StructureRow {
    int order = 1;
    std::string delta;       // structure description after assembly
    int plant_copies = 0;    // replications of the physical-parameter set
    int eps_rows = 0;
    int eps_cols = 0;
    double bound = 0.0;      // certified per-step error radius at t1
    double reference = 0.0;
    bool certified = false;
};

// Robust-stability row: peak structured-value bounds and the margin interval.
struct MarginRow {
    std::string label;
    bool error_channels = false;
    double mu_lower = 0.0;
    double mu_upper = 0.0;
    double ref_lower = 0.0;
    double ref_upper = 0.0;
    double margin_lower = 0.0;
    double margin_upper = 0.0;
    double seconds = 0.0;
};

// Worst-case gain row.
struct GainRow {
    std::string label;
    bool error_channels = false;
    double lower = 0.0;
    double upper = 0.0;
    double ref_lower = 0.0;
    double ref_upper = 0.0;
    double seconds = 0.0;
};

struct BenchmarkReport {
    std::vector<GateCheck> gates;
    bool gates_pass = false;
    std::vector<StructureRow> structures;
    std::vector<MarginRow> margins;
    std::vector<GainRow> gains;
    std::string summary_json;  // pass/fail per check, serialized
    bool pass = false;         // every gated check passed
};

// Reproduces the structure, stability, and performance tables; writes
// table1.csv..table3.csv and summary.json under out_dir when requested.
BenchmarkReport reproduce_tables(const SatelliteParams& p = {}, const PidParams& c = {},
                                 const ReproduceOptions& opts = {});

// Step-disturbance traces (unit step on w_p held for 5 s, 40 s horizon) for
// nominal and critical configurations across implementation modes. Keys are
// "<config>_<mode>"; files land under out_dir/figs when requested.
std::map<std::string, SimTrace> reproduce_figures(const SatelliteParams& p = {},
                                                  const PidParams& c = {},
                                                  const ReproduceOptions& opts = {});

}  // namespace mrlft
