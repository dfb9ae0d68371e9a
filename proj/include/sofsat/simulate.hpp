#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sofsat/dar_model.hpp"

namespace sofsat {

// Time-varying uncertainty delta(t).
using DeltaSignal = std::function<Vector(double t)>;

DeltaSignal zero_delta(Index l);
DeltaSignal constant_delta(Vector value);
// Piecewise-constant, redrawn uniformly from the polytope every dwell seconds.
DeltaSignal piecewise_random_delta(const Polytope& D, double dwell,
                                   uint64_t seed);
// Steps through the polytope vertices, switching every dwell seconds.
DeltaSignal vertex_cycling_delta(const Polytope& D, double dwell);
// delta_j(t) = h_j sin(w_j t + phase_j) within the bounding box of D.
DeltaSignal sinusoidal_delta(const Polytope& D, double base_frequency);

enum class DeltaMode { kZero, kVertex, kVertexCycling, kRandom, kSinusoidal };

DeltaMode parse_delta_mode(const std::string& name);
std::string to_string(DeltaMode mode);
DeltaSignal make_delta_signal(DeltaMode mode, const Polytope& D, uint64_t seed,
                              double dwell = 1.0);

struct SimulationOptions {
  double t_final = 10.0;
  double step = 1e-3;
  double divergence_cap = 1e6;
  // Store every k-th step; the final state is always stored.
  int record_every = 1;
};

struct Trajectory {
  std::vector<double> time;
  std::vector<Vector> state;
  std::vector<Vector> output;
  std::vector<Vector> control;    // v = K y
  std::vector<Vector> applied;    // sat(v)
  std::vector<bool> saturated;
  bool diverged = false;
  double divergence_time = 0.0;
  std::string failure;  // set when the model became ill-posed mid-run

  const Vector& final_state() const { return state.back(); }
};

// Fixed-step classical RK4 on the saturated closed loop. Divergence past
// options.divergence_cap and well-posedness failures end the run and are
// reported in the trajectory rather than thrown.
Trajectory simulate(const DarModel& model, const Matrix& K, const Vector& x0,
                    const DeltaSignal& delta, const SimulationOptions& options);

}  // namespace sofsat
