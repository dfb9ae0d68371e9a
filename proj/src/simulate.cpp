#include "sofsat/simulate.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace sofsat {

DeltaSignal zero_delta(Index l) {
  return [z = Vector::Zero(l).eval()](double) { return z; };
}

DeltaSignal constant_delta(Vector value) {
  return [v = std::move(value)](double) { return v; };
}

DeltaSignal piecewise_random_delta(const Polytope& D, double dwell,
                                   uint64_t seed) {
  if (!(dwell > 0.0)) throw InputError("delta signal: dwell must be positive");
  // Values are drawn lazily but in interval order, so the signal is a pure
  // function of t for a given seed.
  struct State {
    Polytope D;
    std::mt19937_64 rng;
    std::vector<Vector> values;
  };
  auto st = std::make_shared<State>(State{D, std::mt19937_64(seed), {}});
  return [st, dwell](double t) {
    const auto k = static_cast<size_t>(std::max(0.0, std::floor(t / dwell)));
    while (st->values.size() <= k) st->values.push_back(st->D.sample(st->rng));
    return st->values[k];
  };
}

DeltaSignal vertex_cycling_delta(const Polytope& D, double dwell) {
  if (!(dwell > 0.0)) throw InputError("delta signal: dwell must be positive");
  return [verts = D.vertices(), dwell](double t) {
    const auto k = static_cast<size_t>(std::max(0.0, std::floor(t / dwell)));
    return verts[k % verts.size()];
  };
}

DeltaSignal sinusoidal_delta(const Polytope& D, double base_frequency) {
  const Vector h = D.bounding_half_widths();
  const Index l = h.size();
  Vector freq(l), phase(l);
  for (Index j = 0; j < l; ++j) {
    freq[j] = base_frequency * (1.0 + 0.37 * static_cast<double>(j));
    phase[j] = 0.5 * static_cast<double>(j);
  }
  // Scale into D for non-box polytopes: shrink until the vertex box fits.
  double shrink = 1.0;
  if (!D.box()) {
    for (const auto& a : D.facets()) shrink = std::min(shrink, 1.0 / a.cwiseAbs().dot(h));
  }
  return [h, freq, phase, shrink](double t) {
    Vector d(h.size());
    for (Index j = 0; j < h.size(); ++j)
      d[j] = shrink * h[j] * std::sin(freq[j] * t + phase[j]);
    return d;
  };
}

DeltaMode parse_delta_mode(const std::string& name) {
  if (name == "zero") return DeltaMode::kZero;
  if (name == "vertex") return DeltaMode::kVertex;
  if (name == "vertex-cycling") return DeltaMode::kVertexCycling;
  if (name == "random") return DeltaMode::kRandom;
  if (name == "sinusoidal") return DeltaMode::kSinusoidal;
  throw InputError("unknown delta mode '" + name +
                   "' (zero, vertex, vertex-cycling, random, sinusoidal)");
}

std::string to_string(DeltaMode mode) {
  switch (mode) {
    case DeltaMode::kZero: return "zero";
    case DeltaMode::kVertex: return "vertex";
    case DeltaMode::kVertexCycling: return "vertex-cycling";
    case DeltaMode::kRandom: return "random";
    case DeltaMode::kSinusoidal: return "sinusoidal";
  }
  return "zero";
}

DeltaSignal make_delta_signal(DeltaMode mode, const Polytope& D, uint64_t seed,
                              double dwell) {
  if (D.dim() == 0) return zero_delta(0);
  switch (mode) {
    case DeltaMode::kZero: return zero_delta(D.dim());
    case DeltaMode::kVertex:
      return constant_delta(D.vertices()[seed % D.vertices().size()]);
    case DeltaMode::kVertexCycling: return vertex_cycling_delta(D, dwell);
    case DeltaMode::kRandom: return piecewise_random_delta(D, dwell, seed);
    case DeltaMode::kSinusoidal: return sinusoidal_delta(D, 2.0 * std::numbers::pi / (4.0 * dwell));
  }
  return zero_delta(D.dim());
}

Trajectory simulate(const DarModel& model, const Matrix& K, const Vector& x0,
                    const DeltaSignal& delta, const SimulationOptions& options) {
  if (x0.size() != model.dims().n)
    throw InputError("simulate: initial state has " + std::to_string(x0.size()) +
                     " entries, expected " + std::to_string(model.dims().n));
  if (!x0.allFinite()) throw InputError("simulate: initial state not finite");
  if (!(options.step > 0.0)) throw InputError("simulate: step must be positive");
  if (options.t_final < 0.0) throw InputError("simulate: t_final is negative");

  Trajectory traj;
  const auto steps = static_cast<long>(std::ceil(options.t_final / options.step - 1e-9));
  const int every = std::max(1, options.record_every);

  auto record = [&](double t, const Vector& x, const LoopSignals& s) {
    traj.time.push_back(t);
    traj.state.push_back(x);
    traj.output.push_back(s.y);
    traj.control.push_back(s.v);
    traj.applied.push_back(s.u);
    traj.saturated.push_back(s.saturated);
  };

  Vector x = x0;
  double t = 0.0;
  try {
    LoopSignals s = closed_loop(model, K, x, delta(t));
    record(t, x, s);
    for (long k = 0; k < steps; ++k) {
      const double t_next =
          (k + 1 == steps) ? options.t_final : static_cast<double>(k + 1) * options.step;
      const double h = t_next - t;
      const Vector k1 = s.x_dot;
      const Vector d_mid = delta(t + 0.5 * h);
      const Vector k2 = closed_loop_derivative(model, K, x + 0.5 * h * k1, d_mid);
      const Vector k3 = closed_loop_derivative(model, K, x + 0.5 * h * k2, d_mid);
      const Vector k4 = closed_loop_derivative(model, K, x + h * k3, delta(t_next));
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = t_next;
      const bool bad = !x.allFinite() || x.norm() > options.divergence_cap;
      if (bad) {
        traj.diverged = true;
        traj.divergence_time = t;
        traj.time.push_back(t);
        traj.state.push_back(x);
        traj.output.push_back(traj.output.back());
        traj.control.push_back(traj.control.back());
        traj.applied.push_back(traj.applied.back());
        traj.saturated.push_back(traj.saturated.back());
        return traj;
      }
      s = closed_loop(model, K, x, delta(t));
      if ((k + 1) % every == 0 || k + 1 == steps) record(t, x, s);
    }
  } catch (const WellPosednessError& e) {
    traj.failure = e.what();
    traj.diverged = true;
    traj.divergence_time = t;
    if (traj.state.empty() || traj.time.back() != t) {
      traj.time.push_back(t);
      traj.state.push_back(x);
      traj.output.push_back(Vector::Constant(model.dims().p, std::nan("")));
      traj.control.push_back(Vector::Constant(model.dims().m, std::nan("")));
      traj.applied.push_back(Vector::Constant(model.dims().m, std::nan("")));
      traj.saturated.push_back(false);
    }
  }
  return traj;
}

}  // namespace sofsat
