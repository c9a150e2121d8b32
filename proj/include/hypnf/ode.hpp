#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "hypnf/types.hpp"

namespace hypnf {

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dy)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 picks a step from the initial derivative
  double max_step = std::numeric_limits<double>::infinity();
  double min_step_rel = 1e-13;  // relative to max(1, |t|)
  long max_steps = 200000;
};

// One accepted Dormand-Prince step with its quartic dense output.
struct DenseStep {
  double t0 = 0.0;
  double t1 = 0.0;
  Vector r1, r2, r3, r4, r5;

  Vector eval(double t) const;
  const Vector& start() const { return r1; }
  Vector end() const { return r1 + r2; }
};

struct OdeEvent {
  // crossing of g through zero; direction +1 rising only, -1 falling only, 0 both
  std::function<double(double t, const Vector& y)> g;
  int direction = 0;
  bool terminal = true;
};

struct EventHit {
  int index = -1;
  double t = 0.0;
  Vector y;
};

struct OdeHooks {
  std::vector<OdeEvent> events;
  // estimate of ||d(rhs)/dy|| at y, used to amplify the global error estimate
  std::function<double(const Vector& y)> lipschitz;
  // false means the state left the chart
  std::function<bool(const Vector& y)> in_domain;
  // called per accepted step, clipped at a terminal event; return false to stop
  std::function<bool(const DenseStep& step, double t_end)> on_step;
  double event_root_tol = 1e-13;
  int event_subsamples = 4;  // interior probes per step for double crossings
};

struct OdeSolution {
  std::vector<DenseStep> steps;
  double t_start = 0.0;
  double t_end = 0.0;
  Vector y_end;
  double global_error = 0.0;  // Gronwall-amplified sum of local error estimates
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  std::vector<EventHit> hits;
  bool stopped_by_event = false;
  bool stopped_by_callback = false;

  bool forward() const { return t_end >= t_start; }
  // dense output at any t between t_start and t_end
  Vector operator()(double t) const;
};

// Integrates y' = f(t, y) from t0 towards t1 (either direction).
OdeSolution integrate_dp5(const OdeRhs& f, double t0, const Vector& y0, double t1,
                          const OdeOptions& opts = {}, const OdeHooks& hooks = {});

}  // namespace hypnf
