#pragma once

// Fixed-step RK4 integration of the pinned network and its reference, plus
// the synchronization/pinning error metrics computed from a trajectory.

#include <cstddef>
#include <optional>
#include <vector>

#include "pinning/conditions.hpp"
#include "pinning/model.hpp"

namespace pinning {

/// Samples on a uniform grid times[k] = k * dt * stride.
struct Trajectory {
  double dt = 0.0;
  std::size_t stride = 1;
  std::vector<double> times;
  std::vector<StateMatrix> states;
  std::vector<Vector> reference;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time, Trajectory partial)
      : Error(what), time_(time), partial_(std::move(partial)) {}

  double time() const { return time_; }
  const Trajectory& partial() const { return partial_; }

 private:
  double time_;
  Trajectory partial_;
};

struct IntegrateOptions {
  double dt = 1e-3;
  double t_max = 20.0;
  /// Keep every `stride`-th step.
  std::size_t stride = 1;
  double divergence_threshold = 1e9;
};

/// Classical RK4 on all nodes and the reference s' = f(s, t) at once.
/// Throws DivergenceError (with the partial trajectory) when any state norm
/// exceeds the threshold, DomainError on non-finite derivatives.
Trajectory integrate(const NetworkSystem& sys, const StateMatrix& x0, const Vector& s0,
                     const IntegrateOptions& options);

Trajectory integrate(const NetworkSystem& sys, const StateMatrix& x0, const Vector& s0, double dt,
                     double t_max);

/// Max-norm difference between the endpoints at dt and dt/2, relative to
/// max(1, largest state magnitude seen).
double step_halving_difference(const NetworkSystem& sys, const StateMatrix& x0, const Vector& s0,
                               double dt, double t_max);

struct MetricSeries {
  std::vector<double> times;
  /// sum_i |x_i - mean| / same at t = 0; empty when the initial dispersion is 0.
  std::optional<std::vector<double>> sync_ratio;
  /// sum_i |x_i - s| / same at t = 0; empty when all nodes start at s(0).
  std::optional<std::vector<double>> pin_ratio;
  /// V = 1/2 sum_i w_i dx_i^T P dx_i.
  std::vector<double> lyapunov;
};

/// `weights` defaults to all ones; `p` is the certificate's diagonal.
MetricSeries metrics(const Trajectory& traj, const std::optional<Vector>& weights, const Vector& p);

/// Least-squares slope of log(values) over times in [t_a, t_b].
double decay_rate_fit(const std::vector<double>& times, const std::vector<double>& values,
                      double t_a, double t_b);

/// Decay rate of the pin ratio.
double decay_rate_fit(const MetricSeries& series, double t_a, double t_b);

struct LyapunovViolation {
  double time = 0.0;
  double v_before = 0.0;
  double v_after = 0.0;
  double bound = 0.0;
};

struct LyapunovReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  /// Required decay rate eta / min p - tol_rate.
  double rate = 0.0;
  std::optional<LyapunovViolation> first;
};

/// Checks V(t + h) <= V(t) exp(-(eta / min p - tol_rate) h) between samples.
LyapunovReport lyapunov_monitor(const Trajectory& traj, const QuadCertificate& cert,
                                const std::optional<Vector>& weights, double tol_rate = 1e-3);

}  // namespace pinning
