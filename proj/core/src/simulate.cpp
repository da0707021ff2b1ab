#include "pinning/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pinning {

namespace {

void require_finite(const StateMatrix& m, double t) {
  if (!m.allFinite()) {
    throw DomainError("integrate: non-finite derivative at t = " + std::to_string(t));
  }
}

void require_finite(const Vector& v, double t) {
  if (!v.allFinite()) {
    throw DomainError("integrate: non-finite reference derivative at t = " + std::to_string(t));
  }
}

double largest_node_norm(const StateMatrix& x) {
  return x.rows() == 0 ? 0.0 : x.rowwise().norm().maxCoeff();
}

Vector weights_or_ones(const std::optional<Vector>& weights, std::size_t m) {
  if (!weights) return Vector::Ones(static_cast<Eigen::Index>(m));
  if (static_cast<std::size_t>(weights->size()) != m) {
    throw DomainError("weights have length " + std::to_string(weights->size()) + ", expected " +
                      std::to_string(m));
  }
  return *weights;
}

double lyapunov_value(const StateMatrix& x, const Vector& s, const Vector& w, const Vector& p) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector d = x.row(i).transpose() - s;
    v += w(i) * d.cwiseProduct(p).dot(d);
  }
  return 0.5 * v;
}

}  // namespace

Trajectory integrate(const NetworkSystem& sys, const StateMatrix& x0, const Vector& s0,
                     const IntegrateOptions& options) {
  const double dt = options.dt;
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrate: dt must be positive");
  if (!(options.t_max >= dt)) throw DomainError("integrate: t_max must be at least dt");
  if (options.stride == 0) throw DomainError("integrate: stride must be positive");
  const auto m = static_cast<Eigen::Index>(sys.nodes());
  const auto n = static_cast<Eigen::Index>(sys.dim());
  if (x0.rows() != m || x0.cols() != n) {
    throw DomainError("integrate: initial state is " + std::to_string(x0.rows()) + "x" +
                      std::to_string(x0.cols()) + ", expected " + std::to_string(m) + "x" +
                      std::to_string(n));
  }
  if (s0.size() != n) throw DomainError("integrate: reference has the wrong dimension");
  if (!x0.allFinite() || !s0.allFinite()) throw DomainError("integrate: non-finite initial data");

  const auto steps = static_cast<std::size_t>(std::llround(options.t_max / dt));
  const auto& f = sys.dynamics().field;

  Trajectory traj;
  traj.dt = dt;
  traj.stride = options.stride;
  const std::size_t samples = steps / options.stride + 1;
  traj.times.reserve(samples);
  traj.states.reserve(samples);
  traj.reference.reserve(samples);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  traj.reference.push_back(s0);

  StateMatrix x = x0;
  Vector s = s0;
  StateMatrix k1, k2, k3, k4, tmp;
  Vector r1(n), r2(n), r3(n), r4(n), stmp(n);

  for (std::size_t step = 1; step <= steps; ++step) {
    const double t = static_cast<double>(step - 1) * dt;
    const double half = 0.5 * dt;

    system_rhs(sys, x, s, t, k1);
    f(s, t, r1);
    require_finite(k1, t);
    require_finite(r1, t);

    tmp = x + half * k1;
    stmp = s + half * r1;
    system_rhs(sys, tmp, stmp, t + half, k2);
    f(stmp, t + half, r2);

    tmp = x + half * k2;
    Vector s3 = s + half * r2;
    system_rhs(sys, tmp, s3, t + half, k3);
    f(s3, t + half, r3);

    tmp = x + dt * k3;
    Vector s4 = s + dt * r3;
    system_rhs(sys, tmp, s4, t + dt, k4);
    f(s4, t + dt, r4);
    require_finite(k4, t);
    require_finite(r4, t);

    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s += (dt / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4);

    const double now = static_cast<double>(step) * dt;
    const double size = std::max(largest_node_norm(x), s.norm());
    if (!(size <= options.divergence_threshold)) {
      traj.times.push_back(now);
      traj.states.push_back(x);
      traj.reference.push_back(s);
      throw DivergenceError("integrate: state norm exceeded " +
                                std::to_string(options.divergence_threshold) + " at t = " +
                                std::to_string(now),
                            now, std::move(traj));
    }
    if (step % options.stride == 0) {
      traj.times.push_back(now);
      traj.states.push_back(x);
      traj.reference.push_back(s);
    }
  }
  return traj;
}

Trajectory integrate(const NetworkSystem& sys, const StateMatrix& x0, const Vector& s0, double dt,
                     double t_max) {
  IntegrateOptions options;
  options.dt = dt;
  options.t_max = t_max;
  return integrate(sys, x0, s0, options);
}

double step_halving_difference(const NetworkSystem& sys, const StateMatrix& x0, const Vector& s0,
                               double dt, double t_max) {
  IntegrateOptions coarse;
  coarse.dt = dt;
  coarse.t_max = t_max;
  coarse.stride = static_cast<std::size_t>(std::llround(t_max / dt));
  IntegrateOptions fine = coarse;
  fine.dt = 0.5 * dt;
  fine.stride = 2 * coarse.stride;
  const auto a = integrate(sys, x0, s0, coarse);
  const auto b = integrate(sys, x0, s0, fine);
  double scale = 1.0;
  for (const auto& state : a.states) scale = std::max(scale, state.cwiseAbs().maxCoeff());
  const double diff = std::max((a.states.back() - b.states.back()).cwiseAbs().maxCoeff(),
                               (a.reference.back() - b.reference.back()).cwiseAbs().maxCoeff());
  return diff / scale;
}

MetricSeries metrics(const Trajectory& traj, const std::optional<Vector>& weights,
                     const Vector& p) {
  if (traj.empty()) throw DomainError("metrics: empty trajectory");
  const auto m = static_cast<std::size_t>(traj.states.front().rows());
  const auto n = traj.states.front().cols();
  if (p.size() != n) throw DomainError("metrics: P has the wrong dimension");
  const Vector w = weights_or_ones(weights, m);

  const auto dispersion = [](const StateMatrix& x) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) sum += (x.row(i) - mean).norm();
    return sum;
  };
  const auto pin_error = [](const StateMatrix& x, const Vector& s) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) sum += (x.row(i) - s.transpose()).norm();
    return sum;
  };

  MetricSeries out;
  out.times = traj.times;
  const double sync0 = dispersion(traj.states.front());
  const double pin0 = pin_error(traj.states.front(), traj.reference.front());
  if (sync0 > 0.0) out.sync_ratio.emplace().reserve(traj.size());
  if (pin0 > 0.0) out.pin_ratio.emplace().reserve(traj.size());
  out.lyapunov.reserve(traj.size());

  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& x = traj.states[k];
    const auto& s = traj.reference[k];
    if (out.sync_ratio) out.sync_ratio->push_back(k == 0 ? 1.0 : dispersion(x) / sync0);
    if (out.pin_ratio) out.pin_ratio->push_back(k == 0 ? 1.0 : pin_error(x, s) / pin0);
    out.lyapunov.push_back(lyapunov_value(x, s, w, p));
  }
  return out;
}

double decay_rate_fit(const std::vector<double>& times, const std::vector<double>& values,
                      double t_a, double t_b) {
  if (times.size() != values.size()) throw DomainError("decay_rate_fit: size mismatch");
  if (!(t_b > t_a)) throw DomainError("decay_rate_fit: empty window");
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t_a || times[k] > t_b) continue;
    if (!(values[k] > 0.0)) {
      throw DomainError("decay_rate_fit: nonpositive value at t = " + std::to_string(times[k]));
    }
    const double y = std::log(values[k]);
    st += times[k];
    sy += y;
    stt += times[k] * times[k];
    sty += times[k] * y;
    ++count;
  }
  if (count < 2) throw DomainError("decay_rate_fit: fewer than two samples in the window");
  const double cnt = static_cast<double>(count);
  const double denom = cnt * stt - st * st;
  return (cnt * sty - st * sy) / denom;
}

double decay_rate_fit(const MetricSeries& series, double t_a, double t_b) {
  if (!series.pin_ratio) throw DomainError("decay_rate_fit: pin ratio is undefined");
  return decay_rate_fit(series.times, *series.pin_ratio, t_a, t_b);
}

LyapunovReport lyapunov_monitor(const Trajectory& traj, const QuadCertificate& cert,
                                const std::optional<Vector>& weights, double tol_rate) {
  LyapunovReport report;
  if (traj.size() < 2) return report;
  const auto m = static_cast<std::size_t>(traj.states.front().rows());
  const Vector w = weights_or_ones(weights, m);
  report.rate = cert.eta / cert.min_p() - tol_rate;

  double v_prev = lyapunov_value(traj.states.front(), traj.reference.front(), w, cert.p);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double v = lyapunov_value(traj.states[k], traj.reference[k], w, cert.p);
    const double h = traj.times[k] - traj.times[k - 1];
    const double bound = v_prev * std::exp(-report.rate * h);
    ++report.checked;
    if (v > bound) {
      ++report.violations;
      if (!report.first) report.first = LyapunovViolation{traj.times[k], v_prev, v, bound};
    }
    v_prev = v;
  }
  return report;
}

}  // namespace pinning
