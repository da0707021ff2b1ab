#include "pinning/model.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace pinning {

namespace {

std::string pos(Eigen::Index i, Eigen::Index j) {
  return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

CouplingMatrix::CouplingMatrix(Matrix entries) : entries_(std::move(entries)) {
  symmetric_ =
      (entries_ - entries_.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance;
}

CouplingMatrix CouplingMatrix::validate(const Matrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw ValidationError("coupling matrix must be square and non-empty, got " +
                          std::to_string(entries.rows()) + "x" + std::to_string(entries.cols()));
  }
  const Eigen::Index m = entries.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!std::isfinite(entries(i, j))) {
        throw ValidationError("coupling matrix entry " + pos(i, j) + " is not finite",
                              static_cast<int>(i), static_cast<int>(j));
      }
      if (i != j && entries(i, j) < 0.0) {
        throw ValidationError("coupling matrix entry " + pos(i, j) +
                                  " is a negative off-diagonal weight",
                              static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sum = entries.row(i).sum();
    if (std::abs(sum) > kRowSumTolerance) {
      throw ValidationError("coupling matrix row " + std::to_string(i + 1) + " sums to " +
                                std::to_string(sum) + ", expected 0",
                            static_cast<int>(i));
    }
  }
  return CouplingMatrix(entries);
}

void PinPlan::validate(std::size_t m) const {
  if (node >= m) {
    throw ValidationError("pin node " + std::to_string(node + 1) + " is outside 1.." +
                          std::to_string(m));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("pin epsilon must be positive and finite");
  }
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw ValidationError("pin coupling strength c must be positive and finite");
  }
}

Matrix pinned_matrix(const CouplingMatrix& a, std::size_t node, double epsilon) {
  if (node >= a.size()) {
    throw DomainError("pinned_matrix: node " + std::to_string(node + 1) + " out of range");
  }
  Matrix out = a.entries();
  const auto k = static_cast<Eigen::Index>(node);
  out(k, k) -= epsilon;
  return out;
}

Matrix pinned_matrix(const CouplingMatrix& a, const PinPlan& pin) {
  return pinned_matrix(a, pin.node, pin.epsilon);
}

double chua_h(double x) {
  return 2.0 / 7.0 * x - 3.0 / 14.0 * (std::abs(x + 1.0) - std::abs(x - 1.0));
}

Eigen::Vector3d chua_field(const Eigen::Vector3d& x, const ChuaParams& params) {
  return {params.k * (x(1) - chua_h(x(0))), x(0) - x(1) + x(2), -params.l * x(1)};
}

ChuaRegion chua_region_of(double x1) {
  if (x1 < -1.0) return ChuaRegion::left;
  if (x1 > 1.0) return ChuaRegion::right;
  return ChuaRegion::middle;
}

Eigen::Matrix3d chua_region_jacobian(ChuaRegion region, const ChuaParams& params) {
  const double h_slope = region == ChuaRegion::middle ? -1.0 / 7.0 : 2.0 / 7.0;
  Eigen::Matrix3d j;
  j << -params.k * h_slope, params.k, 0.0,
       1.0, -1.0, 1.0,
       0.0, -params.l, 0.0;
  return j;
}

Vector Dynamics::operator()(const Vector& x, double t) const {
  if (static_cast<std::size_t>(x.size()) != dim) {
    throw DomainError("dynamics '" + kind + "': state has dimension " +
                      std::to_string(x.size()) + ", expected " + std::to_string(dim));
  }
  Vector dx(x.size());
  field(x, t, dx);
  return dx;
}

Dynamics Dynamics::chua(const ChuaParams& params) {
  Dynamics d;
  d.kind = "chua";
  d.dim = 3;
  d.params = {{"k", params.k}, {"l", params.l}};
  d.field = [params](const Eigen::Ref<const Vector>& x, double, Eigen::Ref<Vector> dx) {
    dx(0) = params.k * (x(1) - chua_h(x(0)));
    dx(1) = x(0) - x(1) + x(2);
    dx(2) = -params.l * x(1);
  };
  const Matrix middle = chua_region_jacobian(ChuaRegion::middle, params);
  const Matrix outer = chua_region_jacobian(ChuaRegion::right, params);
  // Difference quotients of h lie between the regional slopes -1/7 and 2/7.
  d.jacobian_hull = {middle, outer};
  d.region_jacobians = {middle, outer};
  return d;
}

Dynamics Dynamics::linear_decay(std::size_t dim, double rate) {
  if (dim == 0) throw ValidationError("linear_decay: dimension must be positive");
  Dynamics d;
  d.kind = "linear_decay";
  d.dim = dim;
  d.params = {{"dim", static_cast<double>(dim)}, {"rate", rate}};
  d.field = [rate](const Eigen::Ref<const Vector>& x, double, Eigen::Ref<Vector> dx) {
    dx = -rate * x;
  };
  const Matrix j = -rate * Matrix::Identity(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  d.jacobian_hull = {j};
  d.region_jacobians = {j};
  return d;
}

DynamicsRegistry::DynamicsRegistry() {
  factories_["chua"] = [](const std::map<std::string, double>& p) {
    for (const auto& [key, value] : p) {
      if (key != "k" && key != "l") throw ValidationError("chua: unknown parameter '" + key + "'");
    }
    ChuaParams params;
    params.k = param_or(p, "k", params.k);
    params.l = param_or(p, "l", params.l);
    return Dynamics::chua(params);
  };
  factories_["linear_decay"] = [](const std::map<std::string, double>& p) {
    for (const auto& [key, value] : p) {
      if (key != "dim" && key != "rate") {
        throw ValidationError("linear_decay: unknown parameter '" + key + "'");
      }
    }
    const double dim = param_or(p, "dim", 1.0);
    if (!(dim >= 1.0) || dim != std::floor(dim)) {
      throw ValidationError("linear_decay: 'dim' must be a positive integer");
    }
    return Dynamics::linear_decay(static_cast<std::size_t>(dim), param_or(p, "rate", 1.0));
  };
}

DynamicsRegistry& DynamicsRegistry::instance() {
  static DynamicsRegistry registry;
  return registry;
}

void DynamicsRegistry::add(const std::string& kind, Factory factory) {
  factories_[kind] = std::move(factory);
}

bool DynamicsRegistry::contains(const std::string& kind) const {
  return factories_.count(kind) != 0;
}

std::vector<std::string> DynamicsRegistry::kinds() const {
  std::vector<std::string> out;
  for (const auto& [kind, factory] : factories_) out.push_back(kind);
  return out;
}

Dynamics DynamicsRegistry::make(const std::string& kind,
                                const std::map<std::string, double>& params) const {
  const auto it = factories_.find(kind);
  if (it == factories_.end()) {
    throw ValidationError("unknown dynamics kind '" + kind + "'");
  }
  return it->second(params);
}

CouplingFunction::CouplingFunction(std::string kind, double amplitude, double alpha_lower)
    : kind_(std::move(kind)), amplitude_(amplitude), alpha_lower_(alpha_lower) {}

CouplingFunction CouplingFunction::identity() { return {"identity", 0.0, 1.0}; }

CouplingFunction CouplingFunction::sine(double amplitude) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) {
    throw ValidationError("sine coupling function needs 0 <= amplitude < 1");
  }
  return {"sine", amplitude, 1.0 - amplitude};
}

double CouplingFunction::operator()(double u) const {
  return is_identity() ? u : u + amplitude_ * std::sin(u);
}

NetworkSystem::NetworkSystem(CouplingMatrix coupling, double coupling_strength,
                             std::optional<PinPlan> pin, Dynamics dynamics,
                             CouplingFunction gfun)
    : coupling_(std::move(coupling)),
      strength_(coupling_strength),
      pin_(std::move(pin)),
      dynamics_(std::move(dynamics)),
      gfun_(std::move(gfun)) {
  if (!(strength_ >= 0.0) || !std::isfinite(strength_)) {
    throw ValidationError("coupling strength must be nonnegative and finite");
  }
  if (dynamics_.dim == 0 || !dynamics_.field) {
    throw ValidationError("dynamics '" + dynamics_.kind + "' is not initialized");
  }
  if (pin_) {
    pin_->validate(coupling_.size());
    if (pin_->c != strength_) {
      throw ValidationError("pin plan coupling strength differs from the network's");
    }
  }
}

void system_rhs(const NetworkSystem& sys, const StateMatrix& state, const Vector& s, double t,
                StateMatrix& out) {
  const auto m = static_cast<Eigen::Index>(sys.nodes());
  const auto n = static_cast<Eigen::Index>(sys.dim());
  if (state.rows() != m || state.cols() != n) {
    throw DomainError("system_rhs: state is " + std::to_string(state.rows()) + "x" +
                      std::to_string(state.cols()) + ", expected " + std::to_string(m) + "x" +
                      std::to_string(n));
  }
  if (s.size() != n) {
    throw DomainError("system_rhs: reference has dimension " + std::to_string(s.size()) +
                      ", expected " + std::to_string(n));
  }
  out.resize(m, n);

  const auto& a = sys.coupling().entries();
  const auto& g = sys.coupling_function();
  const double c = sys.coupling_strength();

  Vector x(n);
  Vector dx(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    x = state.row(i).transpose();
    sys.dynamics().field(x, t, dx);
    out.row(i) = dx.transpose();
  }

  if (g.is_identity()) {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i == j || a(i, j) == 0.0) continue;
        out.row(i) += c * a(i, j) * (state.row(j) - state.row(i));
      }
    }
  } else {
    const StateMatrix gx = state.unaryExpr([&g](double u) { return g(u); });
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i == j || a(i, j) == 0.0) continue;
        out.row(i) += c * a(i, j) * (gx.row(j) - gx.row(i));
      }
    }
  }

  if (const auto& pin = sys.pin()) {
    const auto p = static_cast<Eigen::Index>(pin->node);
    const double gain = c * pin->epsilon;
    for (Eigen::Index k = 0; k < n; ++k) {
      out(p, k) -= gain * (g(state(p, k)) - g(s(k)));
    }
  }
}

StateMatrix system_rhs(const NetworkSystem& sys, const StateMatrix& state, const Vector& s,
                       double t) {
  StateMatrix out;
  system_rhs(sys, state, s, t, out);
  return out;
}

}  // namespace pinning
