#pragma once

// Network data model: coupling matrices, pin plans, node dynamics, coupling
// functions, and the right-hand side of the pinned network.
//
// Node indices are 0-based in this API. Scenario files and the CLI use
// 1-based indices and translate at the boundary.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinning/linalg.hpp"

namespace pinning {

/// Node states stacked by row: row i is node i's n-dimensional state.
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Coupling matrix with nonnegative off-diagonal weights and zero row sums.
/// Only constructible through validate().
class CouplingMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-12;

  /// Throws ValidationError naming the first offending row/entry.
  static CouplingMatrix validate(const Matrix& entries);

  const Matrix& entries() const { return entries_; }
  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  bool symmetric() const { return symmetric_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  explicit CouplingMatrix(Matrix entries);

  Matrix entries_;
  bool symmetric_ = false;
};

struct PinPlan {
  std::size_t node = 0;  ///< 0-based pinned node
  double epsilon = 0.0;  ///< feedback gain, > 0
  double c = 0.0;        ///< coupling strength, > 0

  /// Throws ValidationError unless epsilon > 0, c > 0 and node < m.
  void validate(std::size_t m) const;
};

/// A with epsilon subtracted from the pinned node's diagonal entry.
Matrix pinned_matrix(const CouplingMatrix& a, std::size_t node, double epsilon);
Matrix pinned_matrix(const CouplingMatrix& a, const PinPlan& pin);

/// Chua's circuit parameters. l defaults to 14 + 2/7.
struct ChuaParams {
  double k = 9.0;
  double l = 100.0 / 7.0;
};

/// Piecewise-linear Chua nonlinearity h(x) = 2x/7 - 3(|x+1| - |x-1|)/14.
double chua_h(double x);

Eigen::Vector3d chua_field(const Eigen::Vector3d& x, const ChuaParams& params);

enum class ChuaRegion { left, middle, right };

/// Region containing x1: left for x1 < -1, right for x1 > 1, else middle.
ChuaRegion chua_region_of(double x1);

/// Constant Jacobian of Chua's field inside `region`.
Eigen::Matrix3d chua_region_jacobian(ChuaRegion region, const ChuaParams& params);

/// Node vector field f(x, t). Writes the derivative into `dx`.
using VectorField =
    std::function<void(const Eigen::Ref<const Vector>& x, double t, Eigen::Ref<Vector> dx)>;

/// Named node dynamics.
///
/// `jacobian_hull` lists matrices whose convex hull contains every
/// difference-quotient Jacobian J with f(x) - f(y) = J (x - y). It is
/// populated for piecewise-linear built-ins and empty otherwise; the QUAD
/// evaluator in conditions.hpp needs it. `region_jacobians` holds the
/// distinct constant Jacobians of a piecewise-linear field.
struct Dynamics {
  std::string kind;
  std::size_t dim = 0;
  std::map<std::string, double> params;
  VectorField field;
  std::vector<Matrix> jacobian_hull;
  std::vector<Matrix> region_jacobians;

  Vector operator()(const Vector& x, double t) const;

  static Dynamics chua(const ChuaParams& params = {});
  /// f(x) = -rate * x in dimension `dim`; rate = 0 gives f = 0.
  static Dynamics linear_decay(std::size_t dim, double rate = 1.0);
};

/// Builds dynamics from a kind name and parameters. "chua" (k, l) and
/// "linear_decay" (dim, rate) are built in; more can be registered.
class DynamicsRegistry {
 public:
  using Factory = std::function<Dynamics(const std::map<std::string, double>& params)>;

  static DynamicsRegistry& instance();

  void add(const std::string& kind, Factory factory);
  bool contains(const std::string& kind) const;
  std::vector<std::string> kinds() const;
  /// Throws ValidationError for unknown kinds.
  Dynamics make(const std::string& kind, const std::map<std::string, double>& params) const;

 private:
  DynamicsRegistry();
  std::map<std::string, Factory> factories_;
};

/// Scalar coupling map g applied componentwise. "identity" has slope 1;
/// "sine" is g(u) = u + amplitude * sin(u) with 0 <= amplitude < 1 and
/// slope bound alpha_lower = 1 - amplitude.
class CouplingFunction {
 public:
  static CouplingFunction identity();
  static CouplingFunction sine(double amplitude = 0.5);

  const std::string& kind() const { return kind_; }
  double amplitude() const { return amplitude_; }
  double alpha_lower() const { return alpha_lower_; }
  bool is_identity() const { return kind_ == "identity"; }

  double operator()(double u) const;

 private:
  CouplingFunction(std::string kind, double amplitude, double alpha_lower);

  std::string kind_;
  double amplitude_;
  double alpha_lower_;
};

/// Coupled network x_i' = f(x_i) + c sum_j a_ij g(x_j) with an optional single
/// controller -c eps (g(x_pin) - g(s)) at the pinned node. For identity g the
/// controller acts on the raw difference.
class NetworkSystem {
 public:
  /// Throws ValidationError on inconsistent pieces (pin node out of range,
  /// pin.c different from coupling_strength, nonpositive strength).
  NetworkSystem(CouplingMatrix coupling, double coupling_strength, std::optional<PinPlan> pin,
                Dynamics dynamics, CouplingFunction gfun = CouplingFunction::identity());

  const CouplingMatrix& coupling() const { return coupling_; }
  double coupling_strength() const { return strength_; }
  const std::optional<PinPlan>& pin() const { return pin_; }
  const Dynamics& dynamics() const { return dynamics_; }
  const CouplingFunction& coupling_function() const { return gfun_; }

  std::size_t nodes() const { return coupling_.size(); }
  std::size_t dim() const { return dynamics_.dim; }

 private:
  CouplingMatrix coupling_;
  double strength_;
  std::optional<PinPlan> pin_;
  Dynamics dynamics_;
  CouplingFunction gfun_;
};

/// Right-hand side of the controlled network at time t with reference s.
/// The coupling sum is evaluated in diffusive form sum_{j != i} a_ij (g(x_j) -
/// g(x_i)), which equals sum_j a_ij g(x_j) for zero row sums and vanishes
/// exactly on the synchronization manifold.
StateMatrix system_rhs(const NetworkSystem& sys, const StateMatrix& state, const Vector& s,
                       double t);

/// Same as above, writing into `out` (resized as needed).
void system_rhs(const NetworkSystem& sys, const StateMatrix& state, const Vector& s, double t,
                StateMatrix& out);

}  // namespace pinning
