#pragma once

// Sufficient conditions for pinning a coupled network with one controller.
//
// Every check returns a Verdict whose margin is the most binding slack:
// negative means the strict inequality holds.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinning/linalg.hpp"
#include "pinning/model.hpp"

namespace pinning {

struct Verdict {
  bool holds = false;
  double margin = 0.0;
  /// Magnitude of the binding combination used for the tolerance.
  double scale = 0.0;
  /// Index of the binding component (k for per-component checks).
  std::size_t binding = 0;
  std::string detail;

  /// holds <=> margin < -1e-9 * scale; an exact zero margin fails.
  static Verdict from_margin(double margin, double scale, std::size_t binding,
                             std::string detail);
};

/// Diagonal QUAD certificate: P = diag(p) > 0, Delta = diag(delta), eta > 0.
struct QuadCertificate {
  Vector p;
  Vector delta;
  double eta = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(p.size()); }
  double max_delta() const { return delta.maxCoeff(); }
  double min_p() const { return p.minCoeff(); }
  /// Throws ValidationError unless p > 0, eta > 0 and sizes agree.
  void validate() const;
};

struct SpectralReport {
  /// Eigenvalues of A~ (symmetric case) or of (Xi A~ + A~^T Xi)/2, descending.
  Vector lambda;
  /// Left null vector of A (asymmetric case only).
  std::optional<Vector> xi;
  double lambda1 = 0.0;
  double xi_max = 1.0;
};

struct SpectralVerdict {
  Verdict verdict;
  SpectralReport report;
};

/// All eigenvalues of the symmetric pinned matrix are negative. Asymmetric
/// input raises SymmetryError; use theorem4_check for it.
SpectralVerdict proposition1_holds(const Matrix& a_tilde);

/// How the QUAD margin is turned from a Jacobian hull into eta.
enum class QuadBound {
  /// eta = min_k p_k Delta_k - max_J || sym(P J) ||_2. Conservative; this is
  /// the figure usually quoted for Chua with P = I, Delta = 10 I (0.6218).
  spectral_norm,
  /// eta = -max_J lambda_max(sym(P (J - Delta))). The largest margin a
  /// diagonal certificate can claim for a piecewise-linear field.
  tight,
};

/// QUAD margin over a convex hull of Jacobians (see Dynamics::jacobian_hull).
/// eta <= 0 means no certificate.
double quad_margin(const std::vector<Matrix>& jacobian_hull, const Vector& p,
                   const Vector& delta, QuadBound bound = QuadBound::spectral_norm);

/// quad_margin specialised to Chua's circuit.
double quad_certificate_chua(const Vector& p, const Vector& delta, const ChuaParams& params = {},
                             QuadBound bound = QuadBound::spectral_norm);

struct StateBox {
  Vector lower;
  Vector upper;

  static StateBox cube(std::size_t dim, double half_width);
};

struct SampledQuadResult {
  Verdict verdict;
  double min_quotient = 0.0;
  /// Pair attaining the smallest quotient.
  Vector x;
  Vector y;
  std::size_t samples = 0;
};

/// Falsification search for the QUAD inequality: samples pairs x != y in
/// `box` and records min -(x-y)^T P (f(x) - Delta x - f(y) + Delta y) / |x-y|^2.
/// Holds when that minimum is >= cert.eta. Sampling can refute a certificate
/// but never prove it.
SampledQuadResult quad_check_sampled(const Dynamics& dynamics, const QuadCertificate& cert,
                                     const StateBox& box, std::size_t samples,
                                     std::uint64_t seed);

/// Local condition: max over Chua regions of lambda_max(sym(Df)) < -c lambda1.
/// Needs dynamics with region Jacobians; otherwise UnsupportedError.
Verdict theorem1_margin(const NetworkSystem& sys, double lambda1);

/// max_k Delta_k + c lambda1 < 0.
Verdict theorem2_check(const QuadCertificate& cert, double c, double lambda1);

/// max_k Delta_k + alpha c lambda1 < 0 (nonlinear coupling with slope >= alpha).
Verdict theorem3_check(const QuadCertificate& cert, double c, double lambda1, double alpha);

/// Asymmetric irreducible coupling: max_k Delta_k max_i xi_i + c mu1 < 0 where
/// mu1 is the largest eigenvalue of (Xi A~ + A~^T Xi)/2. Reducible input
/// raises ReducibilityError.
SpectralVerdict theorem4_check(const CouplingMatrix& a, const PinPlan& pin,
                               const QuadCertificate& cert);

struct CouplingStrength {
  /// Smallest c making the check hold; empty when lambda1 >= 0.
  std::optional<double> c_star;
  /// Check re-evaluated at c_star * (1 + 1e-6).
  std::optional<Verdict> verified;
  std::string detail;
};

/// c* = max_k Delta_k xi_max / (-alpha lambda1), the threshold of the
/// Theorem 2/3/4 inequalities. c* = 0 when max_k Delta_k <= 0.
CouplingStrength min_coupling_strength(const QuadCertificate& cert, double lambda1,
                                       double alpha = 1.0, double xi_max = 1.0);

struct ReducibleVerdict {
  Verdict verdict;
  Condensation condensation;
  /// One line per block describing its role.
  std::vector<std::string> block_status;
};

/// Pinnability of a possibly reducible network: exactly one root block, the
/// pin inside it, and every other block receiving input from an earlier one.
ReducibleVerdict reducible_pinnability(const CouplingMatrix& a, std::size_t pin_node);

}  // namespace pinning
