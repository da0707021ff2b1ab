#include "pinning/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <fmt/format.h>

namespace pinning {

namespace {

/// Shared form of the Theorem 2/3/4 inequalities:
/// max_k Delta_k * weight + alpha * c * lambda1 < 0.
Verdict coupling_verdict(const QuadCertificate& cert, double weight, double alpha, double c,
                         double lambda1, const char* label) {
  Eigen::Index k_max = 0;
  const double max_delta = cert.delta.maxCoeff(&k_max);
  const double drive = max_delta * weight;
  const double coupling = alpha * c * lambda1;
  const double margin = drive + coupling;
  const double scale = std::max(std::abs(drive), std::abs(coupling));
  return Verdict::from_margin(
      margin, scale, static_cast<std::size_t>(k_max),
      fmt::format("{}: max_k Delta_k{} = {:.6g} (k = {}), {}c*lambda1 = {:.6g}, margin = {:.6g}",
                  label, weight == 1.0 ? "" : " * max xi", drive, k_max + 1,
                  alpha == 1.0 ? "" : "alpha*", coupling, margin));
}

double spectral_norm_symmetric(const Matrix& s) {
  const auto eig = sym_eigen(s);
  return std::max(std::abs(eig.eigenvalues(0)), std::abs(eig.eigenvalues(eig.eigenvalues.size() - 1)));
}

}  // namespace

Verdict Verdict::from_margin(double margin, double scale, std::size_t binding,
                             std::string detail) {
  Verdict v;
  v.margin = margin;
  v.scale = std::abs(scale);
  v.binding = binding;
  v.holds = margin < -1e-9 * v.scale;
  v.detail = std::move(detail);
  return v;
}

void QuadCertificate::validate() const {
  if (p.size() == 0 || p.size() != delta.size()) {
    throw ValidationError("certificate P and Delta must be non-empty and the same length");
  }
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (!(p(k) > 0.0) || !std::isfinite(p(k))) {
      throw ValidationError("certificate P entry " + std::to_string(k + 1) +
                            " must be positive");
    }
    if (!std::isfinite(delta(k))) {
      throw ValidationError("certificate Delta entry " + std::to_string(k + 1) +
                            " must be finite");
    }
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ValidationError("certificate eta must be positive");
  }
}

SpectralVerdict proposition1_holds(const Matrix& a_tilde) {
  const auto eig = sym_eigen(a_tilde);
  SpectralVerdict out;
  out.report.lambda = eig.eigenvalues;
  out.report.lambda1 = eig.eigenvalues(0);
  out.report.xi_max = 1.0;
  out.verdict = Verdict::from_margin(
      out.report.lambda1, 1.0 + inf_norm(a_tilde), 0,
      fmt::format("largest eigenvalue of the pinned matrix lambda1 = {:.6g}", out.report.lambda1));
  return out;
}

double quad_margin(const std::vector<Matrix>& jacobian_hull, const Vector& p,
                   const Vector& delta, QuadBound bound) {
  if (jacobian_hull.empty()) {
    throw UnsupportedError("quad_margin: dynamics provide no Jacobian hull");
  }
  const auto n = p.size();
  if (delta.size() != n) throw DomainError("quad_margin: P and Delta lengths differ");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(p(k) > 0.0)) throw DomainError("quad_margin: P must be positive");
  }
  const Matrix pm = p.asDiagonal();
  const Matrix dm = delta.asDiagonal();

  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& j : jacobian_hull) {
    if (j.rows() != n || j.cols() != n) {
      throw DomainError("quad_margin: Jacobian dimension does not match the certificate");
    }
    if (bound == QuadBound::tight) {
      const Matrix shifted = pm * (j - dm);
      worst = std::max(worst, max_eigenvalue(0.5 * (shifted + shifted.transpose())));
    } else {
      const Matrix pj = pm * j;
      worst = std::max(worst, spectral_norm_symmetric(0.5 * (pj + pj.transpose())));
    }
  }
  if (bound == QuadBound::tight) return -worst;
  return p.cwiseProduct(delta).minCoeff() - worst;
}

double quad_certificate_chua(const Vector& p, const Vector& delta, const ChuaParams& params,
                             QuadBound bound) {
  if (p.size() != 3) throw DomainError("quad_certificate_chua: certificate must be 3-dimensional");
  return quad_margin(Dynamics::chua(params).jacobian_hull, p, delta, bound);
}

StateBox StateBox::cube(std::size_t dim, double half_width) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Vector::Constant(n, -half_width), Vector::Constant(n, half_width)};
}

SampledQuadResult quad_check_sampled(const Dynamics& dynamics, const QuadCertificate& cert,
                                     const StateBox& box, std::size_t samples,
                                     std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(dynamics.dim);
  if (cert.p.size() != n || cert.delta.size() != n) {
    throw DomainError("quad_check_sampled: certificate dimension does not match the dynamics");
  }
  if (box.lower.size() != n || box.upper.size() != n) {
    throw DomainError("quad_check_sampled: box dimension does not match the dynamics");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!std::isfinite(box.lower(k)) || !std::isfinite(box.upper(k)) ||
        !(box.upper(k) > box.lower(k))) {
      throw DomainError("quad_check_sampled: degenerate box along axis " +
                        std::to_string(k + 1));
    }
  }
  if (samples == 0) throw DomainError("quad_check_sampled: need at least one sample");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vector width = box.upper - box.lower;

  SampledQuadResult out;
  out.min_quotient = std::numeric_limits<double>::infinity();
  Vector x(n), y(n), fx(n), fy(n);
  std::size_t evaluated = 0;
  while (evaluated < samples) {
    for (Eigen::Index k = 0; k < n; ++k) x(k) = box.lower(k) + width(k) * unit(rng);
    if (evaluated % 2 == 0) {
      for (Eigen::Index k = 0; k < n; ++k) y(k) = box.lower(k) + width(k) * unit(rng);
    } else {
      // Nearby pair: probes the local Jacobian.
      for (Eigen::Index k = 0; k < n; ++k) {
        const double step = 0.01 * width(k) * (2.0 * unit(rng) - 1.0);
        y(k) = std::clamp(x(k) + step, box.lower(k), box.upper(k));
      }
    }
    const Vector d = x - y;
    const double dd = d.squaredNorm();
    if (dd == 0.0) continue;
    dynamics.field(x, 0.0, fx);
    dynamics.field(y, 0.0, fy);
    double num = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      num += cert.p(k) * d(k) * (fx(k) - fy(k) - cert.delta(k) * d(k));
    }
    const double quotient = -num / dd;
    if (quotient < out.min_quotient) {
      out.min_quotient = quotient;
      out.x = x;
      out.y = y;
    }
    ++evaluated;
  }
  out.samples = evaluated;
  const double margin = cert.eta - out.min_quotient;
  out.verdict = Verdict::from_margin(
      margin, cert.eta, 0,
      fmt::format("min sampled quotient {:.6g} vs eta {:.6g} over {} pairs", out.min_quotient,
                  cert.eta, evaluated));
  // Equality is not a violation here.
  out.verdict.holds = out.min_quotient >= cert.eta;
  return out;
}

Verdict theorem1_margin(const NetworkSystem& sys, double lambda1) {
  const auto& regions = sys.dynamics().region_jacobians;
  if (regions.empty()) {
    throw UnsupportedError("theorem1_margin: dynamics '" + sys.dynamics().kind +
                           "' have no piecewise-constant Jacobian");
  }
  double mu = -std::numeric_limits<double>::infinity();
  std::size_t binding = 0;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const double value = max_eigenvalue_of_symmetric_part(regions[r]);
    if (value > mu) {
      mu = value;
      binding = r;
    }
  }
  const double coupling = sys.coupling_strength() * lambda1;
  const double margin = mu + coupling;
  return Verdict::from_margin(
      margin, std::max(std::abs(mu), std::abs(coupling)), binding,
      fmt::format("theorem 1: max region mu = {:.6g} (region {}), c*lambda1 = {:.6g}, "
                  "margin = {:.6g}",
                  mu, binding + 1, coupling, margin));
}

Verdict theorem2_check(const QuadCertificate& cert, double c, double lambda1) {
  return coupling_verdict(cert, 1.0, 1.0, c, lambda1, "theorem 2");
}

Verdict theorem3_check(const QuadCertificate& cert, double c, double lambda1, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("theorem3_check: alpha must be positive");
  return coupling_verdict(cert, 1.0, alpha, c, lambda1, alpha == 1.0 ? "theorem 2" : "theorem 3");
}

SpectralVerdict theorem4_check(const CouplingMatrix& a, const PinPlan& pin,
                               const QuadCertificate& cert) {
  const Vector xi = left_null_vector(a.entries(), true);
  const Matrix weighted = symmetrize_weighted(pinned_matrix(a, pin), xi);
  const auto eig = sym_eigen(weighted);

  SpectralVerdict out;
  out.report.lambda = eig.eigenvalues;
  out.report.xi = xi;
  out.report.lambda1 = eig.eigenvalues(0);
  out.report.xi_max = xi.maxCoeff();
  out.verdict = coupling_verdict(cert, out.report.xi_max, 1.0, pin.c, out.report.lambda1,
                                 "theorem 4");
  return out;
}

CouplingStrength min_coupling_strength(const QuadCertificate& cert, double lambda1,
                                       double alpha, double xi_max) {
  CouplingStrength out;
  if (!(lambda1 < 0.0)) {
    out.detail = fmt::format("lambda1 = {:.6g} is not negative; no finite coupling strength "
                             "satisfies the condition",
                             lambda1);
    return out;
  }
  if (!(alpha > 0.0) || !(xi_max > 0.0)) {
    throw DomainError("min_coupling_strength: alpha and xi_max must be positive");
  }
  const double drive = cert.delta.maxCoeff() * xi_max;
  const double c_star = drive > 0.0 ? drive / (-alpha * lambda1) : 0.0;
  const double c_check = c_star > 0.0 ? c_star * (1.0 + 1e-6) : 1e-6;
  out.c_star = c_star;
  out.verified = coupling_verdict(cert, xi_max, alpha, c_check, lambda1, "c* check");
  out.detail = fmt::format("c* = {:.6g}", c_star);
  return out;
}

ReducibleVerdict reducible_pinnability(const CouplingMatrix& a, std::size_t pin_node) {
  if (pin_node >= a.size()) {
    throw DomainError("reducible_pinnability: pin node out of range");
  }
  ReducibleVerdict out;
  out.condensation = scc_condensation(a.entries());
  const auto& cond = out.condensation;
  const auto roots = cond.root_blocks();
  const std::size_t pinned_block = cond.block_of(pin_node);

  bool ok = roots.size() == 1 && roots.front() == pinned_block;
  for (std::size_t b = 0; b < cond.block_count(); ++b) {
    std::string nodes;
    for (auto node : cond.blocks[b]) nodes += (nodes.empty() ? "" : ",") + std::to_string(node + 1);
    const bool is_root = std::find(roots.begin(), roots.end(), b) != roots.end();
    std::string status;
    if (is_root && b == pinned_block) {
      status = "root, pinned";
    } else if (is_root) {
      status = "root, not pinned";
    } else {
      // Topological order guarantees any input comes from an earlier block.
      status = "driven by an earlier block";
    }
    out.block_status.push_back(fmt::format("block {} {{{}}}: {}", b + 1, nodes, status));
  }
  // Non-root blocks have input by definition of root; with a single root the
  // chain from it reaches every block.
  std::string detail;
  if (roots.size() != 1) {
    detail = fmt::format("{} root blocks; a single controller cannot reach all of them",
                         roots.size());
  } else if (roots.front() != pinned_block) {
    detail = fmt::format("pinned node {} lies in block {}, not in the root block {}",
                         pin_node + 1, pinned_block + 1, roots.front() + 1);
  } else {
    detail = fmt::format("pinned node {} lies in the unique root block {}", pin_node + 1,
                         pinned_block + 1);
  }
  out.verdict = Verdict::from_margin(ok ? -1.0 : 1.0, 1.0, pinned_block, detail);
  return out;
}

}  // namespace pinning
