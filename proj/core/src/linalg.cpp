#include "pinning/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace pinning {

namespace {

constexpr double kJacobiOffTolerance = 1e-12;
constexpr int kJacobiMaxSweeps = 100;

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

}  // namespace

double inf_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

bool is_strictly_negative(double value, double scale) {
  return value < -1e-9 * (1.0 + std::abs(scale));
}

void require_square_finite(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DomainError(std::string(what) + ": matrix must be square, got " +
                      std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  if (a.rows() == 0) {
    throw DomainError(std::string(what) + ": matrix must have at least one row");
  }
  if (!a.allFinite()) {
    throw DomainError(std::string(what) + ": matrix has non-finite entries");
  }
}

EigenDecomposition sym_eigen(const Matrix& input) {
  require_square_finite(input, "sym_eigen");
  const Eigen::Index m = input.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (std::abs(input(i, j) - input(j, i)) > kSymmetryTolerance) {
        throw SymmetryError("sym_eigen: matrix is not symmetric at (" + std::to_string(i + 1) +
                            "," + std::to_string(j + 1) + ")");
      }
    }
  }

  // Work on the exactly symmetrized copy.
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(m, m);
  const double scale = std::max(1.0, a.norm());

  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    const double off = off_diagonal_norm(a);
    if (off <= kJacobiOffTolerance || off <= 1e-15 * scale) break;
    for (Eigen::Index p = 0; p < m - 1; ++p) {
      for (Eigen::Index q = p + 1; q < m; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p,q); t is the smaller root of
        // t^2 + 2 theta t - 1 = 0.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < m; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < m; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  EigenDecomposition out{Vector(m), Matrix(m, m)};
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto src = idx[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    out.eigenvectors.col(k) = v.col(src);
  }
  return out;
}

double max_eigenvalue(const Matrix& a) { return sym_eigen(a).eigenvalues(0); }

double max_eigenvalue_of_symmetric_part(const Matrix& a) {
  require_square_finite(a, "max_eigenvalue_of_symmetric_part");
  return max_eigenvalue(0.5 * (a + a.transpose()));
}

std::size_t Condensation::block_of(std::size_t node) const {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (std::binary_search(blocks[b].begin(), blocks[b].end(), node)) return b;
  }
  throw DomainError("Condensation::block_of: node " + std::to_string(node + 1) +
                    " is not in any block");
}

std::vector<std::size_t> Condensation::order() const {
  std::vector<std::size_t> out;
  for (const auto& block : blocks) out.insert(out.end(), block.begin(), block.end());
  return out;
}

std::vector<std::size_t> Condensation::root_blocks() const {
  std::vector<bool> has_input(blocks.size(), false);
  for (const auto& [later, earlier] : block_edges) has_input[later] = true;
  std::vector<std::size_t> roots;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (!has_input[b]) roots.push_back(b);
  }
  return roots;
}

Condensation scc_condensation(const Matrix& a) {
  require_square_finite(a, "scc_condensation");
  const auto m = static_cast<std::size_t>(a.rows());
  const auto entry = [&](std::size_t i, std::size_t j) {
    return a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };

  // Tarjan over edges j -> i (a_ij > 0). Components complete in reverse
  // topological order, so the final list is reversed to put sources first.
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(m, kUnvisited);
  std::vector<std::size_t> low(m, 0);
  std::vector<bool> on_stack(m, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;

  std::function<void(std::size_t)> visit = [&](std::size_t j) {
    index[j] = low[j] = counter++;
    stack.push_back(j);
    on_stack[j] = true;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == j || !(entry(i, j) > 0.0)) continue;
      if (index[i] == kUnvisited) {
        visit(i);
        low[j] = std::min(low[j], low[i]);
      } else if (on_stack[i]) {
        low[j] = std::min(low[j], index[i]);
      }
    }
    if (low[j] == index[j]) {
      std::vector<std::size_t> component;
      std::size_t node = kUnvisited;
      do {
        node = stack.back();
        stack.pop_back();
        on_stack[node] = false;
        component.push_back(node);
      } while (node != j);
      std::sort(component.begin(), component.end());
      components.push_back(std::move(component));
    }
  };

  for (std::size_t j = 0; j < m; ++j) {
    if (index[j] == kUnvisited) visit(j);
  }
  std::reverse(components.begin(), components.end());

  Condensation out;
  out.blocks = std::move(components);
  std::vector<std::size_t> block(m, 0);
  for (std::size_t b = 0; b < out.blocks.size(); ++b) {
    for (auto node : out.blocks[b]) block[node] = b;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j && entry(i, j) > 0.0 && block[i] != block[j]) {
        out.block_edges.emplace(block[i], block[j]);
      }
    }
  }
  return out;
}

Vector left_null_vector(const Matrix& a, bool require_irreducible) {
  require_square_finite(a, "left_null_vector");
  const Eigen::Index m = a.rows();
  const double norm = inf_norm(a);
  const Vector row_sums = a.rowwise().sum();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(row_sums(i)) > 1e-12 * std::max(1.0, norm)) {
      throw DomainError("left_null_vector: row " + std::to_string(i + 1) +
                        " does not sum to zero");
    }
  }
  if (require_irreducible) {
    auto condensation = scc_condensation(a);
    if (!condensation.irreducible()) {
      throw ReducibilityError("left_null_vector: matrix is reducible (" +
                                  std::to_string(condensation.block_count()) +
                                  " strongly connected blocks)",
                              std::move(condensation));
    }
  }

  // Stack xi^T a = 0 with the normalization sum(xi) = 1 and solve in the
  // least-squares sense; the system is consistent for zero-row-sum input.
  Matrix system(m + 1, m);
  system.topRows(m) = a.transpose();
  system.row(m).setOnes();
  Vector rhs = Vector::Zero(m + 1);
  rhs(m) = 1.0;
  Vector xi = system.completeOrthogonalDecomposition().solve(rhs);
  xi /= xi.sum();

  const Vector residual = a.transpose() * xi;
  if (residual.cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, norm)) {
    throw DomainError("left_null_vector: least-squares residual too large");
  }
  return xi;
}

Matrix symmetrize_weighted(const Matrix& a, const Vector& xi) {
  require_square_finite(a, "symmetrize_weighted");
  if (xi.size() != a.rows()) {
    throw DomainError("symmetrize_weighted: weight vector has length " +
                      std::to_string(xi.size()) + ", expected " + std::to_string(a.rows()));
  }
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    if (!(xi(i) > 0.0) || !std::isfinite(xi(i))) {
      throw DomainError("symmetrize_weighted: weight " + std::to_string(i + 1) +
                        " must be strictly positive");
    }
  }
  const Eigen::Index m = a.rows();
  Matrix out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      const double value = 0.5 * (xi(i) * a(i, j) + a(j, i) * xi(j));
      out(i, j) = value;
      out(j, i) = value;
    }
  }
  return out;
}

}  // namespace pinning
