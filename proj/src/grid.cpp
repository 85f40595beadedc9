#include "lrcov/grid.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lrcov/errors.hpp"

namespace lrcov {

Grid::Grid(int size) : size_(size) {
  if (size < 1) throw ContractError("grid size must be >= 1, got " + std::to_string(size));
}

Eigen::VectorXd Grid::points() const {
  Eigen::VectorXd t(size_);
  for (int g = 0; g < size_; ++g) t[g] = point(g);
  return t;
}

Quartic::Quartic(int grid_size) : g_(grid_size) {
  if (grid_size < 1 || grid_size > kMaxGrid) {
    throw ContractError("quartic tensors are only materialized for 1 <= G <= " +
                        std::to_string(kMaxGrid) + "; use the contracted forms instead");
  }
  const auto g = static_cast<std::size_t>(g_);
  data_.assign(g * g * g * g, 0.0);
}

double inner_product(const Curve& f, const Curve& g) {
  if (f.size() != g.size()) {
    throw DimensionError("inner_product: length " + std::to_string(f.size()) + " vs " +
                         std::to_string(g.size()));
  }
  if (f.size() == 0) throw DimensionError("inner_product: empty curves");
  return f.dot(g) / static_cast<double>(f.size());
}

double l2_norm(const Curve& f) { return std::sqrt(inner_product(f, f)); }

double l2_norm_surface(const Surface& s) {
  if (s.size() == 0) return 0.0;
  return s.norm() / std::sqrt(static_cast<double>(s.rows()) * static_cast<double>(s.cols()));
}

double surface_integral(const Surface& s) {
  if (s.size() == 0) return 0.0;
  return s.sum() / (static_cast<double>(s.rows()) * static_cast<double>(s.cols()));
}

Curve apply_operator(const Surface& s, const Curve& f) {
  if (s.cols() != f.size() || s.rows() != s.cols()) {
    throw DimensionError("apply_operator: surface " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()) + " vs curve of length " +
                         std::to_string(f.size()));
  }
  return (s * f) / static_cast<double>(f.size());
}

std::vector<Curve> fourier_basis(const Grid& grid, int count) {
  if (count < 1) throw ContractError("fourier_basis: need at least one basis function");
  if (count > grid.size()) {
    throw ContractError("fourier_basis: " + std::to_string(count) +
                        " functions are under-resolved on a grid of " +
                        std::to_string(grid.size()) + " points");
  }
  const Eigen::VectorXd t = grid.points();
  std::vector<Curve> basis;
  basis.reserve(static_cast<std::size_t>(count));
  basis.push_back(Curve::Ones(grid.size()));
  for (int j = 2; j <= count; ++j) {
    const int k = j / 2;
    const double freq = 2.0 * std::numbers::pi * k;
    Curve phi(grid.size());
    for (int g = 0; g < grid.size(); ++g) {
      phi[g] = std::numbers::sqrt2 * (j % 2 == 0 ? std::cos(freq * t[g]) : std::sin(freq * t[g]));
    }
    basis.push_back(std::move(phi));
  }
  return basis;
}

double max_asymmetry(const Surface& s) {
  if (s.rows() != s.cols()) return std::numeric_limits<double>::infinity();
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

bool is_symmetric(const Surface& s, double rel_tol) {
  if (s.rows() != s.cols()) return false;
  if (s.size() == 0) return true;
  const double scale = s.cwiseAbs().maxCoeff();
  return max_asymmetry(s) <= rel_tol * scale;
}

void require_on_grid(const Surface& s, const Grid& grid) {
  if (s.rows() != grid.size() || s.cols() != grid.size()) {
    throw DimensionError("surface is " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()) + ", grid has " +
                         std::to_string(grid.size()) + " points");
  }
}

}  // namespace lrcov
