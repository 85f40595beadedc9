#pragma once

// Function-space algebra on the uniform midpoint grid of [0,1].
//
// Curves are Eigen vectors of length G, surfaces are G x G matrices with the
// row index playing t and the column index playing s. Integrals use the
// midpoint rule with uniform weight 1/G, so every operator is a scaled matrix
// product.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace lrcov {

using Curve = Eigen::VectorXd;
using Surface = Eigen::MatrixXd;

class Grid {
 public:
  explicit Grid(int size);

  int size() const noexcept { return size_; }
  double weight() const noexcept { return 1.0 / size_; }
  /// t_g = (g + 1/2) / G for the 0-based index g.
  double point(int g) const noexcept { return (g + 0.5) / size_; }
  Eigen::VectorXd points() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int size_;
};

/// Fourth-order tensor L(t,s,t',s'). Only materialized on small grids.
class Quartic {
 public:
  static constexpr int kMaxGrid = 64;

  explicit Quartic(int grid_size);

  int grid_size() const noexcept { return g_; }
  double& operator()(int t, int s, int tp, int sp) { return data_[index(t, s, tp, sp)]; }
  double operator()(int t, int s, int tp, int sp) const { return data_[index(t, s, tp, sp)]; }

 private:
  std::size_t index(int t, int s, int tp, int sp) const noexcept {
    const auto g = static_cast<std::size_t>(g_);
    return ((static_cast<std::size_t>(t) * g + s) * g + tp) * g + sp;
  }

  int g_;
  std::vector<double> data_;
};

double inner_product(const Curve& f, const Curve& g);
double l2_norm(const Curve& f);
double l2_norm_surface(const Surface& s);
/// Double integral of a surface.
double surface_integral(const Surface& s);
/// Right integration: (S f)(t) = int S(t,s) f(s) ds.
Curve apply_operator(const Surface& s, const Curve& f);

/// phi_1 = 1, phi_{2k} = sqrt2 cos(2 pi k t), phi_{2k+1} = sqrt2 sin(2 pi k t).
std::vector<Curve> fourier_basis(const Grid& grid, int count);

/// max|S - S^T| <= rel_tol * max|S| (a zero surface is symmetric).
bool is_symmetric(const Surface& s, double rel_tol = 1e-10);
double max_asymmetry(const Surface& s);

/// Throws DimensionError unless `s` is square with side `grid.size()`.
void require_on_grid(const Surface& s, const Grid& grid);

}  // namespace lrcov
