#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "epiwave/error.hpp"

namespace epiwave {

using Point = std::array<double, 2>;  // second coordinate unused when d = 1

// Uniform midpoint grid on the period cell [0,1)^d and on the window
// [-R, R)^d, R an integer number of cells.
class PeriodicGrid {
 public:
  PeriodicGrid(int dim, int cell_points, int window_radius)
      : dim_(dim), n_(cell_points), R_(window_radius) {
    require(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
    require(cell_points >= 8, "cell_points must be at least 8");
    require(window_radius >= 1, "window_radius must be a positive integer");
  }

  int dim() const { return dim_; }
  int cell_points() const { return n_; }
  int window_radius() const { return R_; }
  double spacing() const { return 1.0 / n_; }
  double weight() const { return dim_ == 1 ? spacing() : spacing() * spacing(); }

  // Points along one axis of the window.
  int window_points_1d() const { return 2 * R_ * n_; }
  std::size_t cell_size() const { return dim_ == 1 ? n_ : std::size_t(n_) * n_; }
  std::size_t window_size() const {
    const std::size_t m = window_points_1d();
    return dim_ == 1 ? m : m * m;
  }

  double cell_coord(int i) const { return (i + 0.5) * spacing(); }
  double window_coord(int a) const { return -R_ + (a + 0.5) * spacing(); }

  Point cell_point(std::size_t i) const {
    if (dim_ == 1) return {cell_coord(int(i)), 0.0};
    return {cell_coord(int(i % n_)), cell_coord(int(i / n_))};
  }
  Point window_point(std::size_t a) const {
    if (dim_ == 1) return {window_coord(int(a)), 0.0};
    const std::size_t m = window_points_1d();
    return {window_coord(int(a % m)), window_coord(int(a / m))};
  }

  // Axis-wise decomposition of a window index into (cell index, lattice cell).
  std::array<int, 2> axis_index(std::size_t a) const {
    if (dim_ == 1) return {int(a), 0};
    const std::size_t m = window_points_1d();
    return {int(a % m), int(a / m)};
  }
  std::size_t cell_index_of(std::size_t a) const {
    auto ax = axis_index(a);
    if (dim_ == 1) return std::size_t(ax[0] % n_);
    return std::size_t(ax[0] % n_) + std::size_t(n_) * std::size_t(ax[1] % n_);
  }
  // Lattice vector k with window_point(a) = cell_point(cell_index_of(a)) + k.
  std::array<int, 2> lattice_of(std::size_t a) const {
    auto ax = axis_index(a);
    return {ax[0] / n_ - R_, dim_ == 1 ? 0 : ax[1] / n_ - R_};
  }
  // Window index from axis indices; returns false when outside the window.
  bool window_index(int a0, int a1, std::size_t& out) const {
    const int m = window_points_1d();
    if (a0 < 0 || a0 >= m) return false;
    if (dim_ == 1) {
      out = std::size_t(a0);
      return true;
    }
    if (a1 < 0 || a1 >= m) return false;
    out = std::size_t(a0) + std::size_t(m) * std::size_t(a1);
    return true;
  }

  double norm(const Point& p) const {
    return dim_ == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
  }
  double window_norm(std::size_t a) const { return norm(window_point(a)); }

  // Window indices with |x| <= r (the ball B_r).
  std::vector<std::size_t> ball(double r) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < window_size(); ++a)
      if (window_norm(a) <= r) out.push_back(a);
    return out;
  }

 private:
  int dim_;
  int n_;
  int R_;
};

}  // namespace epiwave
