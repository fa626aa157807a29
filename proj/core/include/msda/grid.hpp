#ifndef MSDA_GRID_HPP
#define MSDA_GRID_HPP

#include <string>

#include <Eigen/Core>

#include "msda/errors.hpp"

namespace msda {

// Coordinate layout of a mask: either a flat vector of d coordinates or an
// n x n pixel grid. Pixels are 1-based (row, col) with row-major flattening
// index = (row-1)*n + (col-1); flat(n*n) and square(n) are distinct shapes.
class GridShape {
 public:
  static GridShape flat(Eigen::Index d) {
    if (d < 1) throw ParameterError("GridShape::flat: d must be >= 1");
    return GridShape(d, 0);
  }
  static GridShape square(int n) {
    if (n < 2) throw ParameterError("GridShape::square: n must be >= 2");
    return GridShape(static_cast<Eigen::Index>(n) * n, n);
  }

  Eigen::Index dim() const noexcept { return dim_; }
  bool is_square() const noexcept { return side_ > 0; }
  int side() const {
    if (!is_square()) throw ShapeError("GridShape: flat shape has no side");
    return side_;
  }

  // Flat index of 1-based pixel (row, col).
  Eigen::Index index(int row, int col) const {
    const int n = side();
    if (row < 1 || row > n || col < 1 || col > n)
      throw ParameterError("GridShape::index: pixel out of range");
    return static_cast<Eigen::Index>(row - 1) * n + (col - 1);
  }
  int row_of(Eigen::Index i) const { return static_cast<int>(i / side()) + 1; }
  int col_of(Eigen::Index i) const { return static_cast<int>(i % side()) + 1; }

  std::string describe() const {
    return is_square() ? "square:" + std::to_string(side_)
                       : "flat:" + std::to_string(dim_);
  }

  friend bool operator==(const GridShape& a, const GridShape& b) noexcept {
    return a.dim_ == b.dim_ && a.side_ == b.side_;
  }

 private:
  GridShape(Eigen::Index dim, int side) : dim_(dim), side_(side) {}
  Eigen::Index dim_;
  int side_;  // 0 for flat shapes
};

}  // namespace msda

#endif
