#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stormrain/time.hpp"

namespace stormrain {

// Cell address on the analysis grid. `row` indexes the y direction (0 at the
// origin edge), `col` the x direction.
struct CellIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Regular n1 x n2 grid of square cells in projected metric coordinates.
// n1 = number of rows (y), n2 = number of columns (x).
struct Grid {
  double origin_x_m = 0.0;
  double origin_y_m = 0.0;
  double cell_size_m = 10000.0;
  int n1 = 0;
  int n2 = 0;

  friend bool operator==(const Grid&, const Grid&) = default;

  Grid() = default;
  Grid(double ox, double oy, double cell, int rows, int cols)
      : origin_x_m(ox), origin_y_m(oy), cell_size_m(cell), n1(rows), n2(cols) {
    if (cell_size_m <= 0.0 || n1 <= 0 || n2 <= 0) {
      throw std::invalid_argument("grid requires positive cell size and size");
    }
  }

  int size() const { return n1 * n2; }
  double cell_area_m2() const { return cell_size_m * cell_size_m; }
  double cell_area_km2() const { return cell_area_m2() / 1e6; }

  bool valid(CellIndex c) const {
    return c.row >= 0 && c.row < n1 && c.col >= 0 && c.col < n2;
  }

  int linear(CellIndex c) const {
    if (!valid(c)) {
      throw std::invalid_argument("cell (" + std::to_string(c.row) + "," +
                                  std::to_string(c.col) + ") outside grid");
    }
    return c.row * n2 + c.col;
  }

  CellIndex cell_of(int linear_id) const {
    if (linear_id < 0 || linear_id >= size()) {
      throw std::invalid_argument("linear cell id outside grid");
    }
    return {linear_id / n2, linear_id % n2};
  }

  // Cell containing a point; false when the point is outside the rectangle.
  bool locate(double x_m, double y_m, CellIndex& out) const {
    const double fx = (x_m - origin_x_m) / cell_size_m;
    const double fy = (y_m - origin_y_m) / cell_size_m;
    if (fx < 0.0 || fy < 0.0) return false;
    const int col = static_cast<int>(std::floor(fx));
    const int row = static_cast<int>(std::floor(fy));
    if (row >= n1 || col >= n2) return false;
    out = {row, col};
    return true;
  }

  double center_x(CellIndex c) const {
    return origin_x_m + (c.col + 0.5) * cell_size_m;
  }
  double center_y(CellIndex c) const {
    return origin_y_m + (c.row + 0.5) * cell_size_m;
  }

  // Second-order (queen) neighborhood: the up-to-8 surrounding cells, in
  // row-major order. First-order (rook) drops the diagonals.
  std::vector<int> neighbors(int linear_id, bool second_order = true) const {
    const CellIndex c = cell_of(linear_id);
    std::vector<int> out;
    out.reserve(8);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        if (!second_order && dr != 0 && dc != 0) continue;
        const CellIndex n{c.row + dr, c.col + dc};
        if (valid(n)) out.push_back(linear(n));
      }
    }
    return out;
  }
};

}  // namespace stormrain
