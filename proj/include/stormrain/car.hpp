#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "stormrain/grid.hpp"

namespace stormrain {

// Neighbourhood structure for the spatially correlated effect: a 0/1
// adjacency over the modelled cells (8-neighbour, i.e. sharing an edge or a
// corner), with everything derived from it that the sampler needs repeatedly.
struct CarStructure {
  std::vector<int> cells;                 // modelled cells, ascending linear ids
  std::vector<std::vector<int>> neighbors;  // indices into `cells`
  int max_degree = 0;                     // row-sum bound m of the adjacency
  Eigen::VectorXd eigenvalues;            // spectrum of the adjacency matrix

  int size() const { return static_cast<int>(cells.size()); }

  // Upper end of the valid association range [0, 1/m).
  double rho_limit() const {
    return max_degree > 0 ? 1.0 / max_degree
                          : std::numeric_limits<double>::infinity();
  }
};

inline CarStructure car_structure(const Grid& grid,
                                  const std::vector<int>& modeled_cells) {
  CarStructure s;
  s.cells = modeled_cells;
  std::sort(s.cells.begin(), s.cells.end());
  s.cells.erase(std::unique(s.cells.begin(), s.cells.end()), s.cells.end());
  if (s.cells.empty()) {
    throw std::invalid_argument("spatial structure needs at least one cell");
  }
  for (int c : s.cells) {
    if (c < 0 || c >= grid.size()) {
      throw std::invalid_argument("modeled cell id outside the grid");
    }
  }

  const int n = s.size();
  std::vector<int> index_of(static_cast<std::size_t>(grid.size()), -1);
  for (int i = 0; i < n; ++i) index_of[static_cast<std::size_t>(s.cells[i])] = i;

  s.neighbors.resize(static_cast<std::size_t>(n));
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int nb : grid.neighbors(s.cells[static_cast<std::size_t>(i)])) {
      const int j = index_of[static_cast<std::size_t>(nb)];
      if (j < 0) continue;  // neighbour not part of the modelled set
      s.neighbors[static_cast<std::size_t>(i)].push_back(j);
      b(i, j) = 1.0;
    }
    s.max_degree = std::max(
        s.max_degree,
        static_cast<int>(s.neighbors[static_cast<std::size_t>(i)].size()));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("adjacency eigendecomposition failed");
  }
  s.eigenvalues = solver.eigenvalues();
  return s;
}

inline void check_rho(const CarStructure& s, double rho) {
  if (!(rho >= 0.0) || !(rho < s.rho_limit())) {
    throw std::invalid_argument(
        "spatial association must lie in [0, 1/max_degree)");
  }
}

// Precision matrix prec * (I - rho * B). Positive definite across the whole
// admissible rho range because rho * max |eigenvalue| < 1.
inline Eigen::SparseMatrix<double> car_precision(const CarStructure& s,
                                                 double rho, double prec) {
  check_rho(s, rho);
  if (!(prec > 0.0)) {
    throw std::invalid_argument("spatial precision must be positive");
  }
  const int n = s.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 9);
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, prec);
    for (int j : s.neighbors[static_cast<std::size_t>(i)]) {
      trip.emplace_back(i, j, -prec * rho);
    }
  }
  Eigen::SparseMatrix<double> q(n, n);
  q.setFromTriplets(trip.begin(), trip.end());
  return q;
}

// log det(I - rho * B) from the precomputed spectrum.
inline double car_logdet(const CarStructure& s, double rho) {
  check_rho(s, rho);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    acc += std::log1p(-rho * s.eigenvalues[i]);
  }
  return acc;
}

}  // namespace stormrain
