#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hamlearn {

// Van der Waals coefficient over hbar for Rb 70s pair states, rad*us^-1*um^6.
inline constexpr double kDefaultC6 = 5.42e6;

// Rectangular atom array with per-atom position disorder. Atom i occupies
// nominal lattice site (x, y) = (i % cols, i / cols); positions are the
// nominal points plus a uniform per-axis offset in
// [-disorder_amplitude_um, +disorder_amplitude_um].
struct Geometry {
  int rows = 0;
  int cols = 0;
  double nominal_spacing_um = 0.0;
  double disorder_amplitude_um = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::array<double, 2>> positions_um;

  int n_atoms() const { return rows * cols; }
  int lattice_x(int i) const { return i % cols; }
  int lattice_y(int i) const { return i / cols; }
};

// Symmetric pairwise interaction strengths J_ij = c6 / R_ij^6, rad*us^-1.
struct CouplingMatrix {
  int n_atoms = 0;
  double c6 = 0.0;
  std::vector<double> j_rad_per_us;  // dense n x n, zero diagonal

  double j(int i, int k) const { return j_rad_per_us[static_cast<std::size_t>(i) * n_atoms + k]; }
  double& j(int i, int k) { return j_rad_per_us[static_cast<std::size_t>(i) * n_atoms + k]; }
};

// Edges of the nominal lattice graph, as index pairs with first < second.
// NN edges join sites at Manhattan distance 1; NNN edges join the diagonals
// of every unit plaquette. Disorder never changes adjacency.
struct AdjacencySets {
  std::vector<std::pair<int, int>> nn_edges;
  std::vector<std::pair<int, int>> nnn_edges;
};

Geometry build_geometry(int rows, int cols, double spacing_um,
                        double disorder_amplitude_um, std::uint64_t seed);

double pair_distance_um(const Geometry& geom, int i, int k);

CouplingMatrix couplings(const Geometry& geom, double c6 = kDefaultC6);

AdjacencySets adjacency(int rows, int cols);

// JSON record {rows, cols, spacing_um, disorder_amplitude_um, seed,
// positions: [[x,y],...]} with full-precision floats.
std::string geometry_to_json(const Geometry& geom);
Geometry geometry_from_json(const std::string& text);

}  // namespace hamlearn
