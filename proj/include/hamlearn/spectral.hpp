#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hamlearn/lattice.hpp"

namespace hamlearn {

// Real-amplitude wave function over the 2^n computational basis.
// Basis convention: bit i of index b encodes sigma^z_i, 0 -> +1, 1 -> -1.
struct StateVector {
  int n_spins = 0;
  std::vector<double> amplitudes;

  std::size_t dim() const { return std::size_t{1} << n_spins; }
};

inline double spin_sign(std::uint64_t b, int i) {
  return ((b >> i) & 1ULL) ? -1.0 : 1.0;
}

double norm(const StateVector& psi);
void normalize(StateVector& psi);

// Ground-state expectation values on a fixed adjacency. chi_x fields are
// absent when no X-basis information was available.
struct ObservableSet {
  double omega = 0.0;
  double delta = 0.0;
  std::vector<double> magnetization_z;              // per site
  std::vector<double> chi_z_nn;                     // per adj.nn_edges entry
  std::vector<double> chi_z_nnn;                    // per adj.nnn_edges entry
  std::optional<std::vector<double>> chi_x_nn;
  std::optional<std::vector<double>> chi_x_nnn;
};

// Matrix-free action of H = sum_{i<j} J_ij s^z_i s^z_j + omega * sum_i s^x_i
//                          + delta * sum_i s^z_i.
// The ZZ + detuning part is precomputed as a diagonal; the transverse part
// is applied as one single-bit-flip pass per spin.
class HamiltonianAction {
 public:
  HamiltonianAction(const CouplingMatrix& j, double omega, double delta);

  // y = H x. Aliasing is not allowed.
  void apply(std::span<const double> x, std::span<double> y) const;

  int n_spins() const { return n_; }
  std::size_t dim() const { return std::size_t{1} << n_; }
  const std::vector<double>& diagonal() const { return diag_; }
  double omega() const { return omega_; }

 private:
  int n_;
  double omega_;
  std::vector<double> diag_;
};

StateVector apply_hamiltonian(const StateVector& psi, const CouplingMatrix& j,
                              double omega, double delta);

struct GroundStateOptions {
  double tol = 1e-10;     // convergence on ||H psi - E psi||, rad/us
  int max_krylov = 80;    // Krylov block size per restart cycle
  int max_restarts = 80;
  int n_atoms_cap = 22;   // refuse larger problems (memory guard)
};

struct GroundStateResult {
  double energy = 0.0;  // rad/us
  StateVector state;
  double residual = 0.0;
  int matvecs = 0;
  int restarts = 0;
};

// Lanczos with full reorthogonalization and explicit restarting. The returned
// state is normalized and sign-fixed: its largest-magnitude amplitude is
// positive (ties broken by lowest basis index).
GroundStateResult ground_state(const CouplingMatrix& j, double omega, double delta,
                               const GroundStateOptions& opts = {});

ObservableSet exact_observables(const StateVector& psi, const AdjacencySets& adj,
                                double omega, double delta);

// Staggered structure factor sqrt(<M_st^2>) with
// M_st = (1/N) sum_i (-1)^{x_i+y_i} s^z_i. Detects antiferromagnetic order in
// symmetric finite-size ground states where <s^z_i> itself vanishes.
double staggered_order_parameter(const StateVector& psi, int rows, int cols);

// Per-site staggered magnetization (1/N) sum_i (-1)^{x_i+y_i} <s^z_i>;
// meaningful at nonzero detuning where the symmetric form is not forced to
// zero.
double staggered_magnetization(const StateVector& psi, int rows, int cols);

// Binary dump: 8-byte little-endian count, then count little-endian doubles.
void write_state(std::ostream& out, const StateVector& psi);
StateVector read_state(std::istream& in);

}  // namespace hamlearn
