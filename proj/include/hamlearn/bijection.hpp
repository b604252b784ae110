#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hamlearn/dense.hpp"
#include "hamlearn/lattice.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

// Empirical checks of the one-to-one map between coupling matrices and
// ground-state spin-spin correlations at nonzero transverse field, plus a
// least-squares inversion recovering J from a correlation matrix.

// Full correlation matrix c_ij = <S^z_i S^z_j> (hbar = 1, so c = chi_z / 4
// and c_ii = 1/4) on the unique ground state, via the dense route.
// Throws DegeneracyError when the spectral gap falls below gap_tol.
Eigen::MatrixXd correlation_matrix(const CouplingMatrix& j, double omega, double delta,
                                   double gap_tol = 1e-10);

// Residuals of sum_{i<j} dJ_ij * s_i s_j = dE over every basis configuration;
// all of them vanish iff two Hamiltonians with couplings J1, J2 and ground
// energies E1, E2 share a fully supported ground state.
std::vector<double> energy_shift_constraint_residuals(const CouplingMatrix& j1,
                                                      const CouplingMatrix& j2,
                                                      double e1, double e2);

enum class CouplingEnsemble {
  Physical,   // couplings of a disordered geometry
  Synthetic,  // all pairs uniform in [0.1, 10] rad/us
  Mixed,      // alternate between the two
};

struct Topology {
  int rows = 0;
  int cols = 0;
};

struct InjectivityReport {
  int n_spins = 0;
  int trials = 0;
  double omega = 0.0;
  double delta = 0.0;
  double j_tol = 1e-3;
  double c_floor = 1e-8;
  int violations = 0;
  // over trial pairs with ||J1-J2||_inf > j_tol
  double min_c_distance = 0.0;
  double min_j_distance = 0.0;
  int skipped_close_pairs = 0;

  std::string to_json() const;
};

InjectivityReport verify_injectivity(const Topology& topo, int trials, double omega,
                                     double delta, std::uint64_t seed,
                                     CouplingEnsemble ensemble = CouplingEnsemble::Mixed,
                                     double j_tol = 1e-3, double c_floor = 1e-8);

struct LemmaStats {
  int n_spins = 0;
  int trials = 0;
  double omega_min = 0.0, omega_max = 0.0;
  double min_gap = 0.0;
  double min_amplitude = 0.0;
  bool gap_positive = false;        // all gaps > 1e-10
  bool amplitudes_nonzero = false;  // all min |psi(b)| > 1e-12

  std::string to_json() const;
};

// Random instances with |omega| drawn in [omega_abs_min, omega_abs_max] and
// random sign; records the spectral gap and the smallest amplitude magnitude.
LemmaStats verify_lemma(const Topology& topo, int trials, double omega_abs_min,
                        double omega_abs_max, double delta, std::uint64_t seed);

// The zero-field degenerate counterexample: gap vanishes and doubling J
// leaves the correlations unchanged.
struct ZeroFieldCounterexample {
  double gap = 0.0;
  double c_distance_under_j_doubling = 0.0;
  bool degenerate = false;
};
ZeroFieldCounterexample zero_field_counterexample(const Topology& topo);

struct InversionOptions {
  double tol = 1e-10;          // on sqrt(objective)
  int max_iterations = 200;
  double fd_step_rel = 1e-6;   // finite-difference step relative to J scale
  double gap_tol = 1e-10;
};

struct InversionResult {
  CouplingMatrix j;
  double residual = 0.0;  // sqrt(sum of squared c mismatches)
  int iterations = 0;
};

// Damped Gauss-Newton (Levenberg-Marquardt) on the upper-triangle couplings
// with a finite-difference Jacobian. Requires omega != 0.
InversionResult invert_correlators(const Eigen::MatrixXd& c_target, double omega,
                                   double delta, const CouplingMatrix& j_init,
                                   const InversionOptions& opts = {});

}  // namespace hamlearn
