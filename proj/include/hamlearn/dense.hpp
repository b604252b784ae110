#pragma once

#include <vector>

#include "hamlearn/lattice.hpp"
#include "hamlearn/spectral.hpp"

namespace hamlearn {

// Dense route for small systems: materialize H in the computational basis and
// diagonalize with LAPACK. Independent of the matrix-free path; serves as the
// verification oracle and backs the correlator-inversion machinery.

// Row-major dense H, dimension 2^n x 2^n. n <= 14 guard.
std::vector<double> dense_hamiltonian(const CouplingMatrix& j, double omega, double delta);

struct DenseEigenResult {
  std::vector<double> eigenvalues;  // lowest k, ascending
  StateVector ground;               // normalized, sign-fixed
  double gap() const { return eigenvalues.at(1) - eigenvalues.at(0); }
};

// Lowest k eigenpairs (k >= 1); eigenvector returned only for the ground state.
DenseEigenResult dense_lowest_eigenpairs(const CouplingMatrix& j, double omega,
                                         double delta, int k = 2);

}  // namespace hamlearn
