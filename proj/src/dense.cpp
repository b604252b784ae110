#include "hamlearn/dense.hpp"

#include <lapacke.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "hamlearn/errors.hpp"

namespace hamlearn {

std::vector<double> dense_hamiltonian(const CouplingMatrix& j, double omega, double delta) {
  const int n = j.n_atoms;
  if (n < 1 || n > 14) throw ContractError("dense_hamiltonian: supports 1..14 spins");
  const std::size_t d = std::size_t{1} << n;
  std::vector<double> h(d * d, 0.0);
  for (std::uint64_t b = 0; b < d; ++b) {
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      const double si = spin_sign(b, i);
      diag += delta * si;
      for (int k = i + 1; k < n; ++k) diag += j.j(i, k) * si * spin_sign(b, k);
    }
    h[b * d + b] = diag;
    for (int i = 0; i < n; ++i) h[b * d + (b ^ (1ULL << i))] = omega;
  }
  return h;
}

DenseEigenResult dense_lowest_eigenpairs(const CouplingMatrix& j, double omega,
                                         double delta, int k) {
  const int n = j.n_atoms;
  std::vector<double> h = dense_hamiltonian(j, omega, delta);
  const lapack_int d = lapack_int{1} << n;
  k = std::max(1, std::min<int>(k, d));

  std::vector<double> w(d), z(static_cast<std::size_t>(d) * k);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(k));
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_ROW_MAJOR, 'V', 'I', 'U', d, h.data(), d, 0.0, 0.0, 1, k,
                     0.0, &found, w.data(), z.data(), k, isuppz.data());
  if (info != 0 || found < k) {
    throw SolverError("dense_lowest_eigenpairs: LAPACKE_dsyevr info=" + std::to_string(info));
  }

  DenseEigenResult res;
  res.eigenvalues.assign(w.begin(), w.begin() + k);
  res.ground.n_spins = n;
  res.ground.amplitudes.resize(d);
  for (lapack_int b = 0; b < d; ++b) {
    res.ground.amplitudes[b] = z[static_cast<std::size_t>(b) * k];
  }
  normalize(res.ground);
  // Same sign convention as the iterative solver.
  std::size_t best = 0;
  double mag = 0.0;
  for (std::size_t b = 0; b < res.ground.amplitudes.size(); ++b) {
    if (std::abs(res.ground.amplitudes[b]) > mag) {
      mag = std::abs(res.ground.amplitudes[b]);
      best = b;
    }
  }
  if (res.ground.amplitudes[best] < 0.0) {
    for (auto& a : res.ground.amplitudes) a = -a;
  }
  return res;
}

}  // namespace hamlearn
