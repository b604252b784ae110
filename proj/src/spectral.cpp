#include "hamlearn/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "hamlearn/errors.hpp"

namespace hamlearn {

namespace {

using Eigen::Map;
using Eigen::VectorXd;

double dot(std::span<const double> a, std::span<const double> b) {
  return Map<const VectorXd>(a.data(), a.size()).dot(Map<const VectorXd>(b.data(), b.size()));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  Map<VectorXd>(y.data(), y.size()) += alpha * Map<const VectorXd>(x.data(), x.size());
}

double nrm2(std::span<const double> x) {
  return Map<const VectorXd>(x.data(), x.size()).norm();
}

void scal(double alpha, std::span<double> x) {
  Map<VectorXd>(x.data(), x.size()) *= alpha;
}

}  // namespace

double norm(const StateVector& psi) {
  return nrm2(psi.amplitudes);
}

void normalize(StateVector& psi) {
  const double n = norm(psi);
  if (n == 0.0) throw ContractError("normalize: zero state");
  scal(1.0 / n, psi.amplitudes);
}

HamiltonianAction::HamiltonianAction(const CouplingMatrix& j, double omega, double delta)
    : n_(0), omega_(omega) {
  const int n = j.n_atoms;
  if (n < 1 || n > 30) throw ContractError("HamiltonianAction: unsupported spin count");
  n_ = n;
  const std::size_t d = std::size_t{1} << n;
  diag_.assign(d, 0.0);

  // ZZ part, one sequential pass per coupled pair.
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      const double jik = j.j(i, k);
      if (jik == 0.0) continue;
      const std::uint64_t mi = 1ULL << i, mk = 1ULL << k;
      for (std::uint64_t b = 0; b < d; ++b) {
        const bool same = ((b & mi) != 0) == ((b & mk) != 0);
        diag_[b] += same ? jik : -jik;
      }
    }
  }
  if (delta != 0.0) {
    for (std::uint64_t b = 0; b < d; ++b) {
      diag_[b] += delta * (n - 2 * std::popcount(b));
    }
  }
}

void HamiltonianAction::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t d = dim();
  if (x.size() != d || y.size() != d) {
    throw ContractError("HamiltonianAction::apply: dimension mismatch");
  }
  for (std::size_t b = 0; b < d; ++b) y[b] = diag_[b] * x[b];
  if (omega_ == 0.0) return;
  for (int i = 0; i < n_; ++i) {
    const std::size_t stride = std::size_t{1} << i;
    for (std::size_t base = 0; base < d; base += 2 * stride) {
      for (std::size_t off = 0; off < stride; ++off) {
        const std::size_t lo = base + off;
        const std::size_t hi = lo + stride;
        const double xl = x[lo], xh = x[hi];
        y[lo] += omega_ * xh;
        y[hi] += omega_ * xl;
      }
    }
  }
}

StateVector apply_hamiltonian(const StateVector& psi, const CouplingMatrix& j,
                              double omega, double delta) {
  if (psi.n_spins != j.n_atoms) {
    throw ContractError("apply_hamiltonian: state/coupling dimension mismatch");
  }
  HamiltonianAction h(j, omega, delta);
  StateVector out;
  out.n_spins = psi.n_spins;
  out.amplitudes.resize(psi.dim());
  h.apply(psi.amplitudes, out.amplitudes);
  return out;
}

namespace {

// Sign convention: largest-magnitude amplitude positive, ties by lowest index.
void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  double mag = 0.0;
  for (std::size_t b = 0; b < v.size(); ++b) {
    if (std::abs(v[b]) > mag) {
      mag = std::abs(v[b]);
      best = b;
    }
  }
  if (v[best] < 0.0) {
    for (auto& a : v) a = -a;
  }
}

}  // namespace

GroundStateResult ground_state(const CouplingMatrix& j, double omega, double delta,
                               const GroundStateOptions& opts) {
  const int n = j.n_atoms;
  if (n < 1) throw ContractError("ground_state: empty system");
  if (n > opts.n_atoms_cap) {
    throw ConfigError("ground_state: " + std::to_string(n) + " spins exceeds cap " +
                      std::to_string(opts.n_atoms_cap));
  }
  if (!(opts.tol > 0.0)) throw ConfigError("ground_state: tol must be positive");

  const HamiltonianAction h(j, omega, delta);
  const std::size_t d = h.dim();
  const int m_max = std::max(2, static_cast<int>(std::min<std::size_t>(opts.max_krylov, d)));

  // Start vector with the ground state's guaranteed sign pattern: all-plus
  // for omega <= 0, parity-alternating for omega > 0. Its overlap with the
  // ground state is strictly positive for omega != 0.
  std::vector<double> v(d);
  const double amp = 1.0 / std::sqrt(static_cast<double>(d));
  if (omega > 0.0) {
    for (std::uint64_t b = 0; b < d; ++b) v[b] = (std::popcount(b) & 1) ? -amp : amp;
  } else {
    std::fill(v.begin(), v.end(), amp);
  }

  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;  // tridiagonal coefficients
  std::vector<double> w(d), ritz(d);

  GroundStateResult res;
  res.state.n_spins = n;

  double energy = 0.0;
  for (int cycle = 0; cycle <= opts.max_restarts; ++cycle) {
    basis.clear();
    alpha.clear();
    beta.clear();
    basis.push_back(v);

    bool breakdown = false;
    for (int k = 0; k < m_max; ++k) {
      h.apply(basis[k], w);
      ++res.matvecs;
      double a = dot(w, basis[k]);
      alpha.push_back(a);
      axpy(-a, basis[k], w);
      if (k > 0) axpy(-beta[k - 1], basis[k - 1], w);
      // Full reorthogonalization, two passes of classical Gram-Schmidt.
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) {
          const double c = dot(w, q);
          if (c != 0.0) axpy(-c, q, w);
        }
      }
      const double b = nrm2(w);
      if (b < 1e-14) {
        breakdown = true;
        break;
      }
      beta.push_back(b);
      scal(1.0 / b, w);
      basis.push_back(w);
    }

    // Smallest Ritz pair of the tridiagonal block.
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    energy = es.eigenvalues()(0);
    const Eigen::VectorXd y = es.eigenvectors().col(0);

    std::fill(ritz.begin(), ritz.end(), 0.0);
    for (int i = 0; i < m; ++i) axpy(y(i), basis[i], ritz);
    const double rn = nrm2(ritz);
    scal(1.0 / rn, ritz);

    h.apply(ritz, w);
    ++res.matvecs;
    axpy(-energy, ritz, w);
    res.residual = nrm2(w);
    res.restarts = cycle;

    if (res.residual < opts.tol || breakdown) {
      if (res.residual >= opts.tol && breakdown) {
        // Invariant Krylov subspace: the Ritz pair is exact up to roundoff.
        if (res.residual > 1e3 * opts.tol) {
          std::ostringstream msg;
          msg << "ground_state: Krylov breakdown with residual " << res.residual;
          throw SolverError(msg.str());
        }
      }
      res.energy = energy;
      res.state.amplitudes = ritz;
      fix_sign(res.state.amplitudes);
      return res;
    }
    v = ritz;  // restart from the current Ritz vector
  }

  std::ostringstream msg;
  msg << "ground_state: no convergence after " << opts.max_restarts << " restarts of "
      << m_max << " Lanczos steps; energy " << energy << ", residual " << res.residual
      << ", tol " << opts.tol;
  throw SolverError(msg.str());
}

ObservableSet exact_observables(const StateVector& psi, const AdjacencySets& adj,
                                double omega, double delta) {
  const std::size_t d = psi.dim();
  const int n = psi.n_spins;
  ObservableSet obs;
  obs.omega = omega;
  obs.delta = delta;
  obs.magnetization_z.assign(n, 0.0);

  for (std::uint64_t b = 0; b < d; ++b) {
    const double p = psi.amplitudes[b] * psi.amplitudes[b];
    if (p == 0.0) continue;
    for (int i = 0; i < n; ++i) obs.magnetization_z[i] += p * spin_sign(b, i);
  }

  const auto diag_corr = [&](const std::vector<std::pair<int, int>>& edges) {
    std::vector<double> out(edges.size(), 0.0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::uint64_t mi = 1ULL << edges[e].first;
      const std::uint64_t mk = 1ULL << edges[e].second;
      double acc = 0.0;
      for (std::uint64_t b = 0; b < d; ++b) {
        const double p = psi.amplitudes[b] * psi.amplitudes[b];
        acc += (((b & mi) != 0) == ((b & mk) != 0)) ? p : -p;
      }
      out[e] = acc;
    }
    return out;
  };
  const auto flip_corr = [&](const std::vector<std::pair<int, int>>& edges) {
    std::vector<double> out(edges.size(), 0.0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::uint64_t mask = (1ULL << edges[e].first) | (1ULL << edges[e].second);
      double acc = 0.0;
      for (std::uint64_t b = 0; b < d; ++b) {
        acc += psi.amplitudes[b] * psi.amplitudes[b ^ mask];
      }
      out[e] = acc;
    }
    return out;
  };

  obs.chi_z_nn = diag_corr(adj.nn_edges);
  obs.chi_z_nnn = diag_corr(adj.nnn_edges);
  obs.chi_x_nn = flip_corr(adj.nn_edges);
  obs.chi_x_nnn = flip_corr(adj.nnn_edges);
  return obs;
}

double staggered_order_parameter(const StateVector& psi, int rows, int cols) {
  const int n = rows * cols;
  if (psi.n_spins != n) throw ContractError("staggered_order_parameter: size mismatch");
  std::uint64_t even_mask = 0;
  for (int i = 0; i < n; ++i) {
    if (((i % cols) + (i / cols)) % 2 == 0) even_mask |= 1ULL << i;
  }
  const std::uint64_t odd_mask = ~even_mask & (psi.dim() - 1);
  const int n_even = std::popcount(even_mask);
  const int n_odd = n - n_even;
  double acc = 0.0;
  for (std::uint64_t b = 0; b < psi.dim(); ++b) {
    const double p = psi.amplitudes[b] * psi.amplitudes[b];
    if (p == 0.0) continue;
    const int se = n_even - 2 * std::popcount(b & even_mask);
    const int so = n_odd - 2 * std::popcount(b & odd_mask);
    const double mst = static_cast<double>(se - so) / n;
    acc += p * mst * mst;
  }
  return std::sqrt(acc);
}

double staggered_magnetization(const StateVector& psi, int rows, int cols) {
  const int n = rows * cols;
  if (psi.n_spins != n) throw ContractError("staggered_magnetization: size mismatch");
  std::vector<double> mag(n, 0.0);
  for (std::uint64_t b = 0; b < psi.dim(); ++b) {
    const double p = psi.amplitudes[b] * psi.amplitudes[b];
    if (p == 0.0) continue;
    for (int i = 0; i < n; ++i) mag[i] += p * spin_sign(b, i);
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const int sign = (((i % cols) + (i / cols)) % 2 == 0) ? 1 : -1;
    acc += sign * mag[i];
  }
  return acc / n;
}

void write_state(std::ostream& out, const StateVector& psi) {
  const std::uint64_t count = psi.amplitudes.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(psi.amplitudes.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
}

StateVector read_state(std::istream& in) {
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  if (!in || count == 0 || (count & (count - 1)) != 0) {
    throw ContractError("read_state: bad header");
  }
  StateVector psi;
  psi.n_spins = std::countr_zero(count);
  psi.amplitudes.resize(count);
  in.read(reinterpret_cast<char*>(psi.amplitudes.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw ContractError("read_state: truncated payload");
  return psi;
}

}  // namespace hamlearn
