#include "hamlearn/bijection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "hamlearn/errors.hpp"
#include "hamlearn/spectral.hpp"

namespace hamlearn {

Eigen::MatrixXd correlation_matrix(const CouplingMatrix& j, double omega, double delta,
                                   double gap_tol) {
  const int n = j.n_atoms;
  if (n < 2 || n > 12) throw ContractError("correlation_matrix: supports 2..12 spins");
  const DenseEigenResult eig = dense_lowest_eigenpairs(j, omega, delta, 2);
  if (eig.gap() < gap_tol) {
    throw DegeneracyError("correlation_matrix: spectral gap " +
                          std::to_string(eig.gap()) + " below tolerance");
  }
  const StateVector& psi = eig.ground;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (std::uint64_t b = 0; b < psi.dim(); ++b) {
    const double p = psi.amplitudes[b] * psi.amplitudes[b];
    if (p == 0.0) continue;
    for (int i = 0; i < n; ++i) {
      const double si = spin_sign(b, i);
      c(i, i) += p;
      for (int k = i + 1; k < n; ++k) {
        c(i, k) += p * si * spin_sign(b, k);
      }
    }
  }
  c *= 0.25;  // S^z = sigma^z / 2
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) c(k, i) = c(i, k);
  }
  return c;
}

std::vector<double> energy_shift_constraint_residuals(const CouplingMatrix& j1,
                                                      const CouplingMatrix& j2,
                                                      double e1, double e2) {
  if (j1.n_atoms != j2.n_atoms) {
    throw ContractError("energy_shift_constraint_residuals: size mismatch");
  }
  const int n = j1.n_atoms;
  if (n > 20) throw ContractError("energy_shift_constraint_residuals: too many spins");
  const std::uint64_t d = std::uint64_t{1} << n;
  std::vector<double> res(d);
  for (std::uint64_t b = 0; b < d; ++b) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double si = spin_sign(b, i);
      for (int k = i + 1; k < n; ++k) {
        acc += (j1.j(i, k) - j2.j(i, k)) * si * spin_sign(b, k);
      }
    }
    res[b] = acc - (e1 - e2);
  }
  return res;
}

namespace {

CouplingMatrix random_physical_couplings(const Topology& topo, Rng& g) {
  const std::uint64_t geom_seed = g();
  const Geometry geom = build_geometry(topo.rows, topo.cols, 10.0, 0.1, geom_seed);
  return couplings(geom);
}

CouplingMatrix random_synthetic_couplings(int n, Rng& g) {
  CouplingMatrix j;
  j.n_atoms = n;
  j.c6 = 0.0;
  j.j_rad_per_us.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      const double v = uniform_in(g, 0.1, 10.0);
      j.j(i, k) = v;
      j.j(k, i) = v;
    }
  }
  return j;
}

CouplingMatrix draw_couplings(const Topology& topo, CouplingEnsemble ensemble, int trial,
                              Rng& g) {
  switch (ensemble) {
    case CouplingEnsemble::Physical:
      return random_physical_couplings(topo, g);
    case CouplingEnsemble::Synthetic:
      return random_synthetic_couplings(topo.rows * topo.cols, g);
    case CouplingEnsemble::Mixed:
      return trial % 2 == 0 ? random_physical_couplings(topo, g)
                            : random_synthetic_couplings(topo.rows * topo.cols, g);
  }
  throw ContractError("draw_couplings: bad ensemble");
}

double inf_distance(const CouplingMatrix& a, const CouplingMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.j_rad_per_us.size(); ++i) {
    m = std::max(m, std::abs(a.j_rad_per_us[i] - b.j_rad_per_us[i]));
  }
  return m;
}

double inf_distance_offdiag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = i + 1; k < a.cols(); ++k) {
      m = std::max(m, std::abs(a(i, k) - b(i, k)));
    }
  }
  return m;
}

}  // namespace

InjectivityReport verify_injectivity(const Topology& topo, int trials, double omega,
                                     double delta, std::uint64_t seed,
                                     CouplingEnsemble ensemble, double j_tol,
                                     double c_floor) {
  if (omega == 0.0) {
    throw ContractError("verify_injectivity: omega must be nonzero");
  }
  const int n = topo.rows * topo.cols;
  if (n > 10) throw ContractError("verify_injectivity: supports up to 10 spins");

  InjectivityReport report;
  report.n_spins = n;
  report.trials = trials;
  report.omega = omega;
  report.delta = delta;
  report.j_tol = j_tol;
  report.c_floor = c_floor;
  report.min_c_distance = std::numeric_limits<double>::infinity();
  report.min_j_distance = std::numeric_limits<double>::infinity();

  Rng g(substream_seed(seed, 0xb17ec7));
  for (int t = 0; t < trials; ++t) {
    const CouplingMatrix j1 = draw_couplings(topo, ensemble, t, g);
    const CouplingMatrix j2 = draw_couplings(topo, ensemble, t, g);
    const double dj = inf_distance(j1, j2);
    if (dj <= j_tol) {
      ++report.skipped_close_pairs;
      continue;
    }
    const Eigen::MatrixXd c1 = correlation_matrix(j1, omega, delta);
    const Eigen::MatrixXd c2 = correlation_matrix(j2, omega, delta);
    const double dc = inf_distance_offdiag(c1, c2);
    report.min_c_distance = std::min(report.min_c_distance, dc);
    report.min_j_distance = std::min(report.min_j_distance, dj);
    if (dc <= c_floor) ++report.violations;
  }
  return report;
}

std::string InjectivityReport::to_json() const {
  nlohmann::json j;
  j["n_spins"] = n_spins;
  j["trials"] = trials;
  j["omega"] = omega;
  j["delta"] = delta;
  j["j_tol"] = j_tol;
  j["c_floor"] = c_floor;
  j["violations"] = violations;
  j["min_c_distance"] = min_c_distance;
  j["min_j_distance"] = min_j_distance;
  j["skipped_close_pairs"] = skipped_close_pairs;
  return j.dump();
}

LemmaStats verify_lemma(const Topology& topo, int trials, double omega_abs_min,
                        double omega_abs_max, double delta, std::uint64_t seed) {
  if (!(omega_abs_min > 0.0) || omega_abs_max < omega_abs_min) {
    throw ContractError("verify_lemma: need 0 < omega_abs_min <= omega_abs_max");
  }
  const int n = topo.rows * topo.cols;
  if (n > 10) throw ContractError("verify_lemma: supports up to 10 spins");

  LemmaStats stats;
  stats.n_spins = n;
  stats.trials = trials;
  stats.omega_min = omega_abs_min;
  stats.omega_max = omega_abs_max;
  stats.min_gap = std::numeric_limits<double>::infinity();
  stats.min_amplitude = std::numeric_limits<double>::infinity();

  Rng g(substream_seed(seed, 0x1e44a));
  for (int t = 0; t < trials; ++t) {
    const CouplingMatrix j = random_physical_couplings(topo, g);
    double omega = uniform_in(g, omega_abs_min, omega_abs_max);
    if (g() & 1) omega = -omega;
    const DenseEigenResult eig = dense_lowest_eigenpairs(j, omega, delta, 2);
    stats.min_gap = std::min(stats.min_gap, eig.gap());
    double amin = std::numeric_limits<double>::infinity();
    for (const double a : eig.ground.amplitudes) amin = std::min(amin, std::abs(a));
    stats.min_amplitude = std::min(stats.min_amplitude, amin);
  }
  stats.gap_positive = stats.min_gap > 1e-10;
  stats.amplitudes_nonzero = stats.min_amplitude > 1e-12;
  return stats;
}

std::string LemmaStats::to_json() const {
  nlohmann::json j;
  j["n_spins"] = n_spins;
  j["trials"] = trials;
  j["omega_abs_range"] = {omega_min, omega_max};
  j["min_gap"] = min_gap;
  j["min_amplitude"] = min_amplitude;
  j["gap_positive"] = gap_positive;
  j["amplitudes_nonzero"] = amplitudes_nonzero;
  return j.dump();
}

ZeroFieldCounterexample zero_field_counterexample(const Topology& topo) {
  const Geometry geom = build_geometry(topo.rows, topo.cols, 10.0, 0.0, 0);
  const CouplingMatrix j1 = couplings(geom);
  CouplingMatrix j2 = j1;
  for (auto& v : j2.j_rad_per_us) v *= 2.0;

  ZeroFieldCounterexample out;
  const DenseEigenResult eig = dense_lowest_eigenpairs(j1, 0.0, 0.0, 2);
  out.gap = eig.gap();
  out.degenerate = out.gap < 1e-10;

  // At zero field the ground space is classical; correlations of the
  // symmetric-sector state depend only on the minimizing configurations,
  // not on the overall coupling scale.
  const auto classical_correlations = [&](const CouplingMatrix& j) {
    const int n = j.n_atoms;
    const std::uint64_t d = std::uint64_t{1} << n;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> minima;
    for (std::uint64_t b = 0; b < d; ++b) {
      double e = 0.0;
      for (int i = 0; i < n; ++i) {
        const double si = spin_sign(b, i);
        for (int k = i + 1; k < n; ++k) e += j.j(i, k) * si * spin_sign(b, k);
      }
      if (e < best - 1e-12) {
        best = e;
        minima.assign(1, b);
      } else if (e <= best + 1e-12) {
        minima.push_back(b);
      }
    }
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (const std::uint64_t b : minima) {
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) c(i, k) += spin_sign(b, i) * spin_sign(b, k);
      }
    }
    c *= 0.25 / static_cast<double>(minima.size());
    return c;
  };

  out.c_distance_under_j_doubling =
      inf_distance_offdiag(classical_correlations(j1), classical_correlations(j2));
  return out;
}

namespace {

std::vector<std::pair<int, int>> upper_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) pairs.emplace_back(i, k);
  }
  return pairs;
}

Eigen::VectorXd correlation_residual(const CouplingMatrix& j, double omega, double delta,
                                     const Eigen::MatrixXd& c_target, double gap_tol,
                                     const std::vector<std::pair<int, int>>& pairs) {
  const Eigen::MatrixXd c = correlation_matrix(j, omega, delta, gap_tol);
  Eigen::VectorXd r(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    r[static_cast<Eigen::Index>(p)] =
        c(pairs[p].first, pairs[p].second) - c_target(pairs[p].first, pairs[p].second);
  }
  return r;
}

}  // namespace

InversionResult invert_correlators(const Eigen::MatrixXd& c_target, double omega,
                                   double delta, const CouplingMatrix& j_init,
                                   const InversionOptions& opts) {
  if (omega == 0.0) {
    throw ContractError("invert_correlators: omega must be nonzero (correlations do not "
                        "determine couplings at zero field)");
  }
  const int n = j_init.n_atoms;
  if (n < 2 || n > 8) throw ContractError("invert_correlators: supports 2..8 spins");
  if (c_target.rows() != n || c_target.cols() != n) {
    throw ContractError("invert_correlators: target shape mismatch");
  }

  const auto pairs = upper_pairs(n);
  const auto np = static_cast<Eigen::Index>(pairs.size());

  CouplingMatrix j = j_init;
  Eigen::VectorXd r = correlation_residual(j, omega, delta, c_target, opts.gap_tol, pairs);
  double obj = r.squaredNorm();
  double lambda = 1e-3;

  InversionResult out;
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (std::sqrt(obj) < opts.tol) {
      out.j = j;
      out.residual = std::sqrt(obj);
      out.iterations = it;
      return out;
    }

    double j_scale = 0.0;
    for (const auto& [a, b] : pairs) j_scale = std::max(j_scale, std::abs(j.j(a, b)));
    const double h = opts.fd_step_rel * std::max(j_scale, 1e-6);

    Eigen::MatrixXd jac(np, np);  // d r / d J_pair
    for (Eigen::Index col = 0; col < np; ++col) {
      CouplingMatrix jp = j, jm = j;
      const auto [a, b] = pairs[col];
      jp.j(a, b) += h;
      jp.j(b, a) += h;
      jm.j(a, b) -= h;
      jm.j(b, a) -= h;
      jac.col(col) = (correlation_residual(jp, omega, delta, c_target, opts.gap_tol, pairs) -
                      correlation_residual(jm, omega, delta, c_target, opts.gap_tol, pairs)) /
                     (2.0 * h);
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 25 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);

      // Projected step: weak couplings may ride the positivity floor while
      // the rest converge, instead of vetoing the whole update.
      CouplingMatrix trial = j;
      for (Eigen::Index p = 0; p < np; ++p) {
        const auto [a, b] = pairs[p];
        const double v = std::max(trial.j(a, b) + step[p], 1e-8);
        trial.j(a, b) = v;
        trial.j(b, a) = v;
      }
      const Eigen::VectorXd rt =
          correlation_residual(trial, omega, delta, c_target, opts.gap_tol, pairs);
      const double trial_obj = rt.squaredNorm();
      if (trial_obj < obj) {
        j = trial;
        r = rt;
        obj = trial_obj;
        lambda = std::max(lambda * 0.5, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) {
      throw SolverError("invert_correlators: damping stalled at residual " +
                        std::to_string(std::sqrt(obj)));
    }
  }
  if (std::sqrt(obj) < opts.tol) {
    out.j = j;
    out.residual = std::sqrt(obj);
    out.iterations = opts.max_iterations;
    return out;
  }
  throw SolverError("invert_correlators: iteration cap reached; residual " +
                    std::to_string(std::sqrt(obj)) + " above tolerance " +
                    std::to_string(opts.tol));
}

}  // namespace hamlearn
