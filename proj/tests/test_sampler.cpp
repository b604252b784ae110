#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "hamlearn/errors.hpp"
#include "hamlearn/rng.hpp"
#include "hamlearn/sampler.hpp"

using namespace hamlearn;

TEST_SUITE_BEGIN("sampler");

TEST_CASE("single Hadamard on |0>") {
  StateVector psi{1, {1.0, 0.0}};
  hadamard_rotate(psi);
  CHECK(psi.amplitudes[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(psi.amplitudes[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("rotation is involutive and norm preserving") {
  StateVector psi;
  psi.n_spins = 10;
  psi.amplitudes.resize(psi.dim());
  Rng g(5);
  for (auto& a : psi.amplitudes) a = uniform_in(g, -1.0, 1.0);
  normalize(psi);
  const StateVector once = rotate_to_x(psi);
  CHECK(norm(once) == doctest::Approx(1.0).epsilon(1e-12));
  const StateVector twice = rotate_to_x(once);
  for (std::size_t b = 0; b < psi.dim(); ++b) {
    CHECK(twice.amplitudes[b] == doctest::Approx(psi.amplitudes[b]).epsilon(1e-12));
  }
}

TEST_CASE("deterministic distribution samples one word") {
  StateVector up2{2, {1.0, 0.0, 0.0, 0.0}};
  const SnapshotSet snaps = sample_bitstrings(up2, Basis::Z, 100, 9);
  for (const auto b : snaps.bitstrings) CHECK(b == 0);
}

TEST_CASE("uniform superposition frequencies within the binomial band") {
  StateVector psi{2, {0.5, 0.5, 0.5, 0.5}};
  const int n = 100000;
  const SnapshotSet snaps = sample_bitstrings(psi, Basis::Z, n, 1234);
  std::map<std::uint64_t, int> counts;
  for (const auto b : snaps.bitstrings) ++counts[b];
  for (int b = 0; b < 4; ++b) {
    const double f = counts[b] / static_cast<double>(n);
    CHECK(std::abs(f - 0.25) < 0.01);  // ~7 sigma
  }
}

TEST_CASE("seeded snapshots are bit identical") {
  StateVector psi{2, {0.5, 0.5, 0.5, 0.5}};
  const SnapshotSet a = sample_bitstrings(psi, Basis::Z, 1000, 77);
  const SnapshotSet b = sample_bitstrings(psi, Basis::Z, 1000, 77);
  CHECK(a.bitstrings == b.bitstrings);
  const SnapshotSet c = sample_bitstrings(psi, Basis::Z, 1000, 78);
  CHECK(a.bitstrings != c.bitstrings);
}

TEST_CASE("estimator on all-up snapshots") {
  SnapshotSet snaps;
  snaps.basis = Basis::Z;
  snaps.n_spins = 2;
  snaps.bitstrings.assign(50, 0);
  const ObservableSet obs = estimate_observables(snaps, nullptr, adjacency(1, 2));
  CHECK(obs.chi_z_nn[0] == 1.0);
  CHECK(obs.magnetization_z[0] == 1.0);
  CHECK_FALSE(obs.chi_x_nn.has_value());
}

TEST_CASE("basis contract is enforced") {
  SnapshotSet z;
  z.basis = Basis::Z;
  z.n_spins = 2;
  z.bitstrings.assign(5, 0);
  SnapshotSet x = z;
  CHECK_THROWS_AS(estimate_observables(z, &x, adjacency(1, 2)), ContractError);
  x.basis = Basis::X;
  CHECK_NOTHROW(estimate_observables(z, &x, adjacency(1, 2)));
  CHECK_THROWS_AS(estimate_observables(x, nullptr, adjacency(1, 2)), ContractError);
}

TEST_CASE("sampled correlator converges to the exact value") {
  // Ground state of the two-spin system with J = 5.42, omega = 10.
  const Geometry geom = build_geometry(1, 2, 10.0, 0.0, 0);
  const CouplingMatrix j = couplings(geom);
  const auto res = ground_state(j, 10.0, 0.0, {.tol = 1e-12});
  const double exact = -5.42 / std::sqrt(5.42 * 5.42 + 400.0);

  const int n = 50000;
  const SnapshotSet snaps = sample_bitstrings(res.state, Basis::Z, n, 2020);
  const ObservableSet est = estimate_observables(snaps, nullptr, adjacency(1, 2));
  CHECK(std::abs(est.chi_z_nn[0] - exact) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("X-basis estimates match the exact double-flip correlator") {
  const CouplingMatrix j = couplings(build_geometry(2, 2, 10.0, 0.1, 21));
  const AdjacencySets adj = adjacency(2, 2);
  const auto res = ground_state(j, 12.0, 0.0, {.tol = 1e-11});
  const ObservableSet exact = exact_observables(res.state, adj, 12.0, 0.0);

  const int n = 50000;
  const SnapshotSet sx = sample_bitstrings(res.state, Basis::X, n, 31);
  const SnapshotSet sz = sample_bitstrings(res.state, Basis::Z, n, 32);
  const ObservableSet est = estimate_observables(sz, &sx, adj);
  for (std::size_t e = 0; e < adj.nn_edges.size(); ++e) {
    CHECK(std::abs((*est.chi_x_nn)[e] - (*exact.chi_x_nn)[e]) <
          4.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("estimate noise scales as the inverse square root of the sample count") {
  const CouplingMatrix j = couplings(build_geometry(3, 3, 10.0, 0.1, 8));
  const auto res = ground_state(j, 17.0, 0.0, {.tol = 1e-10});
  const AdjacencySets adj = adjacency(3, 3);

  std::vector<double> log_n, log_std;
  const int replicates = 80;
  for (const int n : {1000, 2500, 5000, 10000}) {
    std::vector<double> estimates;
    for (int r = 0; r < replicates; ++r) {
      const SnapshotSet s =
          sample_bitstrings(res.state, Basis::Z, n, substream_seed(100 + r, n));
      const ObservableSet est = estimate_observables(s, nullptr, adj);
      estimates.push_back(est.chi_z_nn[5]);
    }
    double mean = 0.0;
    for (const double e : estimates) mean += e;
    mean /= replicates;
    double var = 0.0;
    for (const double e : estimates) var += (e - mean) * (e - mean);
    var /= replicates - 1;
    log_n.push_back(std::log(static_cast<double>(n)));
    log_std.push_back(0.5 * std::log(var));
  }
  // Least-squares slope of log std vs log n.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto m = static_cast<double>(log_n.size());
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sx += log_n[i];
    sy += log_std[i];
    sxx += log_n[i] * log_n[i];
    sxy += log_n[i] * log_std[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("snapshot binary round trip") {
  StateVector psi{3, {0.5, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25}};
  normalize(psi);
  const SnapshotSet snaps = sample_bitstrings(psi, Basis::X, 257, 4711);
  std::stringstream buf;
  write_snapshots(buf, snaps);
  const SnapshotSet back = read_snapshots(buf);
  CHECK(back.n_spins == snaps.n_spins);
  CHECK(back.basis == snaps.basis);
  CHECK(back.bitstrings == snaps.bitstrings);
}

TEST_SUITE_END();
