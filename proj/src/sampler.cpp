#include "hamlearn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "hamlearn/errors.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

void hadamard_rotate(StateVector& psi) {
  const std::size_t d = psi.dim();
  auto& a = psi.amplitudes;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t stride = 1; stride < d; stride <<= 1) {
    for (std::size_t base = 0; base < d; base += 2 * stride) {
      for (std::size_t off = 0; off < stride; ++off) {
        const std::size_t lo = base + off;
        const std::size_t hi = lo + stride;
        const double x = a[lo], y = a[hi];
        a[lo] = (x + y) * inv_sqrt2;
        a[hi] = (x - y) * inv_sqrt2;
      }
    }
  }
}

StateVector rotate_to_x(const StateVector& psi) {
  StateVector out = psi;
  hadamard_rotate(out);
  return out;
}

SnapshotSet sample_bitstrings(const StateVector& psi, Basis basis, int n,
                              std::uint64_t seed) {
  if (n < 1) throw ContractError("sample_bitstrings: need n >= 1");

  const StateVector* src = &psi;
  StateVector rotated;
  if (basis == Basis::X) {
    rotated = rotate_to_x(psi);
    src = &rotated;
  }

  const std::size_t d = src->dim();
  std::vector<double> cdf(d);
  double acc = 0.0;
  for (std::size_t b = 0; b < d; ++b) {
    const double a = src->amplitudes[b];
    acc += a * a;
    cdf[b] = acc;
  }
  const double total = acc;

  SnapshotSet snaps;
  snaps.basis = basis;
  snaps.n_spins = psi.n_spins;
  snaps.seed = seed;
  snaps.bitstrings.resize(n);
  Rng g(seed);
  for (int s = 0; s < n; ++s) {
    const double u = uniform_unit(g) * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    snaps.bitstrings[s] =
        static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), d - 1));
  }
  return snaps;
}

namespace {

std::vector<double> correlator_means(const std::vector<std::uint64_t>& bits,
                                     const std::vector<std::pair<int, int>>& edges) {
  std::vector<double> out(edges.size(), 0.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::uint64_t mi = 1ULL << edges[e].first;
    const std::uint64_t mk = 1ULL << edges[e].second;
    long agree = 0;
    for (const std::uint64_t b : bits) {
      agree += (((b & mi) != 0) == ((b & mk) != 0)) ? 1 : -1;
    }
    out[e] = static_cast<double>(agree) / static_cast<double>(bits.size());
  }
  return out;
}

}  // namespace

ObservableSet estimate_observables(const SnapshotSet& snap_z, const SnapshotSet* snap_x,
                                   const AdjacencySets& adj) {
  if (snap_z.basis != Basis::Z) {
    throw ContractError("estimate_observables: first set must be Z basis");
  }
  if (snap_x != nullptr) {
    if (snap_x->basis != Basis::X) {
      throw ContractError("estimate_observables: second set must be X basis");
    }
    if (snap_x->n_spins != snap_z.n_spins) {
      throw ContractError("estimate_observables: snapshot sets disagree on n_spins");
    }
  }
  if (snap_z.bitstrings.empty()) {
    throw ContractError("estimate_observables: empty Z snapshot set");
  }

  const int n = snap_z.n_spins;
  ObservableSet obs;
  obs.magnetization_z.assign(n, 0.0);
  for (const std::uint64_t b : snap_z.bitstrings) {
    for (int i = 0; i < n; ++i) obs.magnetization_z[i] += spin_sign(b, i);
  }
  for (auto& m : obs.magnetization_z) m /= static_cast<double>(snap_z.bitstrings.size());

  obs.chi_z_nn = correlator_means(snap_z.bitstrings, adj.nn_edges);
  obs.chi_z_nnn = correlator_means(snap_z.bitstrings, adj.nnn_edges);
  if (snap_x != nullptr && !snap_x->bitstrings.empty()) {
    obs.chi_x_nn = correlator_means(snap_x->bitstrings, adj.nn_edges);
    obs.chi_x_nnn = correlator_means(snap_x->bitstrings, adj.nnn_edges);
  }
  return obs;
}

namespace {
constexpr char kSnapshotMagic[4] = {'S', 'N', 'A', 'P'};
}

void write_snapshots(std::ostream& out, const SnapshotSet& snaps) {
  out.write(kSnapshotMagic, 4);
  const std::uint32_t n_spins = static_cast<std::uint32_t>(snaps.n_spins);
  const std::uint32_t n_samples = static_cast<std::uint32_t>(snaps.bitstrings.size());
  const std::uint32_t basis = static_cast<std::uint32_t>(snaps.basis);
  out.write(reinterpret_cast<const char*>(&n_spins), 4);
  out.write(reinterpret_cast<const char*>(&n_samples), 4);
  out.write(reinterpret_cast<const char*>(&basis), 4);
  out.write(reinterpret_cast<const char*>(snaps.bitstrings.data()),
            static_cast<std::streamsize>(snaps.bitstrings.size() * 8));
}

SnapshotSet read_snapshots(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kSnapshotMagic, 4) != 0) {
    throw ContractError("read_snapshots: bad magic");
  }
  std::uint32_t n_spins = 0, n_samples = 0, basis = 0;
  in.read(reinterpret_cast<char*>(&n_spins), 4);
  in.read(reinterpret_cast<char*>(&n_samples), 4);
  in.read(reinterpret_cast<char*>(&basis), 4);
  if (!in || basis > 1) throw ContractError("read_snapshots: bad header");
  SnapshotSet snaps;
  snaps.n_spins = static_cast<int>(n_spins);
  snaps.basis = static_cast<Basis>(basis);
  snaps.bitstrings.resize(n_samples);
  in.read(reinterpret_cast<char*>(snaps.bitstrings.data()),
          static_cast<std::streamsize>(std::size_t{n_samples} * 8));
  if (!in) throw ContractError("read_snapshots: truncated payload");
  return snaps;
}

}  // namespace hamlearn
