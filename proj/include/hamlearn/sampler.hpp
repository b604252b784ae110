#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hamlearn/lattice.hpp"
#include "hamlearn/spectral.hpp"

namespace hamlearn {

enum class Basis : std::uint32_t { Z = 0, X = 1 };

// A set of projective measurements of the full register in one basis.
// Deterministic given (state, basis, n_samples, seed).
struct SnapshotSet {
  Basis basis = Basis::Z;
  int n_spins = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> bitstrings;
};

// In-place tensor-product Hadamard rotation (fast Walsh-Hadamard transform
// with a 1/sqrt(2) factor per stage). Involutive and norm-preserving.
void hadamard_rotate(StateVector& psi);

StateVector rotate_to_x(const StateVector& psi);

// Draws n bitstrings with probability |psi(b)|^2 (Z basis) or
// |(H psi)(b)|^2 (X basis) by inverse-CDF search on a prefix-sum table.
SnapshotSet sample_bitstrings(const StateVector& psi, Basis basis, int n,
                              std::uint64_t seed);

// Unbiased sample-mean estimates of magnetization and spin-spin correlators.
// Pass snap_x = nullptr to leave the chi_x fields absent.
ObservableSet estimate_observables(const SnapshotSet& snap_z, const SnapshotSet* snap_x,
                                   const AdjacencySets& adj);

// Binary format: 16-byte header (magic "SNAP", u32 n_spins, u32 n_samples,
// u32 basis tag) followed by packed little-endian 64-bit code words.
void write_snapshots(std::ostream& out, const SnapshotSet& snaps);
SnapshotSet read_snapshots(std::istream& in);

}  // namespace hamlearn
