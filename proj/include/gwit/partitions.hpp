#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwit/symplectic.hpp"

namespace gwit {

// Partition of the mode set {1..n} into disjoint blocks. Canonical form:
// every block sorted ascending, blocks ordered by smallest element.
struct Partition {
  int n = 0;
  std::vector<std::vector<int>> blocks;  // 1-based mode indices

  static Partition of(int n, std::vector<std::vector<int>> blocks);
  bool operator==(const Partition& o) const { return n == o.n && blocks == o.blocks; }
  std::string text() const;  // "1,3|2,4"
};

// Deduplicated, nonempty list of partitions of the same mode set.
struct PartitionSet {
  int n = 0;
  std::vector<Partition> partitions;

  static PartitionSet of(std::vector<Partition> parts);
  static PartitionSet single(Partition p) { return of({std::move(p)}); }
  std::string text() const;  // partitions joined by ";"
};

// All 2^(n-1) - 1 bipartitions, each stored once with the block containing
// mode 1 first.
PartitionSet all_bipartitions(int n);

// a finer than b: every block of a is contained in some block of b.
bool finer_than(const Partition& a, const Partition& b);
bool set_finer_than(const PartitionSet& A, const PartitionSet& B);

// Submatrix row/column indices of a block: full layout I and I+n (1-based),
// reduced layout I itself.
std::vector<int> block_indices(const std::vector<int>& I, int n, Layout layout);

enum class WitnessProblem { Eigen, Scaling };

// Matrix-variable count of the Theorem 6/7 programs (M/K or X/P/Z elements);
// identical for both problems, the parameter documents the caller's intent.
std::int64_t count_variables(int n, const PartitionSet& S, Layout layout,
                             WitnessProblem problem);

struct RefinedCounts {
  std::int64_t n_minus = 0;  // K variables, larger components discarded
  std::int64_t n_plus = 0;   // K variables, smaller components discarded
};
RefinedCounts count_refined(int n);

// Text syntax: blocks of 1-based indices, commas within a block, "|" between
// blocks, ";" between partitions of a set; whitespace ignored.
Partition parse_partition(const std::string& text, int n);
PartitionSet parse_partition_set(const std::string& text, int n);

}  // namespace gwit
