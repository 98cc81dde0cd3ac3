#include "gwit/partitions.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gwit {

Partition Partition::of(int n, std::vector<std::vector<int>> blocks) {
  if (n < 1) throw std::invalid_argument("Partition: n must be >= 1");
  std::vector<bool> seen(n + 1, false);
  for (auto& b : blocks) {
    if (b.empty()) throw std::invalid_argument("Partition: empty block");
    std::sort(b.begin(), b.end());
    for (int m : b) {
      if (m < 1 || m > n) throw std::invalid_argument("Partition: index out of range");
      if (seen[m]) throw std::invalid_argument("Partition: duplicate index");
      seen[m] = true;
    }
  }
  for (int m = 1; m <= n; ++m)
    if (!seen[m])
      throw std::invalid_argument("Partition: blocks do not cover {1..n}, missing " +
                                  std::to_string(m));
  std::sort(blocks.begin(), blocks.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  Partition p;
  p.n = n;
  p.blocks = std::move(blocks);
  return p;
}

std::string Partition::text() const {
  std::ostringstream os;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (i) os << '|';
    for (size_t j = 0; j < blocks[i].size(); ++j) {
      if (j) os << ',';
      os << blocks[i][j];
    }
  }
  return os.str();
}

PartitionSet PartitionSet::of(std::vector<Partition> parts) {
  if (parts.empty()) throw std::invalid_argument("PartitionSet: empty");
  int n = parts.front().n;
  std::vector<Partition> out;
  std::set<std::string> keys;
  for (auto& p : parts) {
    if (p.n != n) throw std::invalid_argument("PartitionSet: mixed mode counts");
    if (keys.insert(p.text()).second) out.push_back(std::move(p));
  }
  PartitionSet s;
  s.n = n;
  s.partitions = std::move(out);
  return s;
}

std::string PartitionSet::text() const {
  std::ostringstream os;
  for (size_t i = 0; i < partitions.size(); ++i) {
    if (i) os << ';';
    os << partitions[i].text();
  }
  return os.str();
}

PartitionSet all_bipartitions(int n) {
  if (n < 2) throw std::invalid_argument("all_bipartitions: n must be >= 2");
  std::vector<Partition> parts;
  // Subsets containing mode 1, excluding the full set: one label per bipartition.
  for (std::uint64_t mask = 0; mask + 1 < (1ULL << (n - 1)); ++mask) {
    std::vector<int> a{1}, b;
    for (int m = 2; m <= n; ++m) {
      if (mask & (1ULL << (m - 2)))
        a.push_back(m);
      else
        b.push_back(m);
    }
    parts.push_back(Partition::of(n, {a, b}));
  }
  return PartitionSet::of(std::move(parts));
}

bool finer_than(const Partition& a, const Partition& b) {
  if (a.n != b.n) throw std::invalid_argument("finer_than: mismatched n");
  for (const auto& ba : a.blocks) {
    bool contained = false;
    for (const auto& bb : b.blocks) {
      if (std::includes(bb.begin(), bb.end(), ba.begin(), ba.end())) {
        contained = true;
        break;
      }
    }
    if (!contained) return false;
  }
  return true;
}

bool set_finer_than(const PartitionSet& A, const PartitionSet& B) {
  if (A.n != B.n) throw std::invalid_argument("set_finer_than: mismatched n");
  for (const auto& pa : A.partitions) {
    bool ok = false;
    for (const auto& pb : B.partitions)
      if (finer_than(pa, pb)) {
        ok = true;
        break;
      }
    if (!ok) return false;
  }
  return true;
}

std::vector<int> block_indices(const std::vector<int>& I, int n, Layout layout) {
  std::vector<int> idx;
  for (int m : I) {
    if (m < 1 || m > n) throw std::invalid_argument("block_indices: index out of range");
    idx.push_back(m);
  }
  if (layout == Layout::Full)
    for (int m : I) idx.push_back(m + n);
  return idx;
}

std::int64_t count_variables(int n, const PartitionSet& S, Layout layout,
                             WitnessProblem /*problem*/) {
  std::int64_t count = layout == Layout::Full ? std::int64_t(n) * (2 * n + 1)
                                              : std::int64_t(n) * (n + 1);
  for (const auto& p : S.partitions)
    for (const auto& I : p.blocks) {
      std::int64_t k = static_cast<std::int64_t>(I.size());
      count += layout == Layout::Full ? k * (2 * k - 1) : k * k;
    }
  return count;
}

static std::int64_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

RefinedCounts count_refined(int n) {
  if (n < 2) throw std::invalid_argument("count_refined: n must be >= 2");
  RefinedCounts c;
  std::int64_t base = std::int64_t(n) * n * (std::int64_t(1) << (n - 2));
  if (n % 2 == 0) {
    c.n_minus = base - std::int64_t(n) * (n - 1) * binom(n - 2, n / 2 - 1);
    c.n_plus = base + std::int64_t(3 * n - 2) * (n - 1) * binom(n - 2, n / 2 - 1) -
               std::int64_t(n) * (2 * n - 1);
  } else {
    c.n_minus = base - std::int64_t(n) * (2 * n - 1) * binom(n - 2, (n - 1) / 2);
    c.n_plus = base + std::int64_t(n) * (2 * n - 1) * binom(n - 2, (n - 1) / 2) -
               std::int64_t(n) * (2 * n - 1);
  }
  return c;
}

static std::string strip_ws(const std::string& s) {
  std::string out;
  for (char ch : s)
    if (!isspace(static_cast<unsigned char>(ch))) out.push_back(ch);
  return out;
}

Partition parse_partition(const std::string& text, int n) {
  std::string s = strip_ws(text);
  if (s.empty()) throw std::invalid_argument("parse_partition: empty text");
  std::vector<std::vector<int>> blocks;
  std::stringstream ss(s);
  std::string blk;
  while (std::getline(ss, blk, '|')) {
    std::vector<int> b;
    std::stringstream bs(blk);
    std::string tok;
    while (std::getline(bs, tok, ',')) {
      if (tok.empty()) throw std::invalid_argument("parse_partition: empty index");
      size_t pos = 0;
      int v = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument("parse_partition: bad index '" + tok + "'");
      b.push_back(v);
    }
    blocks.push_back(std::move(b));
  }
  return Partition::of(n, std::move(blocks));
}

PartitionSet parse_partition_set(const std::string& text, int n) {
  std::string s = strip_ws(text);
  if (s == "biseparable") return all_bipartitions(n);
  std::vector<Partition> parts;
  std::stringstream ss(s);
  std::string ptxt;
  while (std::getline(ss, ptxt, ';')) parts.push_back(parse_partition(ptxt, n));
  return PartitionSet::of(std::move(parts));
}

}  // namespace gwit
