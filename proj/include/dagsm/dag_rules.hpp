#pragma once

// Block DAG rules: reference validity, canonical chain, acceptability,
// uncontested and destructed blocks.
//
// Blocks are stored in topological order; block 0 is the root. A chain is a
// path from the root to a leaf (a block nobody references) that follows any
// reference. Heights are longest-path distances from the root.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dagsm {

using BlockId = std::uint32_t;
using BlockSet = std::vector<BlockId>;  // sorted, unique

enum class Creator : std::uint8_t { kHonest, kSelfish };

class DagError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Block {
  std::string name;
  Creator creator = Creator::kHonest;
  bool whale = false;
  std::vector<BlockId> parents;  // first reference is the preferred chain
};

class BlockDag {
 public:
  BlockDag() = default;

  /// Appends a block; parents must already exist and be mutually unrelated.
  BlockId add(Block b) {
    const auto id = static_cast<BlockId>(blocks_.size());
    if (id == 0 && !b.parents.empty()) throw DagError("root block must not reference anything");
    if (id > 0 && b.parents.empty()) throw DagError("block " + b.name + " has no parents");
    for (auto p : b.parents) {
      if (p >= id) throw DagError("block " + b.name + " references an unknown block");
    }
    if (!references_valid(b.parents)) {
      throw DagError("block " + b.name + " references a block together with its ancestor");
    }
    ancestors_.emplace_back(id + 1, 0);
    for (auto p : b.parents) {
      for (BlockId q = 0; q <= p; ++q) ancestors_.back()[q] |= (q == p) | ancestors_[p][q];
    }
    for (auto& row : ancestors_) row.resize(id + 1, 0);
    children_.emplace_back();
    for (auto p : b.parents) children_[p].push_back(id);
    int h = 0;
    for (auto p : b.parents) h = std::max(h, height_[p] + 1);
    height_.push_back(h);
    blocks_.push_back(std::move(b));
    return id;
  }

  std::size_t size() const { return blocks_.size(); }
  const Block& block(BlockId id) const { return blocks_.at(id); }
  const std::vector<BlockId>& children(BlockId id) const { return children_.at(id); }
  int height(BlockId id) const { return height_.at(id); }
  bool is_leaf(BlockId id) const { return children_.at(id).empty(); }

  /// True iff `a` is a strict ancestor of `b`.
  bool is_ancestor(BlockId a, BlockId b) const { return a != b && ancestors_.at(b).at(a); }

  BlockId find(const std::string& name) const {
    for (BlockId i = 0; i < blocks_.size(); ++i) {
      if (blocks_[i].name == name) return i;
    }
    throw DagError("unknown block " + name);
  }

  bool references_valid(const std::vector<BlockId>& refs) const {
    for (std::size_t i = 0; i < refs.size(); ++i) {
      for (std::size_t j = 0; j < refs.size(); ++j) {
        if (i != j && (refs[i] == refs[j] || is_ancestor(refs[i], refs[j]))) return false;
      }
    }
    return true;
  }

 private:
  std::vector<Block> blocks_;
  std::vector<std::vector<BlockId>> children_;
  std::vector<std::vector<char>> ancestors_;  // ancestors_[b][a]: a is a strict ancestor of b
  std::vector<int> height_;
};

/// True iff no referenced block is an ancestor of another referenced block.
inline bool validate_references(const BlockDag& dag, const std::vector<BlockId>& refs) {
  for (auto r : refs) {
    if (r >= dag.size()) throw DagError("unknown reference " + std::to_string(r));
  }
  return dag.references_valid(refs);
}

struct ChainView {
  std::vector<BlockId> blocks;  // root first
  std::vector<int> heights;

  bool contains(BlockId b) const { return std::find(blocks.begin(), blocks.end(), b) != blocks.end(); }
};

inline constexpr BlockId kNoBlock = std::numeric_limits<BlockId>::max();

/// Chooses among equal-height candidates (never empty). `from` is kNoBlock
/// when picking a tip among the highest leaves; otherwise it is the block
/// whose parents one level lower are the candidates.
using Preference = std::function<BlockId(BlockId from, const std::vector<BlockId>& candidates)>;

/// Default preference: the first candidate (leaves in index order, parents in
/// reference order).
inline BlockId prefer_first(BlockId, const std::vector<BlockId>& candidates) { return candidates.front(); }

inline ChainView canonical_chain(const BlockDag& dag, const Preference& prefer = prefer_first) {
  if (dag.size() == 0) throw DagError("empty DAG");
  int best = -1;
  std::vector<BlockId> tips;
  for (BlockId b = 0; b < dag.size(); ++b) {
    if (!dag.is_leaf(b)) continue;
    if (dag.height(b) > best) {
      best = dag.height(b);
      tips.clear();
    }
    if (dag.height(b) == best) tips.push_back(b);
  }
  BlockId cur = tips.size() == 1 ? tips.front() : prefer(kNoBlock, tips);
  ChainView view;
  view.blocks.push_back(cur);
  while (cur != 0) {
    std::vector<BlockId> next;
    for (auto p : dag.block(cur).parents) {
      if (dag.height(p) == dag.height(cur) - 1) next.push_back(p);
    }
    cur = next.size() == 1 ? next.front() : prefer(cur, next);
    view.blocks.push_back(cur);
  }
  std::reverse(view.blocks.begin(), view.blocks.end());
  for (auto b : view.blocks) view.heights.push_back(dag.height(b));
  return view;
}

/// Blocks on some chain whose symmetric difference with `canonical` is at
/// most `fork_sensitivity`. The difference of a chain P is
/// |P| + |C| - 2|P ∩ C|, so it is minimized through each block with a
/// forward and a backward longest-path-style pass.
inline BlockSet acceptable_blocks(const BlockDag& dag, const ChainView& canonical, int fork_sensitivity) {
  const auto n = dag.size();
  std::vector<char> in_c(n, 0);
  for (auto b : canonical.blocks) in_c[b] = 1;
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  auto cost = [&](BlockId b) { return in_c[b] ? -1 : 1; };
  std::vector<int> down(n, kInf), up(n, kInf);  // best cost root..b, b..leaf (both inclusive of b)
  down[0] = cost(0);
  for (BlockId b = 1; b < n; ++b) {
    for (auto p : dag.block(b).parents) down[b] = std::min(down[b], down[p] + cost(b));
  }
  for (BlockId b = static_cast<BlockId>(n); b-- > 0;) {
    if (dag.is_leaf(b)) {
      up[b] = cost(b);
      continue;
    }
    for (auto c : dag.children(b)) up[b] = std::min(up[b], up[c] + cost(b));
  }
  const int base = static_cast<int>(canonical.blocks.size());
  BlockSet out;
  for (BlockId b = 0; b < n; ++b) {
    const int diff = base + down[b] + up[b] - cost(b);
    if (in_c[b] || diff <= fork_sensitivity) out.push_back(b);
  }
  return out;
}

/// Acceptable blocks that no other acceptable block shares a height with.
inline BlockSet uncontested_blocks(const BlockDag& dag, const ChainView&, const BlockSet& acceptable) {
  std::unordered_map<int, int> per_height;
  for (auto b : acceptable) ++per_height[dag.height(b)];
  BlockSet out;
  for (auto b : acceptable) {
    if (per_height[dag.height(b)] == 1) out.push_back(b);
  }
  return out;
}

/// Canonical blocks that some other chain of the same length excludes.
inline BlockSet destructed_blocks(const BlockDag& dag, const ChainView& canonical) {
  const auto n = dag.size();
  const int length = static_cast<int>(canonical.blocks.size());
  BlockSet out;
  for (auto skip : canonical.blocks) {
    // Longest root-to-b path avoiding `skip`, in blocks.
    std::vector<int> len(n, -1);
    if (skip != 0) len[0] = 1;
    bool found = false;
    for (BlockId b = 1; b < n && !found; ++b) {
      if (b == skip) continue;
      for (auto p : dag.block(b).parents) {
        if (len[p] > 0) len[b] = std::max(len[b], len[p] + 1);
      }
      found = dag.is_leaf(b) && len[b] == length;
    }
    if (found) out.push_back(skip);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Parses the fixture format: one block per line, `id creator whale parents...`
/// with creator in {honest, selfish} and whale in {0, 1}. Blank lines and
/// lines starting with '#' are skipped. The first block is the root.
inline BlockDag parse_dag(std::istream& in) {
  BlockDag dag;
  std::unordered_map<std::string, BlockId> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    Block b;
    std::string creator;
    int whale = 0;
    if (!(ls >> b.name) || b.name.front() == '#') continue;
    if (!(ls >> creator >> whale) || (creator != "honest" && creator != "selfish") || (whale != 0 && whale != 1)) {
      throw DagError("line " + std::to_string(line_no) + ": expected `id creator whale parents...`");
    }
    if (ids.count(b.name)) throw DagError("line " + std::to_string(line_no) + ": duplicate block " + b.name);
    b.creator = creator == "selfish" ? Creator::kSelfish : Creator::kHonest;
    b.whale = whale == 1;
    std::string parent;
    while (ls >> parent) {
      const auto it = ids.find(parent);
      if (it == ids.end()) throw DagError("line " + std::to_string(line_no) + ": unknown parent " + parent);
      b.parents.push_back(it->second);
    }
    const auto name = b.name;
    ids[name] = dag.add(std::move(b));
  }
  if (dag.size() == 0) throw DagError("fixture has no blocks");
  return dag;
}

}  // namespace dagsm
