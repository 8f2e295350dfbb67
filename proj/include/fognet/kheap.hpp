// k-ary min heap of candidate links keyed by path weight, with a
// decrease-key operation addressed by destination node. The arity is
// sized from the graph as k = max(2, m/n), which keeps the heap shallow
// on dense fabrics.
#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "fognet/topology.hpp"
#include "fognet/types.hpp"

namespace fognet {

constexpr double kInfiniteWeight = std::numeric_limits<double>::infinity();

// One candidate: the best known link into `link.dst` and the total cost
// of reaching `link.dst` through it. At most one entry per destination
// lives in the heap at any time.
struct HeapEntry {
  Link link;
  double weight = 0.0;
};

class KHeap {
 public:
  // Arity from graph size: node_count n, link_count m, k = max(2, m/n).
  KHeap(std::size_t node_count, std::size_t link_count) {
    if (node_count == 0) throw HeapError("heap sized for an empty graph");
    k_ = link_count / node_count;
    if (k_ < 2) k_ = 2;
  }

  explicit KHeap(std::size_t arity) : k_(arity) {
    if (arity < 2) throw HeapError("heap arity must be at least 2");
  }

  std::size_t arity() const { return k_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const NodeId& dst) const { return pos_.count(dst) != 0; }

  void push(const HeapEntry& e) {
    if (pos_.count(e.link.dst))
      throw HeapError("destination already in heap: " + e.link.dst);
    entries_.push_back(e);
    pos_[e.link.dst] = entries_.size() - 1;
    sift_up(entries_.size() - 1);
  }

  HeapEntry pop_min() {
    if (entries_.empty()) throw HeapError("pop from empty heap");
    HeapEntry top = entries_.front();
    pos_.erase(top.link.dst);
    if (entries_.size() > 1) {
      entries_.front() = entries_.back();
      entries_.pop_back();
      pos_[entries_.front().link.dst] = 0;
      sift_down(0);
    } else {
      entries_.pop_back();
    }
    return top;
  }

  // Replaces the entry for old_entry.link.dst with new_entry (the best
  // known link changes, so the source may differ) and sifts it up. The
  // new weight must be a strict improvement.
  void decrease_key(const HeapEntry& old_entry, const HeapEntry& new_entry) {
    if (new_entry.link.dst != old_entry.link.dst)
      throw HeapError("decrease_key must keep the destination");
    auto it = pos_.find(old_entry.link.dst);
    if (it == pos_.end())
      throw HeapError("decrease_key on absent destination: " + old_entry.link.dst);
    const std::size_t i = it->second;
    if (!(new_entry.weight < entries_[i].weight))
      throw HeapError("decrease_key requires a strictly smaller weight");
    entries_[i] = new_entry;
    sift_up(i);
  }

  // Full-scan structural check, used by tests.
  bool validate() const {
    for (std::size_t i = 1; i < entries_.size(); ++i)
      if (less(entries_[i], entries_[(i - 1) / k_])) return false;
    if (pos_.size() != entries_.size()) return false;
    for (const auto& [dst, i] : pos_)
      if (i >= entries_.size() || entries_[i].link.dst != dst) return false;
    return true;
  }

 private:
  // Ties are broken on the destination id so pop order is total.
  static bool less(const HeapEntry& a, const HeapEntry& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    return a.link.dst < b.link.dst;
  }

  void sift_up(std::size_t i) {
    while (i > 0) {
      const std::size_t parent = (i - 1) / k_;
      if (!less(entries_[i], entries_[parent])) break;
      swap_at(i, parent);
      i = parent;
    }
  }

  void sift_down(std::size_t i) {
    const std::size_t n = entries_.size();
    for (;;) {
      std::size_t best = i;
      const std::size_t first = i * k_ + 1;
      const std::size_t last = std::min(first + k_, n);
      for (std::size_t c = first; c < last; ++c)
        if (less(entries_[c], entries_[best])) best = c;
      if (best == i) break;
      swap_at(i, best);
      i = best;
    }
  }

  void swap_at(std::size_t a, std::size_t b) {
    std::swap(entries_[a], entries_[b]);
    pos_[entries_[a].link.dst] = a;
    pos_[entries_[b].link.dst] = b;
  }

  std::size_t k_ = 2;
  std::vector<HeapEntry> entries_;
  std::unordered_map<NodeId, std::size_t> pos_;
};

}  // namespace fognet
