#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace byzcount {

// Position of a node inside the engine's arrays. Never appears on the wire.
using NodeIndex = std::uint32_t;

// Globally unique identity a node uses when talking to neighbours.
struct NodeId {
  std::uint64_t value = 0;

  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

// Index of the first heads in a run of fair coin flips; 0 is reserved for
// "nothing received".
struct Color {
  std::uint32_t value = 0;

  constexpr bool empty() const { return value == 0; }
  friend constexpr auto operator<=>(Color, Color) = default;
};

// Membership mask over node indices with a cached cardinality.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(std::size_t universe) : mask_(universe, false) {}

  static NodeSet all(std::size_t universe) {
    NodeSet s(universe);
    s.mask_.assign(universe, true);
    s.count_ = universe;
    return s;
  }

  std::size_t universe() const { return mask_.size(); }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool contains(NodeIndex v) const { return v < mask_.size() && mask_[v]; }

  void insert(NodeIndex v) {
    if (!mask_[v]) {
      mask_[v] = true;
      ++count_;
    }
  }

  void erase(NodeIndex v) {
    if (mask_[v]) {
      mask_[v] = false;
      --count_;
    }
  }

  std::vector<NodeIndex> members() const {
    std::vector<NodeIndex> out;
    out.reserve(count_);
    for (std::size_t v = 0; v < mask_.size(); ++v)
      if (mask_[v]) out.push_back(static_cast<NodeIndex>(v));
    return out;
  }

  NodeSet complement() const {
    NodeSet out(mask_.size());
    for (std::size_t v = 0; v < mask_.size(); ++v)
      if (!mask_[v]) out.insert(static_cast<NodeIndex>(v));
    return out;
  }

  NodeSet united(const NodeSet& other) const {
    NodeSet out = *this;
    for (std::size_t v = 0; v < mask_.size(); ++v)
      if (other.mask_[v]) out.insert(static_cast<NodeIndex>(v));
    return out;
  }

  bool includes(const NodeSet& other) const {
    for (std::size_t v = 0; v < mask_.size(); ++v)
      if (other.mask_[v] && !mask_[v]) return false;
    return true;
  }

  friend bool operator==(const NodeSet& a, const NodeSet& b) {
    return a.mask_ == b.mask_;
  }

 private:
  std::vector<bool> mask_;
  std::size_t count_ = 0;
};

}  // namespace byzcount

template <>
struct std::hash<byzcount::NodeId> {
  std::size_t operator()(byzcount::NodeId id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
