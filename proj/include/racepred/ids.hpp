#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace racepred {

// Set of small dense non-negative ids backed by bit blocks. Ids 0..63 live in
// one inline word; larger universes spill to a heap vector (rare in practice:
// thread/lock/location tables are small). Value semantics, cheap to copy and
// hash while ids stay below 64.
class IdSet {
 public:
  IdSet() = default;

  void insert(std::uint32_t id) {
    if (id < 64) {
      lo_ |= (std::uint64_t{1} << id);
    } else {
      std::size_t block = (id >> 6) - 1;
      if (hi_.size() <= block) hi_.resize(block + 1, 0);
      hi_[block] |= (std::uint64_t{1} << (id & 63));
    }
  }

  void erase(std::uint32_t id) {
    if (id < 64) {
      lo_ &= ~(std::uint64_t{1} << id);
    } else {
      std::size_t block = (id >> 6) - 1;
      if (block < hi_.size()) {
        hi_[block] &= ~(std::uint64_t{1} << (id & 63));
        normalize();
      }
    }
  }

  bool contains(std::uint32_t id) const {
    if (id < 64) return (lo_ >> id) & 1;
    std::size_t block = (id >> 6) - 1;
    if (block >= hi_.size()) return false;
    return (hi_[block] >> (id & 63)) & 1;
  }

  bool empty() const { return lo_ == 0 && hi_.empty(); }

  std::size_t count() const {
    std::size_t n = popcount(lo_);
    for (std::uint64_t b : hi_) n += popcount(b);
    return n;
  }

  void clear() {
    lo_ = 0;
    hi_.clear();
  }

  // this ⊆ other
  bool subset_of(const IdSet& other) const {
    if (lo_ & ~other.lo_) return false;
    if (hi_.size() > other.hi_.size()) return false;  // normalized: extra blocks are nonzero
    for (std::size_t i = 0; i < hi_.size(); ++i)
      if (hi_[i] & ~other.hi_[i]) return false;
    return true;
  }

  bool intersects(const IdSet& other) const {
    if (lo_ & other.lo_) return true;
    std::size_t n = hi_.size() < other.hi_.size() ? hi_.size() : other.hi_.size();
    for (std::size_t i = 0; i < n; ++i)
      if (hi_[i] & other.hi_[i]) return true;
    return false;
  }

  IdSet& operator|=(const IdSet& other) {
    lo_ |= other.lo_;
    if (hi_.size() < other.hi_.size()) hi_.resize(other.hi_.size(), 0);
    for (std::size_t i = 0; i < other.hi_.size(); ++i) hi_[i] |= other.hi_[i];
    return *this;
  }

  bool operator==(const IdSet& other) const { return lo_ == other.lo_ && hi_ == other.hi_; }
  bool operator!=(const IdSet& other) const { return !(*this == other); }

  std::uint64_t hash() const {
    std::uint64_t h = mix(lo_ + 0x9e3779b97f4a7c15ull);
    for (std::uint64_t b : hi_) h = mix(h ^ mix(b + 0x9e3779b97f4a7c15ull));
    return h;
  }

  template <typename F>
  void for_each(F&& f) const {
    std::uint64_t w = lo_;
    while (w) {
      f(static_cast<std::uint32_t>(ctz(w)));
      w &= w - 1;
    }
    for (std::size_t i = 0; i < hi_.size(); ++i) {
      std::uint64_t b = hi_[i];
      while (b) {
        f(static_cast<std::uint32_t>(((i + 1) << 6) + ctz(b)));
        b &= b - 1;
      }
    }
  }

  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ull;
    x ^= x >> 33;
    return x;
  }

 private:
  static int popcount(std::uint64_t v) { return __builtin_popcountll(v); }
  static int ctz(std::uint64_t v) { return __builtin_ctzll(v); }

  void normalize() {
    while (!hi_.empty() && hi_.back() == 0) hi_.pop_back();
  }

  std::uint64_t lo_ = 0;
  std::vector<std::uint64_t> hi_;  // blocks for ids >= 64
};

// Combines hashes; order-sensitive.
inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return IdSet::mix(seed ^ (v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
}

}  // namespace racepred
