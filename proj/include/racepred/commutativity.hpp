#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "racepred/ids.hpp"
#include "racepred/trace.hpp"

namespace racepred {

// Two events are independent when they are on different threads, do not
// conflict on a memory location, and do not touch the same lock. Adjacent
// independent events may be swapped without changing program semantics.
inline bool independent(const Event& a, const Event& b) {
  if (a.thread == b.thread) return false;
  if (conflicting(a, b)) return false;
  if (is_lock_op(a.op) && is_lock_op(b.op) && a.object == b.object) return false;
  return true;
}

inline bool dependent(const Event& a, const Event& b) { return !independent(a, b); }

// Label footprint of a set of events: the threads, read locations, written
// locations and locks they touch. Enough to decide whether a new event is
// dependent on some event of the set without storing the events themselves.
struct AftSet {
  IdSet threads;
  IdSet reads;
  IdSet writes;
  IdSet locks;

  void add(const Event& e) {
    threads.insert(e.thread);
    switch (e.op) {
      case Op::Read: reads.insert(e.object); break;
      case Op::Write: writes.insert(e.object); break;
      case Op::Acquire:
      case Op::Release: locks.insert(e.object); break;
    }
  }

  // Whether e is dependent on some event whose label is recorded here.
  bool dependent_on(const Event& e) const {
    if (threads.contains(e.thread)) return true;
    switch (e.op) {
      case Op::Read: return writes.contains(e.object);
      case Op::Write: return writes.contains(e.object) || reads.contains(e.object);
      case Op::Acquire:
      case Op::Release: return locks.contains(e.object);
    }
    return false;
  }

  bool empty() const {
    return threads.empty() && reads.empty() && writes.empty() && locks.empty();
  }

  bool operator==(const AftSet& o) const {
    return threads == o.threads && reads == o.reads && writes == o.writes && locks == o.locks;
  }

  std::uint64_t hash() const {
    std::uint64_t h = threads.hash();
    h = hash_combine(h, reads.hash());
    h = hash_combine(h, writes.hash());
    h = hash_combine(h, locks.hash());
    return h;
  }
};

// Whether the pair (word[i1], word[i2]) with i1 < i2 can be made adjacent by
// repeatedly swapping neighboring independent events of the word. The fold
// tracks two footprints: `reach` (seeded with word[i1]) decides which
// in-between events are transitively forced to stay after word[i1]; `inter`
// holds only those absorbed in-between events and decides the final check, so
// that the conflict between the endpoints themselves does not mask the answer.
inline bool mrace_in_word(const std::vector<Event>& word, std::size_t i1, std::size_t i2) {
  if (i2 >= word.size() || i1 >= i2) return false;
  const Event& e1 = word[i1];
  const Event& e2 = word[i2];
  if (!conflicting(e1, e2) || e1.thread == e2.thread) return false;
  AftSet reach;
  reach.add(e1);
  AftSet inter;
  for (std::size_t k = i1 + 1; k < i2; ++k) {
    if (reach.dependent_on(word[k])) {
      reach.add(word[k]);
      inter.add(word[k]);
    }
  }
  return !inter.dependent_on(e2);
}

enum class MraceMode {
  Exhaustive,  // keep every memory event as a live candidate
  Existence,   // keep only the newest candidate per (thread, kind, location)
};

// Streaming detector for conflicting pairs that can be brought adjacent by
// independent-neighbor swaps. Exhaustive and existence modes report the same
// pair set: an older candidate with the same (thread, kind, location) slot is
// permanently blocked once a newer one is absorbed into its footprint.
struct MraceOptions {
  MraceMode mode = MraceMode::Exhaustive;
  std::uint32_t partition = 0;       // this detector owns candidate locations
  std::uint32_t num_partitions = 1;  // with object % num_partitions == partition
};

class MraceDetector {
 public:
  using Options = MraceOptions;

  explicit MraceDetector(Options opts = Options()) : opts_(opts) {}

  // Feeds one event; emit(e1_id, e2_event) is called for each detected pair.
  template <typename Emit>
  void feed(const Event& e, Emit&& emit) {
    for (Candidate& c : candidates_) {
      if (conflicting(c.e1, e) && c.e1.thread != e.thread && !c.inter.dependent_on(e))
        emit(c.e1.id, e);
      if (c.reach.dependent_on(e)) {
        c.reach.add(e);
        c.inter.add(e);
      }
    }
    if (is_memory_op(e.op) && e.object % opts_.num_partitions == opts_.partition) {
      if (opts_.mode == MraceMode::Existence) {
        for (std::size_t i = 0; i < candidates_.size(); ++i) {
          const Event& old = candidates_[i].e1;
          if (old.thread == e.thread && old.op == e.op && old.object == e.object) {
            candidates_.erase(candidates_.begin() + static_cast<std::ptrdiff_t>(i));
            break;
          }
        }
      }
      Candidate c;
      c.e1 = e;
      c.reach.add(e);
      candidates_.push_back(std::move(c));
      if (candidates_.size() > peak_) peak_ = candidates_.size();
    }
  }

  std::size_t live_candidates() const { return candidates_.size(); }
  std::uint64_t peak_states() const { return peak_; }

 private:
  struct Candidate {
    Event e1;
    AftSet reach;  // e1 plus everything transitively dependent on it
    AftSet inter;  // only the absorbed in-between events
  };

  Options opts_;
  std::vector<Candidate> candidates_;
  std::uint64_t peak_ = 0;
};

// Runs the detector over a whole trace and returns the sorted pair list.
inline std::vector<RacePair> detect_mraces(const Trace& trace,
                                           MraceMode mode = MraceMode::Exhaustive) {
  MraceDetector det({mode, 0, 1});
  std::vector<RacePair> out;
  for (const Event& e : trace.events)
    det.feed(e, [&](std::uint32_t a, const Event& b) { out.push_back(RacePair{a, b.id}); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace racepred
