#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "racepred/ids.hpp"
#include "racepred/trace.hpp"

namespace racepred {

// Streaming detector for prefix races: pairs of conflicting events that are
// both enabled after some order-preserving prefix of the observed trace.
//
// Each nondeterministic state summarizes one guessed prefix:
//   - excl_threads: threads with at least one dropped event (dropping an event
//     bars the rest of its thread, since prefixes are per-thread prefixes),
//   - open_lcks: locks acquired inside the prefix but not yet released,
//   - excl_last_wrs: locations whose latest write so far was dropped.
// A state may additionally carry a race candidate e1 (a memory event that was
// left out while enabled). On a later conflicting event e2 of a non-excluded
// thread, the pair (e1, e2) is reported.
//
// With `track_ids` off, candidates are merged by label (thread, kind,
// location); the total state space is then bounded by the label universe and
// independent of the trace length, and races are reported per racy e2 only.
struct SeqpOptions {
  bool antichain = true;
  bool track_ids = true;
  std::uint32_t partition = 0;
  std::uint32_t num_partitions = 1;
};

class SeqpDetector {
 public:
  using Options = SeqpOptions;

  explicit SeqpDetector(Options opts = Options()) : opts_(opts) {
    State init;
    init.has_candidate = false;
    frontier_[key_of(init)].push_back(init);
    states_ = 1;
    peak_ = 1;
  }

  // Feeds one event. For each race found, emit(e1_id, e2_event) is called once
  // per distinct candidate id (or once with e1_id == kNoId when ids are off).
  template <typename Emit>
  void feed(const Event& e, Emit&& emit) {
    next_.clear();
    next_states_ = 0;
    emitted_.clear();

    for (auto& [key, bucket] : frontier_) {
      (void)key;
      for (State& s : bucket) {
        // Race check: e2 must conflict with the candidate, be on another
        // thread, and have its whole thread included so far.
        if (s.has_candidate && !s.excl_threads.contains(e.thread) &&
            e.thread != s.e1_thread && is_memory_op(e.op) && e.object == s.e1_object &&
            (e.op == Op::Write || s.e1_op == Op::Write)) {
          if (emitted_.insert(key_of(s)).second) emit(s.e1_id, e);
        }

        // EXCLUDE: always possible.
        {
          State t = s;
          t.excl_threads.insert(e.thread);
          if (e.op == Op::Write) t.excl_last_wrs.insert(e.object);
          push(std::move(t));
        }

        // INCLUDE: thread must be fully included so far; op-specific guards.
        if (!s.excl_threads.contains(e.thread)) {
          bool ok = true;
          State t = s;
          switch (e.op) {
            case Op::Acquire:
              if (t.open_lcks.contains(e.object)) ok = false;
              else t.open_lcks.insert(e.object);
              break;
            case Op::Release:
              // The matching acquire is included (the thread is fully
              // included), so the lock is open here.
              t.open_lcks.erase(e.object);
              break;
            case Op::Read:
              if (t.excl_last_wrs.contains(e.object)) ok = false;
              break;
            case Op::Write:
              t.excl_last_wrs.erase(e.object);
              break;
          }
          if (ok) push(std::move(t));

          // PICK: leave e out while enabled and remember it as candidate.
          if (!s.has_candidate && is_memory_op(e.op) &&
              e.object % opts_.num_partitions == opts_.partition) {
            State c = s;
            c.has_candidate = true;
            c.e1_id = opts_.track_ids ? e.id : kNoId;
            c.e1_thread = e.thread;
            c.e1_op = e.op;
            c.e1_object = e.object;
            c.excl_threads.insert(e.thread);
            if (e.op == Op::Write) c.excl_last_wrs.insert(e.object);
            push(std::move(c));
          }
        }
      }
    }

    frontier_.swap(next_);
    states_ = next_states_;
    if (states_ > peak_) peak_ = states_;
  }

  std::size_t frontier_size() const { return states_; }
  std::uint64_t peak_states() const { return peak_; }

  static constexpr std::uint32_t kNoId = 0xffffffffu;

 private:
  struct State {
    bool has_candidate = false;
    std::uint32_t e1_id = kNoId;
    std::uint32_t e1_thread = 0;
    Op e1_op = Op::Read;
    std::uint32_t e1_object = 0;
    IdSet excl_threads;
    IdSet open_lcks;
    IdSet excl_last_wrs;

    bool same_candidate(const State& o) const {
      return has_candidate == o.has_candidate && e1_id == o.e1_id &&
             e1_thread == o.e1_thread && e1_op == o.e1_op && e1_object == o.e1_object;
    }
    bool sets_equal(const State& o) const {
      return excl_threads == o.excl_threads && open_lcks == o.open_lcks &&
             excl_last_wrs == o.excl_last_wrs;
    }
    // Component-wise ⊆: this state passes every guard the other passes.
    bool dominates(const State& o) const {
      return excl_threads.subset_of(o.excl_threads) && open_lcks.subset_of(o.open_lcks) &&
             excl_last_wrs.subset_of(o.excl_last_wrs);
    }
  };

  std::uint64_t key_of(const State& s) const {
    std::uint64_t h = s.has_candidate ? 0x51ed270b9f8f51c5ull : 0x243f6a8885a308d3ull;
    h = hash_combine(h, s.e1_id);
    h = hash_combine(h, s.e1_thread);
    h = hash_combine(h, static_cast<std::uint64_t>(s.e1_op));
    h = hash_combine(h, s.e1_object);
    return h;
  }

  void push(State&& s) {
    auto& bucket = next_[key_of(s)];
    if (opts_.antichain) {
      for (const State& kept : bucket)
        if (kept.same_candidate(s) && kept.dominates(s)) return;
      std::size_t kept_n = 0;
      for (std::size_t i = 0; i < bucket.size(); ++i) {
        if (!(s.same_candidate(bucket[i]) && s.dominates(bucket[i]))) {
          if (kept_n != i) bucket[kept_n] = std::move(bucket[i]);
          ++kept_n;
        }
      }
      next_states_ -= bucket.size() - kept_n;
      bucket.resize(kept_n);
    } else {
      for (const State& kept : bucket)
        if (kept.same_candidate(s) && kept.sets_equal(s)) return;
    }
    bucket.push_back(std::move(s));
    ++next_states_;
  }

  Options opts_;
  // Buckets keyed by candidate identity; antichain filtering happens within a
  // bucket. (Key collisions across candidates would only cost precision of the
  // pruning, not correctness, but the key is a 64-bit hash of the candidate.)
  std::unordered_map<std::uint64_t, std::vector<State>> frontier_;
  std::unordered_map<std::uint64_t, std::vector<State>> next_;
  std::unordered_set<std::uint64_t> emitted_;
  std::size_t states_ = 0;
  std::size_t next_states_ = 0;
  std::uint64_t peak_ = 0;
};

// Runs the detector over a whole trace and returns the sorted pair list.
inline std::vector<RacePair> detect_prefix_races(const Trace& trace, bool antichain = true) {
  SeqpDetector det({antichain, true, 0, 1});
  std::vector<RacePair> out;
  for (const Event& e : trace.events)
    det.feed(e, [&](std::uint32_t e1, const Event& e2) { out.push_back(RacePair{e1, e2.id}); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace racepred
