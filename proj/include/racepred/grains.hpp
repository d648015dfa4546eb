#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "racepred/commutativity.hpp"
#include "racepred/ids.hpp"
#include "racepred/trace.hpp"

namespace racepred {

// Heuristic switches for the granular detector. Zero / false means off.
struct HeuristicConfig {
  std::uint32_t sz = 0;   // cap on the number of events in each grain
  bool sh = false;        // grain shape: g1 single event or one complete
                          // critical section, g2 single event
  std::uint32_t lru = 0;  // cap on live candidates, least-recently-active evicted
};

// Streaming detector for granular prefix races: pairs (e1, e2) witnessed by an
// order-preserving prefix rho plus two grains g1 ∋ e1 and g2 ∋ e2 such that
// g1·g2 can execute after rho and the pair can be brought adjacent inside
// g1·g2 by independent-neighbor swaps.
//
// Each nondeterministic state assigns roles to the events seen so far:
// included in rho, dropped, member of g1, or member of g2. The stream position
// relative to the grains is tracked as a phase: Before (g1 not started),
// Inside1, Between (g1 closed, g2 not started), Inside2. rho may keep growing
// in Before and Between; grains grow only in their own phase.
struct GrainsOptions {
  bool antichain = true;
  bool track_ids = true;
  HeuristicConfig heur;
  std::uint32_t partition = 0;
  std::uint32_t num_partitions = 1;
};

class GrainsPrefixDetector {
 public:
  using Options = GrainsOptions;

  explicit GrainsPrefixDetector(Options opts = Options()) : opts_(opts) {
    State init;
    frontier_[eq_key(init)].push_back(init);
    states_ = 1;
    peak_ = 1;
  }

  template <typename Emit>
  void feed(const Event& e, Emit&& emit) {
    next_.clear();
    next_states_ = 0;
    emitted_.clear();
    if (opts_.heur.lru) touched_.clear();

    for (auto& [key, bucket] : frontier_) {
      (void)key;
      for (State& s : bucket) step(s, e, emit);
    }

    frontier_.swap(next_);
    states_ = next_states_;
    if (opts_.heur.lru) apply_lru();
    if (states_ > peak_) peak_ = states_;
    ++step_no_;
  }

  std::size_t frontier_size() const { return states_; }
  std::uint64_t peak_states() const { return peak_; }

  static constexpr std::uint32_t kNoId = 0xffffffffu;

 private:
  enum Phase : std::uint8_t { kBefore = 0, kInside1, kBetween, kInside2 };
  enum Shape : std::uint8_t { kShapeEmpty = 0, kShapeSingle, kShapeCsOpen, kShapeCsClosed };

  struct State {
    Phase phase = kBefore;
    // candidate
    bool has_e1 = false;
    std::uint32_t e1_id = kNoId;
    std::uint32_t e1_thread = 0;
    Op e1_op = Op::Read;
    std::uint32_t e1_object = 0;
    // prefix summary (rho_open tracks rho-internal matching only)
    IdSet excl_threads;
    IdSet rho_open;
    IdSet excl_last_wrs;
    // last-write placement: location is in lastw_g1 / lastw_g2 when the
    // latest write so far sits in that grain, in excl_last_wrs when dropped,
    // otherwise it sits in rho (or the location is untouched).
    IdSet lastw_g1;
    IdSet lastw_g2;
    // locations with at least one write included anywhere in the witness
    IdSet written_word;
    // threads whose last witness event is a read that observes a different
    // writer than in the original run; such a read is only admissible as the
    // final event of its thread, so the thread cannot grow further
    IdSet final_threads;
    // locations read by a sealed g1 read whose replacement writer has not
    // been placed into the prefix yet; the obligation must be discharged by a
    // later prefix-include before any accept
    IdSet g1_stale_pending;
    // g1 summary
    IdSet g1_threads;
    IdSet g1_orphan_rels;  // locks g1 released whose acquire sits in rho
    IdSet g1_wrs;
    IdSet g1_orphan_rds;   // locations g1 read from rho writes
    IdSet g1_held;         // locks with an open critical section inside g1
    IdSet g1_entry_free;   // locks whose first g1 op is an acquire
    std::uint32_t g1_len = 0;
    std::uint8_t g1_shape = kShapeEmpty;
    std::uint32_t g1_cs_lock = 0;
    std::uint32_t g1_cs_thread = 0;
    // g2 summary
    IdSet g2_threads;
    IdSet g2_held;
    IdSet g2_closed_g1;    // g1-held locks closed by an orphan release in g2
    IdSet g2_closed_rho;   // rho-open locks closed by an orphan release in g2
    std::uint32_t g2_len = 0;
    // adjacency fold from e1 over g1-after-e1 and g2 members
    AftSet reach;  // seeded with e1; decides absorption
    AftSet inter;  // absorbed members only; decides the race check

    bool eq_fields_equal(const State& o) const {
      return phase == o.phase && has_e1 == o.has_e1 && e1_id == o.e1_id &&
             e1_thread == o.e1_thread && e1_op == o.e1_op && e1_object == o.e1_object &&
             lastw_g1 == o.lastw_g1 && lastw_g2 == o.lastw_g2 &&
             g1_threads == o.g1_threads && g1_orphan_rels == o.g1_orphan_rels &&
             g1_wrs == o.g1_wrs && g1_orphan_rds == o.g1_orphan_rds &&
             g1_held == o.g1_held && g1_entry_free == o.g1_entry_free &&
             g1_len == o.g1_len && g1_shape == o.g1_shape &&
             g1_cs_lock == o.g1_cs_lock && g1_cs_thread == o.g1_cs_thread &&
             g2_threads == o.g2_threads && g2_held == o.g2_held &&
             g2_closed_g1 == o.g2_closed_g1 && g2_closed_rho == o.g2_closed_rho &&
             g2_len == o.g2_len && reach == o.reach && inter == o.inter;
    }
    bool cmp_fields_equal(const State& o) const {
      return excl_threads == o.excl_threads && rho_open == o.rho_open &&
             excl_last_wrs == o.excl_last_wrs && final_threads == o.final_threads &&
             g1_stale_pending == o.g1_stale_pending && written_word == o.written_word;
    }
    // Component-wise comparison: this state passes every guard the other
    // does (smaller exclusion sets, fewer obligations, more written locations).
    bool dominates(const State& o) const {
      return excl_threads.subset_of(o.excl_threads) && rho_open.subset_of(o.rho_open) &&
             excl_last_wrs.subset_of(o.excl_last_wrs) &&
             final_threads.subset_of(o.final_threads) &&
             g1_stale_pending.subset_of(o.g1_stale_pending) &&
             o.written_word.subset_of(written_word);
    }
  };

  std::uint64_t eq_key(const State& s) const {
    std::uint64_t h = 0x6a09e667f3bcc908ull;
    h = hash_combine(h, s.phase);
    h = hash_combine(h, s.has_e1 ? 1 : 0);
    h = hash_combine(h, s.e1_id);
    h = hash_combine(h, s.e1_thread);
    h = hash_combine(h, static_cast<std::uint64_t>(s.e1_op));
    h = hash_combine(h, s.e1_object);
    h = hash_combine(h, s.lastw_g1.hash());
    h = hash_combine(h, s.lastw_g2.hash());
    h = hash_combine(h, s.g1_threads.hash());
    h = hash_combine(h, s.g1_orphan_rels.hash());
    h = hash_combine(h, s.g1_wrs.hash());
    h = hash_combine(h, s.g1_orphan_rds.hash());
    h = hash_combine(h, s.g1_held.hash());
    h = hash_combine(h, s.g1_entry_free.hash());
    h = hash_combine(h, s.g1_len);
    h = hash_combine(h, s.g1_shape);
    h = hash_combine(h, s.g1_cs_lock);
    h = hash_combine(h, s.g1_cs_thread);
    h = hash_combine(h, s.g2_threads.hash());
    h = hash_combine(h, s.g2_held.hash());
    h = hash_combine(h, s.g2_closed_g1.hash());
    h = hash_combine(h, s.g2_closed_rho.hash());
    h = hash_combine(h, s.g2_len);
    h = hash_combine(h, s.reach.hash());
    h = hash_combine(h, s.inter.hash());
    return h;
  }

  // ---- role transitions -------------------------------------------------

  void do_exclude(State t, const Event& e) {
    t.excl_threads.insert(e.thread);
    if (e.op == Op::Write) {
      t.excl_last_wrs.insert(e.object);
      t.lastw_g1.erase(e.object);
      t.lastw_g2.erase(e.object);
    }
    push(std::move(t));
  }

  // rho-include; valid in Before and Between. A thread that already
  // contributed an event to a grain cannot put later events into rho: they
  // would precede the grain event in the witness word against program order.
  void do_rho_include(const State& s, const Event& e) {
    if (s.excl_threads.contains(e.thread)) return;
    if (s.g1_threads.contains(e.thread) || s.g2_threads.contains(e.thread)) return;
    State t = s;
    switch (e.op) {
      case Op::Acquire:
        if (t.rho_open.contains(e.object)) return;
        if (s.phase == kBetween && t.g1_orphan_rels.contains(e.object)) return;
        t.rho_open.insert(e.object);
        break;
      case Op::Release:
        if (!t.rho_open.contains(e.object)) return;
        t.rho_open.erase(e.object);
        break;
      case Op::Read:
        // rho must preserve the original reads-from exactly: the latest write
        // has to sit in rho as well.
        if (t.lastw_g1.contains(e.object) || t.lastw_g2.contains(e.object) ||
            t.excl_last_wrs.contains(e.object))
          return;
        break;
      case Op::Write:
        if (s.phase == kBetween && t.g1_orphan_rds.contains(e.object)) return;
        t.excl_last_wrs.erase(e.object);
        t.lastw_g1.erase(e.object);
        t.written_word.insert(e.object);
        // This write becomes the latest one before g1 in the witness word,
        // supplying the replacement writer a sealed g1 read was waiting for.
        t.g1_stale_pending.erase(e.object);
        break;
    }
    push(std::move(t));
  }

  // Whether a lock is currently held at the end of the partial witness word.
  static bool held_in_word(const State& s, std::uint32_t lock) {
    if (s.g2_held.contains(lock)) return true;
    if (s.g1_held.contains(lock) && !s.g2_closed_g1.contains(lock)) return true;
    if (s.rho_open.contains(lock) && !s.g1_orphan_rels.contains(lock) &&
        !s.g2_closed_rho.contains(lock))
      return true;
    return false;
  }

  // g1-extend; phase is Before (opening) or Inside1. May also mark e as the
  // candidate e1.
  void do_g1_extend(const State& s, const Event& e) {
    if (s.excl_threads.contains(e.thread) || s.final_threads.contains(e.thread)) return;
    if (opts_.heur.sz && s.g1_len >= opts_.heur.sz) return;
    if (opts_.heur.sh) {
      if (s.g1_shape == kShapeSingle || s.g1_shape == kShapeCsClosed) return;
      if (s.g1_shape == kShapeCsOpen && e.thread != s.g1_cs_thread) return;
    }

    // Finish one variant of including e in g1: shared bookkeeping, the plain
    // successor, and (when eligible) the copy that marks e as the candidate e1.
    auto commit = [&](State t, bool breaks_thread) {
      t.phase = kInside1;
      t.g1_threads.insert(e.thread);
      ++t.g1_len;
      if (breaks_thread) t.final_threads.insert(e.thread);
      if (opts_.heur.sh) {
        if (s.g1_shape == kShapeEmpty) {
          if (e.op == Op::Acquire) {
            t.g1_shape = kShapeCsOpen;
            t.g1_cs_lock = e.object;
            t.g1_cs_thread = e.thread;
          } else {
            t.g1_shape = kShapeSingle;
          }
        } else if (s.g1_shape == kShapeCsOpen && e.op == Op::Release &&
                   e.object == s.g1_cs_lock) {
          t.g1_shape = kShapeCsClosed;
        }
      }
      if (t.has_e1 && t.reach.dependent_on(e)) {
        t.reach.add(e);
        t.inter.add(e);
      }
      touch(t);
      push(State(t));  // without candidate mark (or with the earlier one)

      // Mark e as e1 (only if no candidate yet, memory op, owned partition).
      if (!s.has_e1 && is_memory_op(e.op) &&
          e.object % opts_.num_partitions == opts_.partition) {
        State c = std::move(t);
        c.has_e1 = true;
        c.e1_id = opts_.track_ids ? e.id : kNoId;
        c.e1_thread = e.thread;
        c.e1_op = e.op;
        c.e1_object = e.object;
        c.reach = AftSet{};
        c.reach.add(e);
        c.inter = AftSet{};
        touch(c);
        push(std::move(c));
      }
    };

    switch (e.op) {
      case Op::Acquire: {
        State t = s;
        if (t.g1_held.contains(e.object)) return;
        if (t.rho_open.contains(e.object) && !t.g1_orphan_rels.contains(e.object)) return;
        if (!t.g1_entry_free.contains(e.object) && !t.g1_orphan_rels.contains(e.object))
          t.g1_entry_free.insert(e.object);
        t.g1_held.insert(e.object);
        commit(std::move(t), false);
        break;
      }
      case Op::Release: {
        State t = s;
        if (t.g1_held.contains(e.object)) {
          t.g1_held.erase(e.object);
        } else if (t.rho_open.contains(e.object) && !t.g1_orphan_rels.contains(e.object)) {
          t.g1_orphan_rels.insert(e.object);
        } else {
          return;
        }
        commit(std::move(t), false);
        break;
      }
      case Op::Read: {
        bool in_g1 = s.lastw_g1.contains(e.object);
        bool in_excl = s.excl_last_wrs.contains(e.object);
        bool in_rho = !in_g1 && !in_excl;  // lastw_g2 is empty before Inside2
        if (in_g1) {
          // Reads its own grain's write; no later placement can change that.
          commit(State(s), false);
        } else if (in_rho && !s.g1_wrs.contains(e.object)) {
          // Same writer as in the original run for now; protect it against
          // later prefix-included writes of this location.
          State t = s;
          t.g1_orphan_rds.insert(e.object);
          commit(std::move(t), false);
          // Alternatively, allow a later prefix-included write to replace the
          // writer: then the read observes a different one and must be the
          // final event of its thread, but the location needs no protection.
          commit(State(s), true);
        } else if (s.written_word.contains(e.object)) {
          // Observes a different writer than in the original run: admissible
          // only as the final event of its thread.
          commit(State(s), true);
        } else if (in_excl) {
          // The original writer was dropped and nothing wrote the location in
          // the word yet; only a later prefix-included write can supply a
          // writer, and the read seals its thread as above.
          State t = s;
          t.g1_stale_pending.insert(e.object);
          commit(std::move(t), true);
        } else {
          return;
        }
        break;
      }
      case Op::Write: {
        State t = s;
        t.lastw_g1.insert(e.object);
        t.excl_last_wrs.erase(e.object);
        t.g1_wrs.insert(e.object);
        t.written_word.insert(e.object);
        commit(std::move(t), false);
        break;
      }
    }
  }

  // g2-extend; phase Between (opening) or Inside2.
  void do_g2_extend(const State& s, const Event& e) {
    if (s.excl_threads.contains(e.thread) || s.final_threads.contains(e.thread)) return;
    if (opts_.heur.sz && s.g2_len >= opts_.heur.sz) return;
    if (opts_.heur.sh && s.g2_len >= 1) return;

    State t = s;
    t.phase = kInside2;
    bool broken_read = false;
    switch (e.op) {
      case Op::Acquire:
        if (held_in_word(t, e.object)) return;
        t.g2_held.insert(e.object);
        break;
      case Op::Release:
        if (t.g2_held.contains(e.object)) {
          t.g2_held.erase(e.object);
        } else if (t.g1_held.contains(e.object) && !t.g2_closed_g1.contains(e.object)) {
          t.g2_closed_g1.insert(e.object);
        } else if (t.rho_open.contains(e.object) && !t.g1_orphan_rels.contains(e.object) &&
                   !t.g2_closed_rho.contains(e.object)) {
          t.g2_closed_rho.insert(e.object);
        } else {
          return;
        }
        break;
      case Op::Read: {
        bool in_g2 = t.lastw_g2.contains(e.object);
        bool in_g1 = t.lastw_g1.contains(e.object);
        bool in_excl = t.excl_last_wrs.contains(e.object);
        bool in_rho = !in_g2 && !in_g1 && !in_excl;
        if (in_g2 || in_g1 || (in_rho && !t.g1_wrs.contains(e.object))) {
          // exact reads-from
        } else if (t.written_word.contains(e.object)) {
          broken_read = true;
        } else {
          return;
        }
        break;
      }
      case Op::Write:
        t.lastw_g2.insert(e.object);
        t.lastw_g1.erase(e.object);
        t.excl_last_wrs.erase(e.object);
        t.written_word.insert(e.object);
        break;
    }
    t.g2_threads.insert(e.thread);
    ++t.g2_len;
    if (broken_read) t.final_threads.insert(e.thread);
    if (t.reach.dependent_on(e)) {
      t.reach.add(e);
      t.inter.add(e);
    }
    touch(t);
    push(std::move(t));
  }

  // Race check for e as e2, with the current g2 extended by e. The reads-from
  // condition is exempt: e is the last event of its thread in the witness.
  template <typename Emit>
  void try_accept(const State& s, const Event& e, Emit&& emit) {
    if (!s.has_e1 || !is_memory_op(e.op)) return;
    if (e.object != s.e1_object || (e.op != Op::Write && s.e1_op != Op::Write)) return;
    if (e.thread == s.e1_thread) return;
    if (s.excl_threads.contains(e.thread) || s.final_threads.contains(e.thread)) return;
    if (opts_.heur.sz && s.g2_len >= opts_.heur.sz) return;
    if (opts_.heur.sh && s.g2_len >= 1) return;
    if (s.inter.dependent_on(e)) return;
    // Deferred lock check: a lock whose first g1 op is an acquire must not be
    // left open by rho.
    if (s.rho_open.intersects(s.g1_entry_free)) return;
    // A sealed g1 read still waiting for its replacement writer cannot be
    // part of a witness.
    if (!s.g1_stale_pending.empty()) return;
    if (emitted_.insert(candidate_key(s)).second) emit(s.e1_id, e);
  }

  template <typename Emit>
  void step(const State& s, const Event& e, Emit&& emit) {
    switch (s.phase) {
      case kBefore:
        do_exclude(s, e);
        do_rho_include(s, e);
        do_g1_extend(s, e);  // opens g1
        break;
      case kInside1: {
        do_exclude(s, e);
        do_g1_extend(s, e);
        bool may_close = s.has_e1;
        if (may_close && opts_.heur.sh)
          may_close = s.g1_shape == kShapeSingle || s.g1_shape == kShapeCsClosed;
        if (may_close) {
          // Close g1 before e; e is then handled in phase Between.
          State closed = s;
          closed.phase = kBetween;
          try_accept(closed, e, emit);
          do_exclude(closed, e);
          do_rho_include(closed, e);
          do_g2_extend(closed, e);  // opens g2
        }
        break;
      }
      case kBetween:
        try_accept(s, e, emit);
        do_exclude(s, e);
        do_rho_include(s, e);
        do_g2_extend(s, e);  // opens g2
        break;
      case kInside2:
        try_accept(s, e, emit);
        do_exclude(s, e);
        do_g2_extend(s, e);
        break;
    }
  }

  void push(State&& s) {
    auto& bucket = next_[eq_key(s)];
    if (opts_.antichain) {
      for (const State& kept : bucket)
        if (kept.eq_fields_equal(s) && kept.dominates(s)) return;
      std::size_t kept_n = 0;
      for (std::size_t i = 0; i < bucket.size(); ++i) {
        if (!(s.eq_fields_equal(bucket[i]) && s.dominates(bucket[i]))) {
          if (kept_n != i) bucket[kept_n] = std::move(bucket[i]);
          ++kept_n;
        }
      }
      next_states_ -= bucket.size() - kept_n;
      bucket.resize(kept_n);
    } else {
      for (const State& kept : bucket)
        if (kept.eq_fields_equal(s) && kept.cmp_fields_equal(s)) return;
    }
    bucket.push_back(std::move(s));
    ++next_states_;
  }

  std::uint64_t candidate_key(const State& s) const {
    std::uint64_t h = hash_combine(0x9216d5d98979fb1bull, s.e1_id);
    h = hash_combine(h, s.e1_thread);
    h = hash_combine(h, static_cast<std::uint64_t>(s.e1_op));
    h = hash_combine(h, s.e1_object);
    return h;
  }

  void touch(const State& s) {
    if (opts_.heur.lru && s.has_e1) touched_.insert(candidate_key(s));
  }

  void apply_lru() {
    for (std::uint64_t k : touched_) lru_stamp_[k] = step_no_;
    // collect live candidates
    std::unordered_map<std::uint64_t, std::uint64_t> live;  // key -> stamp
    for (auto& [key, bucket] : frontier_) {
      (void)key;
      for (const State& s : bucket) {
        if (!s.has_e1) continue;
        std::uint64_t k = candidate_key(s);
        auto it = lru_stamp_.find(k);
        live[k] = it == lru_stamp_.end() ? 0 : it->second;
      }
    }
    if (live.size() <= opts_.heur.lru) return;
    // evict oldest candidates until within budget
    std::vector<std::pair<std::uint64_t, std::uint64_t>> order(live.begin(), live.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    std::unordered_set<std::uint64_t> evict;
    for (std::size_t i = 0; i + opts_.heur.lru < order.size(); ++i)
      evict.insert(order[i].first);
    for (auto it = frontier_.begin(); it != frontier_.end();) {
      auto& bucket = it->second;
      std::size_t kept_n = 0;
      for (std::size_t i = 0; i < bucket.size(); ++i) {
        if (!(bucket[i].has_e1 && evict.count(candidate_key(bucket[i])))) {
          if (kept_n != i) bucket[kept_n] = std::move(bucket[i]);
          ++kept_n;
        }
      }
      states_ -= bucket.size() - kept_n;
      bucket.resize(kept_n);
      it = bucket.empty() ? frontier_.erase(it) : std::next(it);
    }
    for (std::uint64_t k : evict) lru_stamp_.erase(k);
  }

  Options opts_;
  std::unordered_map<std::uint64_t, std::vector<State>> frontier_;
  std::unordered_map<std::uint64_t, std::vector<State>> next_;
  std::unordered_set<std::uint64_t> emitted_;
  std::unordered_set<std::uint64_t> touched_;
  std::unordered_map<std::uint64_t, std::uint64_t> lru_stamp_;
  std::size_t states_ = 0;
  std::size_t next_states_ = 0;
  std::uint64_t peak_ = 0;
  std::uint64_t step_no_ = 0;
};

// Runs the detector over a whole trace and returns the sorted pair list.
inline std::vector<RacePair> detect_granular_races(const Trace& trace,
                                                   HeuristicConfig heur = {},
                                                   bool antichain = true) {
  GrainsPrefixDetector det({antichain, true, heur, 0, 1});
  std::vector<RacePair> out;
  for (const Event& e : trace.events)
    det.feed(e, [&](std::uint32_t e1, const Event& e2) { out.push_back(RacePair{e1, e2.id}); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace racepred
