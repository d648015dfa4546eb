#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "racepred/commutativity.hpp"
#include "racepred/trace.hpp"

namespace racepred {

// Enumeration bounds for the brute-force reference implementations. Exceeding
// a bound raises OracleLimitExceeded; results are never silently truncated.
struct OracleBudget {
  std::uint32_t max_events = 12;        // general enumeration ops
  std::uint32_t max_events_tight = 9;   // ops that multiply over suffixes/grains
  std::uint64_t max_reorderings = 20'000'000;
  double wall_seconds = 600.0;
};

struct OracleLimitExceeded : std::runtime_error {
  explicit OracleLimitExceeded(const std::string& what)
      : std::runtime_error("oracle-budget-exceeded: " + what) {}
};

// One concrete justification for a window-pair race report: the replayed
// prefix and the two trace-order windows whose concatenation exhibits the
// pair. Event ids are ascending within each component.
struct GranularWitness {
  std::vector<std::uint32_t> rho;
  std::vector<std::uint32_t> g1;
  std::vector<std::uint32_t> g2;
};

namespace oracle_detail {

constexpr std::uint32_t kMaxEvents = 12;
constexpr std::uint32_t kMaxThreads = 8;
constexpr std::uint32_t kMaxObjects = 8;  // locations and locks separately

// Dense, machine-word-sized view of a small trace. Everything the reference
// enumerations touch lives in fixed arrays so per-trace setup stays cheap.
struct SmallTrace {
  std::uint32_t n = 0;
  std::uint32_t num_threads = 0;
  std::uint32_t num_locations = 0;
  std::uint32_t num_locks = 0;
  std::array<std::uint8_t, kMaxEvents> thread{};
  std::array<Op, kMaxEvents> op{};
  std::array<std::uint8_t, kMaxEvents> obj{};
  std::array<std::int8_t, kMaxEvents> po_pred{};
  std::array<std::int8_t, kMaxEvents> rf{};
  std::array<std::uint8_t, kMaxEvents> tidx{};  // index within own thread
  std::array<std::array<std::uint8_t, kMaxEvents>, kMaxThreads> tev{};
  std::array<std::uint8_t, kMaxThreads> tlen{};
  // held[t][k] = bitmask of locks thread t holds after its first k events
  std::array<std::array<std::uint8_t, kMaxEvents + 1>, kMaxThreads> held{};
  const Trace* src = nullptr;

  explicit SmallTrace(const Trace& t) {
    if (t.size() > kMaxEvents)
      throw OracleLimitExceeded("trace has " + std::to_string(t.size()) +
                                " events, reference enumeration caps at " +
                                std::to_string(kMaxEvents));
    if (t.num_threads() > kMaxThreads || t.num_locations() > kMaxObjects ||
        t.num_locks() > kMaxObjects)
      throw OracleLimitExceeded("trace universe too large for packed state");
    src = &t;
    n = static_cast<std::uint32_t>(t.size());
    num_threads = t.num_threads();
    num_locations = t.num_locations();
    num_locks = t.num_locks();
    std::array<std::int8_t, kMaxObjects> lastw;
    lastw.fill(-1);
    for (std::uint32_t i = 0; i < n; ++i) {
      const Event& e = t.events[i];
      thread[i] = static_cast<std::uint8_t>(e.thread);
      op[i] = e.op;
      obj[i] = static_cast<std::uint8_t>(e.object);
      std::uint8_t& len = tlen[e.thread];
      po_pred[i] = len == 0 ? -1 : static_cast<std::int8_t>(tev[e.thread][len - 1]);
      tidx[i] = len;
      tev[e.thread][len] = static_cast<std::uint8_t>(i);
      std::uint8_t h = held[e.thread][len];
      if (e.op == Op::Acquire) h |= std::uint8_t(1u << e.object);
      if (e.op == Op::Release) h &= std::uint8_t(~(1u << e.object));
      held[e.thread][len + 1] = h;
      ++len;
      rf[i] = -1;
      if (e.op == Op::Read) rf[i] = lastw[e.object];
      if (e.op == Op::Write) lastw[e.object] = static_cast<std::int8_t>(i);
    }
  }

  std::uint32_t full_mask() const { return n == 32 ? 0xffffffffu : ((1u << n) - 1); }
  bool is_lock_free(const std::array<std::uint8_t, kMaxThreads>& counts,
                    std::uint32_t lock) const {
    for (std::uint32_t u = 0; u < num_threads; ++u)
      if (held[u][counts[u]] & (1u << lock)) return false;
    return true;
  }
};

struct WallClock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double limit;
  std::uint64_t ticks = 0;
  explicit WallClock(double limit_seconds) : limit(limit_seconds) {}
  void tick() {
    if ((++ticks & 0xfff) != 0) return;
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (s > limit) throw OracleLimitExceeded("wall clock limit exceeded");
  }
};

// Packs per-thread progress counts plus the per-location id of the latest
// executed write into one 64-bit key.
inline std::uint64_t pack_state(const SmallTrace& st,
                                const std::array<std::uint8_t, kMaxThreads>& counts,
                                const std::array<std::int8_t, kMaxObjects>& lastw) {
  std::uint64_t k = 0;
  for (std::uint32_t t = 0; t < st.num_threads; ++t)
    k |= std::uint64_t(counts[t]) << (4 * t);
  for (std::uint32_t x = 0; x < st.num_locations; ++x)
    k |= std::uint64_t(std::uint8_t(lastw[x] + 1)) << (32 + 4 * x);
  return k;
}

}  // namespace oracle_detail

// Brute-force reference implementations over one small trace. The session
// caches the per-trace precomputation and intermediate enumerations so a test
// harness can ask for several race classes without repeating work.
class OracleSession {
 public:
  explicit OracleSession(const Trace& t, OracleBudget budget = OracleBudget())
      : budget_(budget), st_(t) {
    for (std::uint32_t a = 0; a < st_.n; ++a)
      for (std::uint32_t b = a + 1; b < st_.n; ++b)
        if (st_.thread[a] != st_.thread[b] && conflicting(t.events[a], t.events[b]))
          conflict_pairs_.push_back(RacePair{a, b});
  }

  const std::vector<RacePair>& conflict_pairs() const { return conflict_pairs_; }

  // --- order-preserving prefixes -----------------------------------------

  // All event subsets that are per-thread prefixes and whose trace-order
  // linearization is well-formed with every read still seeing its original
  // writer. Returned as bitmasks over event ids.
  const std::vector<std::uint32_t>& prefix_masks() {
    if (prefix_masks_ready_) return prefix_masks_;
    prefix_masks_ready_ = true;
    std::array<std::uint8_t, oracle_detail::kMaxThreads> lens{};
    for (;;) {
      std::uint32_t mask = 0;
      for (std::uint32_t t = 0; t < st_.num_threads; ++t)
        for (std::uint32_t k = 0; k < lens[t]; ++k) mask |= 1u << st_.tev[t][k];
      if (sigma_order_word_valid(mask)) prefix_masks_.push_back(mask);
      // odometer over per-thread prefix lengths
      std::uint32_t t = 0;
      while (t < st_.num_threads && lens[t] == st_.tlen[t]) lens[t++] = 0;
      if (t == st_.num_threads) break;
      ++lens[t];
    }
    std::sort(prefix_masks_.begin(), prefix_masks_.end());
    return prefix_masks_;
  }

  // Conflicting distinct-thread pairs where both events are next-in-thread
  // relative to the given event set.
  std::vector<RacePair> enabled_conflicting_pairs(std::uint32_t mask) const {
    std::vector<RacePair> out;
    std::array<std::int8_t, oracle_detail::kMaxThreads> next;
    next.fill(-1);
    for (std::uint32_t t = 0; t < st_.num_threads; ++t) {
      std::uint32_t k = 0;
      while (k < st_.tlen[t] && (mask & (1u << st_.tev[t][k]))) ++k;
      if (k < st_.tlen[t]) next[t] = static_cast<std::int8_t>(st_.tev[t][k]);
    }
    for (std::uint32_t t1 = 0; t1 < st_.num_threads; ++t1)
      for (std::uint32_t t2 = t1 + 1; t2 < st_.num_threads; ++t2) {
        if (next[t1] < 0 || next[t2] < 0) continue;
        std::uint32_t a = static_cast<std::uint32_t>(next[t1]);
        std::uint32_t b = static_cast<std::uint32_t>(next[t2]);
        if (conflicting(st_.src->events[a], st_.src->events[b]))
          out.push_back(make_pair_normalized(a, b));
      }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<RacePair> prefix_races() {
    require_events(budget_.max_events, "prefix race enumeration");
    std::vector<RacePair> out;
    for (std::uint32_t mask : prefix_masks())
      for (const RacePair& p : enabled_conflicting_pairs(mask)) out.push_back(p);
    return dedup(std::move(out));
  }

  // --- arbitrary-interleaving reorderings --------------------------------

  // Pairs simultaneously enabled in some correct reordering (any
  // interleaving, any subset, reads preserved).
  std::vector<RacePair> predictable_races() {
    require_events(budget_.max_events, "correct-reordering enumeration");
    return reachable_enabled_pairs(false);
  }

  bool predictable_race(std::uint32_t e1, std::uint32_t e2) {
    RacePair p = make_pair_normalized(e1, e2);
    auto all = predictable_races();
    return std::binary_search(all.begin(), all.end(), p);
  }

  // Same, restricted to reorderings that keep the original order of acquires
  // of each lock.
  std::vector<RacePair> syncp_prefix_races() {
    require_events(budget_.max_events_tight, "acquire-order-preserving enumeration");
    return reachable_enabled_pairs(true);
  }

  // All correct reorderings as explicit words (including the empty one).
  std::vector<ReorderingWitness> correct_reorderings() {
    require_events(budget_.max_events, "correct-reordering word enumeration");
    std::vector<ReorderingWitness> out;
    std::array<std::uint8_t, oracle_detail::kMaxThreads> counts{};
    std::array<std::int8_t, oracle_detail::kMaxObjects> lastw;
    lastw.fill(-1);
    std::vector<std::uint32_t> word;
    oracle_detail::WallClock wall(budget_.wall_seconds);
    std::uint64_t emitted = 0;
    enumerate_words(counts, lastw, word, out, emitted, wall);
    return out;
  }

  // --- grain commutations -------------------------------------------------

  // Conflicting pairs that become adjacent when the trace is replayed as
  // permuted atomic grains. Events are partitioned into grains (contiguous
  // runs of the trace; arbitrary disjoint subsequences when scattered=true).
  // A dependence graph over the grains fixes which of them may trade places:
  // grains sharing a thread keep their order, grains touching the same
  // location keep it unless both accesses are writes that no read observes,
  // and grains using a common lock keep it unless each pairs up its acquires
  // and releases internally (complete critical sections commute as blocks).
  // Mutually dependent grains fuse and replay in trace order; any
  // topological order of the fused groups is a replay, and a pair is
  // reported when some group can end with one of the events exactly where
  // another begins with the other (or both share a group with no group event
  // between them). Every reported adjacency is re-checked against an
  // explicitly constructed witness word.
  std::vector<RacePair> grain_races(bool scattered) {
    return grain_races_among_impl(scattered, conflict_pairs_);
  }

  // Restriction of grain_races to the given candidate pairs; the scan stops
  // as soon as every candidate is witnessed.
  std::vector<RacePair> grain_races_among(bool scattered, std::vector<RacePair> targets) {
    for (RacePair& p : targets) p = make_pair_normalized(p.e1, p.e2);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    std::vector<RacePair> candidates;  // only conflicting pairs can race
    for (const RacePair& p : targets)
      if (std::binary_search(conflict_pairs_.begin(), conflict_pairs_.end(), p))
        candidates.push_back(p);
    return grain_races_among_impl(scattered, candidates);
  }

  // For every order-preserving prefix, replay the prefix as permuted atomic
  // contiguous grains (dependence graph as in grain_races, computed within
  // the prefix) and collect conflicting pairs whose threads' next events are
  // exposed after the replay. Permuting never changes which events the
  // prefix contains, so the result matches prefix_races(); each replay is
  // validated so that invariance is confirmed rather than assumed.
  std::vector<RacePair> grain_augmented_prefix_races() {
    require_events(budget_.max_events_tight, "prefix grain permutation enumeration");
    ensure_grain_tables();
    std::vector<RacePair> out;
    oracle_detail::WallClock wall(budget_.wall_seconds);
    for (std::uint32_t mask : prefix_masks()) {
      verify_prefix_grain_closure(mask, wall);
      for (const RacePair& p : enabled_conflicting_pairs(mask)) out.push_back(p);
    }
    return dedup(std::move(out));
  }

  // --- enabled suffixes ---------------------------------------------------

  // Inclusion-maximal trace-order event sets executable after the prefix,
  // where a read seeing a different writer is allowed only as the final event
  // of its thread. Returned as words (ascending event ids).
  std::vector<std::vector<std::uint32_t>> maximal_suffixes(std::uint32_t rho_mask) {
    require_events(budget_.max_events, "suffix enumeration");
    std::vector<std::vector<std::uint32_t>> out;
    for (std::uint32_t m : maximal_suffix_masks(rho_mask)) out.push_back(mask_to_ids(m));
    return out;
  }

  std::vector<RacePair> maximal_suffix_mraces() {
    require_events(budget_.max_events, "suffix race enumeration");
    std::vector<RacePair> out;
    std::unordered_set<std::uint32_t> seen_tau;
    for (std::uint32_t rho : prefix_masks()) {
      for (std::uint32_t tau : maximal_suffix_masks(rho)) {
        if (!seen_tau.insert(tau).second) continue;
        std::vector<std::uint32_t> ids = mask_to_ids(tau);
        std::vector<Event> word;
        for (std::uint32_t id : ids) word.push_back(st_.src->events[id]);
        for (const RacePair& p : conflict_pairs_) {
          if (!(tau & (1u << p.e1)) || !(tau & (1u << p.e2))) continue;
          std::size_t i1 = position_of(ids, p.e1), i2 = position_of(ids, p.e2);
          if (mrace_in_word(word, i1, i2)) out.push_back(p);
        }
      }
    }
    return dedup(std::move(out));
  }

  // --- granular prefix races ----------------------------------------------

  // Literal enumeration: a prefix rho, two maximal suffixes, a window of each
  // (g1 before g2 in trace order), the concatenation executable after rho,
  // and the pair swappable to adjacency inside it.
  std::vector<RacePair> granular_races() { return granular_scan(conflict_pairs_); }

  // Restriction of granular_races to the given candidate pairs; the scan can
  // stop as soon as every candidate is witnessed, so membership queries are
  // much cheaper than the full set.
  std::vector<RacePair> granular_races_among(std::vector<RacePair> targets) {
    for (RacePair& p : targets) p = make_pair_normalized(p.e1, p.e2);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    return granular_scan(targets);
  }

  // Relaxation of granular_races_among that drops the requirement that the
  // two windows be cut from inclusion-maximal suffixes: any executable
  // suffix set whose word contains both events qualifies, with the earlier
  // event swappable toward the later one inside that word. Because every
  // window pair with an executable concatenation is itself such a set, this
  // contains the strict result; the difference isolates reports that hinge
  // on window maximality alone.
  std::vector<RacePair> granular_relaxed_races_among(std::vector<RacePair> targets) {
    require_events(budget_.max_events_tight, "relaxed window race enumeration");
    for (RacePair& p : targets) p = make_pair_normalized(p.e1, p.e2);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    std::vector<char> found(targets.size(), 0);
    std::size_t remaining = targets.size();
    oracle_detail::WallClock wall(budget_.wall_seconds);
    for (std::uint32_t rho : prefix_masks()) {
      if (remaining == 0) break;
      for (std::uint32_t u : suffix_lists(rho).all) {
        if (remaining == 0) break;
        wall.tick();
        bool interesting = false;
        for (std::size_t pi = 0; pi < targets.size() && !interesting; ++pi)
          if (!found[pi] && (u & (1u << targets[pi].e1)) && (u & (1u << targets[pi].e2)))
            interesting = true;
        if (!interesting) continue;
        std::vector<std::uint32_t> ids = mask_to_ids(u);
        std::vector<Event> word;
        for (std::uint32_t id : ids) word.push_back(st_.src->events[id]);
        for (std::size_t pi = 0; pi < targets.size(); ++pi) {
          if (found[pi]) continue;
          const RacePair& p = targets[pi];
          if (!(u & (1u << p.e1)) || !(u & (1u << p.e2))) continue;
          if (mrace_in_word(word, position_of(ids, p.e1), position_of(ids, p.e2))) {
            found[pi] = 1;
            --remaining;
          }
        }
      }
    }
    std::vector<RacePair> out;
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (found[i]) out.push_back(targets[i]);
    return out;
  }

  // Up to max_count concrete (prefix, window, window) justifications for the
  // pair. With relaxed=false the windows are cut from maximal suffixes as in
  // granular_races; with relaxed=true any executable suffix word containing
  // both events is split right after the earlier event.
  std::vector<GranularWitness> granular_witnesses(RacePair p, bool relaxed,
                                                  std::size_t max_count) {
    require_events(budget_.max_events_tight, "window race witness enumeration");
    p = make_pair_normalized(p.e1, p.e2);
    std::vector<GranularWitness> sink;
    if (max_count == 0) return sink;
    witness_seen_.clear();
    oracle_detail::WallClock wall(budget_.wall_seconds);
    if (relaxed) {
      for (std::uint32_t rho : prefix_masks()) {
        if (sink.size() >= max_count) break;
        for (std::uint32_t u : suffix_lists(rho).all) {
          if (sink.size() >= max_count) break;
          wall.tick();
          if (!(u & (1u << p.e1)) || !(u & (1u << p.e2))) continue;
          std::vector<std::uint32_t> ids = mask_to_ids(u);
          std::vector<Event> word;
          for (std::uint32_t id : ids) word.push_back(st_.src->events[id]);
          std::size_t i1 = position_of(ids, p.e1), i2 = position_of(ids, p.e2);
          if (!mrace_in_word(word, i1, i2)) continue;
          GranularWitness w;
          w.rho = mask_to_ids(rho);
          w.g1.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(i1) + 1);
          w.g2.assign(ids.begin() + static_cast<std::ptrdiff_t>(i1) + 1, ids.end());
          sink.push_back(std::move(w));
        }
      }
      return sink;
    }
    std::vector<RacePair> targets{p};
    std::vector<char> found(1, 0);
    std::size_t remaining = 1;
    for (std::uint32_t rho : prefix_masks()) {
      if (remaining == 0) break;
      auto& taus = maximal_suffix_masks(rho);
      enabled_epoch_++;
      for (std::uint32_t t1i = 0; t1i < taus.size() && remaining; ++t1i) {
        std::vector<std::uint32_t> w1 = mask_to_ids(taus[t1i]);
        for (std::uint32_t t2i = 0; t2i < taus.size() && remaining; ++t2i) {
          std::vector<std::uint32_t> w2 = mask_to_ids(taus[t2i]);
          scan_window_pairs(rho, w1, w2, targets, found, remaining, wall, &sink, max_count);
        }
      }
    }
    return sink;
  }

  // --- helpers for theorem-level tests ------------------------------------

  // Words over exactly the given event set that are well-formed, preserve
  // per-thread order and keep every read's writer; up to max_words of them.
  std::vector<std::vector<std::uint32_t>> reordering_words_over_set(std::uint32_t mask,
                                                                    std::size_t max_words) {
    require_events(budget_.max_events, "fixed-set word enumeration");
    std::vector<std::vector<std::uint32_t>> out;
    std::array<std::uint8_t, oracle_detail::kMaxThreads> counts{};
    std::array<std::int8_t, oracle_detail::kMaxObjects> lastw;
    lastw.fill(-1);
    std::vector<std::uint32_t> word;
    words_over_set(mask, counts, lastw, word, out, max_words);
    return out;
  }

  // Predictable races of the suffix re-indexed as a trace of its own; empty
  // optional when that standalone trace is not well-formed.
  std::optional<std::vector<RacePair>> predictable_races_standalone(
      const std::vector<std::uint32_t>& ids) {
    Trace sub;
    sub.symbols = st_.src->symbols;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Event e = st_.src->events[ids[k]];
      e.id = static_cast<std::uint32_t>(k);
      sub.events.push_back(e);
    }
    if (validate_wellformed(sub)) return std::nullopt;
    OracleSession inner(sub, budget_);
    std::vector<RacePair> mapped;
    for (const RacePair& p : inner.predictable_races())
      mapped.push_back(make_pair_normalized(ids[p.e1], ids[p.e2]));
    std::sort(mapped.begin(), mapped.end());
    return mapped;
  }

 private:
  void require_events(std::uint32_t cap, const char* what) const {
    if (st_.n > cap)
      throw OracleLimitExceeded(std::string(what) + ": trace has " + std::to_string(st_.n) +
                                " events, cap is " + std::to_string(cap));
  }

  static std::vector<RacePair> dedup(std::vector<RacePair>&& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return std::move(v);
  }

  static std::size_t position_of(const std::vector<std::uint32_t>& ids, std::uint32_t id) {
    return static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  }

  std::vector<std::uint32_t> mask_to_ids(std::uint32_t mask) const {
    std::vector<std::uint32_t> ids;
    for (std::uint32_t i = 0; i < st_.n; ++i)
      if (mask & (1u << i)) ids.push_back(i);
    return ids;
  }

  // Validity of the trace-order linearization of an event subset: well-formed
  // word, every included read sees its original writer.
  bool sigma_order_word_valid(std::uint32_t mask) const {
    std::array<std::int8_t, oracle_detail::kMaxObjects> holder;  // thread+1, 0 free
    holder.fill(0);
    std::array<std::int8_t, oracle_detail::kMaxObjects> lastw;
    lastw.fill(-1);
    for (std::uint32_t i = 0; i < st_.n; ++i) {
      if (!(mask & (1u << i))) continue;
      std::uint8_t t = st_.thread[i], o = st_.obj[i];
      switch (st_.op[i]) {
        case Op::Acquire:
          if (holder[o] != 0) return false;
          holder[o] = static_cast<std::int8_t>(t + 1);
          break;
        case Op::Release:
          if (holder[o] != static_cast<std::int8_t>(t + 1)) return false;
          holder[o] = 0;
          break;
        case Op::Read:
          if (lastw[o] != st_.rf[i]) return false;
          break;
        case Op::Write:
          lastw[o] = static_cast<std::int8_t>(i);
          break;
      }
    }
    return true;
  }

  // ---- reachability over interleaved reorderings -------------------------

  // e = next event of thread t at `counts`; can it execute now?
  bool can_execute(const std::array<std::uint8_t, oracle_detail::kMaxThreads>& counts,
                   const std::array<std::int8_t, oracle_detail::kMaxObjects>& lastw,
                   std::uint32_t t, bool keep_acquire_order) const {
    std::uint32_t e = st_.tev[t][counts[t]];
    switch (st_.op[e]) {
      case Op::Read:
        return lastw[st_.obj[e]] == st_.rf[e];
      case Op::Acquire: {
        if (!st_.is_lock_free(counts, st_.obj[e])) return false;
        // order among executed same-lock acquires must match the trace, so a
        // later one already executed rules this one out
        if (keep_acquire_order) {
          for (std::uint32_t i = e + 1; i < st_.n; ++i)
            if (st_.op[i] == Op::Acquire && st_.obj[i] == st_.obj[e] &&
                st_.tidx[i] < counts[st_.thread[i]])
              return false;
        }
        return true;
      }
      case Op::Release:
      case Op::Write:
        return true;
    }
    return false;
  }

  std::vector<RacePair> reachable_enabled_pairs(bool keep_acquire_order) {
    std::vector<char> found(conflict_pairs_.size(), 0);
    // index pairs by (a,b) for constant-time lookup
    std::unordered_map<std::uint64_t, std::size_t> pair_idx;
    for (std::size_t i = 0; i < conflict_pairs_.size(); ++i)
      pair_idx[(std::uint64_t(conflict_pairs_[i].e1) << 32) | conflict_pairs_[i].e2] = i;

    std::unordered_set<std::uint64_t> visited;
    struct Node {
      std::array<std::uint8_t, oracle_detail::kMaxThreads> counts{};
      std::array<std::int8_t, oracle_detail::kMaxObjects> lastw{};
    };
    std::vector<Node> stack;
    Node init;
    init.lastw.fill(-1);
    stack.push_back(init);
    visited.insert(oracle_detail::pack_state(st_, init.counts, init.lastw));
    oracle_detail::WallClock wall(budget_.wall_seconds);
    while (!stack.empty()) {
      Node cur = stack.back();
      stack.pop_back();
      wall.tick();
      // collect enabled conflicting pairs at this reordering
      for (std::uint32_t t1 = 0; t1 < st_.num_threads; ++t1) {
        if (cur.counts[t1] >= st_.tlen[t1]) continue;
        std::uint32_t a = st_.tev[t1][cur.counts[t1]];
        for (std::uint32_t t2 = t1 + 1; t2 < st_.num_threads; ++t2) {
          if (cur.counts[t2] >= st_.tlen[t2]) continue;
          std::uint32_t b = st_.tev[t2][cur.counts[t2]];
          RacePair p = make_pair_normalized(a, b);
          auto it = pair_idx.find((std::uint64_t(p.e1) << 32) | p.e2);
          if (it != pair_idx.end()) found[it->second] = 1;
        }
      }
      for (std::uint32_t t = 0; t < st_.num_threads; ++t) {
        if (cur.counts[t] >= st_.tlen[t]) continue;
        if (!can_execute(cur.counts, cur.lastw, t, keep_acquire_order)) continue;
        Node nxt = cur;
        std::uint32_t e = st_.tev[t][cur.counts[t]];
        ++nxt.counts[t];
        if (st_.op[e] == Op::Write) nxt.lastw[st_.obj[e]] = static_cast<std::int8_t>(e);
        std::uint64_t key = oracle_detail::pack_state(st_, nxt.counts, nxt.lastw);
        if (visited.insert(key).second) stack.push_back(nxt);
      }
    }
    std::vector<RacePair> out;
    for (std::size_t i = 0; i < conflict_pairs_.size(); ++i)
      if (found[i]) out.push_back(conflict_pairs_[i]);
    return out;
  }

  void enumerate_words(std::array<std::uint8_t, oracle_detail::kMaxThreads>& counts,
                       std::array<std::int8_t, oracle_detail::kMaxObjects>& lastw,
                       std::vector<std::uint32_t>& word,
                       std::vector<ReorderingWitness>& out, std::uint64_t& emitted,
                       oracle_detail::WallClock& wall) {
    wall.tick();
    if (++emitted > budget_.max_reorderings)
      throw OracleLimitExceeded("more correct reorderings than the cap");
    out.push_back(ReorderingWitness{word});
    for (std::uint32_t t = 0; t < st_.num_threads; ++t) {
      if (counts[t] >= st_.tlen[t]) continue;
      if (!can_execute(counts, lastw, t, false)) continue;
      std::uint32_t e = st_.tev[t][counts[t]];
      std::int8_t saved = lastw[st_.obj[e]];
      ++counts[t];
      if (st_.op[e] == Op::Write) lastw[st_.obj[e]] = static_cast<std::int8_t>(e);
      word.push_back(e);
      enumerate_words(counts, lastw, word, out, emitted, wall);
      word.pop_back();
      --counts[t];
      lastw[st_.obj[e]] = saved;
    }
  }

  void words_over_set(std::uint32_t mask,
                      std::array<std::uint8_t, oracle_detail::kMaxThreads>& counts,
                      std::array<std::int8_t, oracle_detail::kMaxObjects>& lastw,
                      std::vector<std::uint32_t>& word,
                      std::vector<std::vector<std::uint32_t>>& out, std::size_t max_words) {
    if (out.size() >= max_words) return;
    bool complete = true;
    for (std::uint32_t t = 0; t < st_.num_threads && out.size() < max_words; ++t) {
      if (counts[t] >= st_.tlen[t]) continue;
      std::uint32_t e = st_.tev[t][counts[t]];
      if (!(mask & (1u << e))) continue;  // thread's remaining events stop here
      complete = false;
      if (!can_execute(counts, lastw, t, false)) continue;
      std::int8_t saved = lastw[st_.obj[e]];
      ++counts[t];
      if (st_.op[e] == Op::Write) lastw[st_.obj[e]] = static_cast<std::int8_t>(e);
      word.push_back(e);
      words_over_set(mask, counts, lastw, word, out, max_words);
      word.pop_back();
      --counts[t];
      lastw[st_.obj[e]] = saved;
    }
    if (complete && out.size() < max_words) out.push_back(word);
  }

  // ---- grain dependence graphs -------------------------------------------

  // Per-trace tables shared by the grain enumerations: the matching release
  // for each acquire (and vice versa), whether each write has a reader, and
  // per-event bitmasks of later events it can never trade places with
  // (same-thread and location dependences) or whose order depends on the
  // grain choice (same-lock pairs).
  void ensure_grain_tables() {
    if (grain_tables_ready_) return;
    grain_tables_ready_ = true;
    lock_match_.fill(-1);
    observed_.fill(0);
    for (std::uint32_t e = 0; e < st_.n; ++e) {
      if (st_.op[e] == Op::Read && st_.rf[e] >= 0) observed_[st_.rf[e]] = 1;
      if (st_.op[e] != Op::Acquire) continue;
      for (std::uint32_t f = e + 1; f < st_.n; ++f)
        if (st_.op[f] == Op::Release && st_.obj[f] == st_.obj[e]) {
          lock_match_[e] = static_cast<std::int8_t>(f);
          lock_match_[f] = static_cast<std::int8_t>(e);
          break;
        }
    }
    for (std::uint32_t e = 0; e < st_.n; ++e) {
      dep_fixed_after_[e] = 0;
      lockpair_after_[e] = 0;
      bool e_mem = st_.op[e] == Op::Read || st_.op[e] == Op::Write;
      for (std::uint32_t f = e + 1; f < st_.n; ++f) {
        if (st_.thread[e] == st_.thread[f]) {
          dep_fixed_after_[e] |= std::uint16_t(1u << f);
          continue;
        }
        bool f_mem = st_.op[f] == Op::Read || st_.op[f] == Op::Write;
        if (e_mem != f_mem || st_.obj[e] != st_.obj[f]) continue;
        if (!e_mem) {
          lockpair_after_[e] |= std::uint16_t(1u << f);
          continue;
        }
        bool e_w = st_.op[e] == Op::Write, f_w = st_.op[f] == Op::Write;
        if (e_w && f_w ? (observed_[e] || observed_[f]) : (e_w || f_w))
          dep_fixed_after_[e] |= std::uint16_t(1u << f);
      }
    }
  }

  std::vector<RacePair> grain_races_among_impl(bool scattered,
                                               const std::vector<RacePair>& targets) {
    require_events(budget_.max_events_tight, "grain permutation enumeration");
    ensure_grain_tables();
    std::vector<char> found(targets.size(), 0);
    std::size_t remaining = targets.size();
    // trace-adjacent pairs are adjacent in the unpermuted replay
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (targets[i].e2 == targets[i].e1 + 1) {
        found[i] = 1;
        --remaining;
      }
    if (remaining != 0 && st_.n >= 2) {
      oracle_detail::WallClock wall(budget_.wall_seconds);
      std::array<std::uint8_t, oracle_detail::kMaxEvents> grain_of{};
      if (!scattered) {
        std::uint32_t cuts = st_.n - 1;
        for (std::uint32_t cut_mask = 0; cut_mask < (1u << cuts) && remaining; ++cut_mask) {
          wall.tick();
          std::uint8_t g = 0;
          for (std::uint32_t i = 0; i < st_.n; ++i) {
            grain_of[i] = g;
            if (i < cuts && (cut_mask & (1u << i))) ++g;
          }
          scan_grain_decomposition(grain_of, g + 1u, targets, found, remaining);
        }
      } else {
        grain_of[0] = 0;
        scattered_partition_scan(grain_of, 1, 1, targets, found, remaining, wall);
      }
    }
    std::vector<RacePair> out;
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (found[i]) out.push_back(targets[i]);
    return out;
  }

  // All set partitions by restricted growth: each event joins an existing
  // grain or opens the next one.
  void scattered_partition_scan(std::array<std::uint8_t, oracle_detail::kMaxEvents>& grain_of,
                                std::uint32_t pos, std::uint32_t num_grains,
                                const std::vector<RacePair>& targets, std::vector<char>& found,
                                std::size_t& remaining, oracle_detail::WallClock& wall) {
    if (remaining == 0) return;
    if (pos == st_.n) {
      wall.tick();
      scan_grain_decomposition(grain_of, num_grains, targets, found, remaining);
      return;
    }
    for (std::uint32_t g = 0; g <= num_grains && remaining; ++g) {
      grain_of[pos] = static_cast<std::uint8_t>(g);
      scattered_partition_scan(grain_of, pos + 1, std::max(num_grains, g + 1), targets,
                               found, remaining, wall);
    }
  }

  void scan_grain_decomposition(const std::array<std::uint8_t, oracle_detail::kMaxEvents>& grain_of,
                                std::uint32_t k, const std::vector<RacePair>& targets,
                                std::vector<char>& found, std::size_t& remaining) {
    // locks with an acquire or release whose partner lies in another grain
    std::array<std::uint8_t, oracle_detail::kMaxEvents> unmatched{};
    for (std::uint32_t e = 0; e < st_.n; ++e) {
      if (st_.op[e] != Op::Acquire && st_.op[e] != Op::Release) continue;
      std::int8_t m = lock_match_[e];
      if (m < 0 || grain_of[static_cast<std::uint32_t>(m)] != grain_of[e])
        unmatched[grain_of[e]] |= std::uint8_t(1u << st_.obj[e]);
    }
    std::array<std::uint16_t, oracle_detail::kMaxEvents> adj{};
    for (std::uint32_t i = 0; i < k; ++i) adj[i] = 0;
    for (std::uint32_t e = 0; e < st_.n; ++e) {
      std::uint8_t ge = grain_of[e];
      std::uint32_t bits = dep_fixed_after_[e];
      while (bits) {
        std::uint32_t f = static_cast<std::uint32_t>(std::countr_zero(bits));
        bits &= bits - 1;
        if (grain_of[f] != ge) adj[ge] |= std::uint16_t(1u << grain_of[f]);
      }
      bits = lockpair_after_[e];
      while (bits) {
        std::uint32_t f = static_cast<std::uint32_t>(std::countr_zero(bits));
        bits &= bits - 1;
        std::uint8_t gf = grain_of[f];
        if (gf != ge && (((unmatched[ge] | unmatched[gf]) >> st_.obj[e]) & 1u))
          adj[ge] |= std::uint16_t(1u << gf);
      }
    }
    std::array<std::uint16_t, oracle_detail::kMaxEvents> reach{};
    for (std::uint32_t i = 0; i < k; ++i) reach[i] = adj[i] | std::uint16_t(1u << i);
    for (bool changed = true; changed;) {
      changed = false;
      for (std::uint32_t i = 0; i < k; ++i) {
        std::uint16_t r = reach[i];
        std::uint32_t bits = r;
        while (bits) {
          std::uint32_t j = static_cast<std::uint32_t>(std::countr_zero(bits));
          bits &= bits - 1;
          r |= reach[j];
        }
        if (r != reach[i]) {
          reach[i] = r;
          changed = true;
        }
      }
    }
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      if (found[ti]) continue;
      std::uint32_t e1 = targets[ti].e1, e2 = targets[ti].e2;
      std::uint8_t g1 = grain_of[e1], g2 = grain_of[e2];
      bool hit = false;
      if (((reach[g1] >> g2) & 1u) && ((reach[g2] >> g1) & 1u)) {
        // one fused group: its replay is in trace order, so the pair is
        // adjacent exactly when no group event lies between them
        std::uint16_t cm = comp_grains(reach, k, g1);
        std::uint32_t comp_events = 0;
        for (std::uint32_t e = 0; e < st_.n; ++e)
          if ((cm >> grain_of[e]) & 1u) comp_events |= 1u << e;
        std::uint32_t between = ((1u << e2) - 1) & ~((2u << e1) - 1);
        if ((comp_events & between) == 0)
          hit = validate_adjacency_witness(grain_of, k, reach, e1, e2);
      } else {
        hit = try_boundary_adjacency(grain_of, k, reach, e1, e2) ||
              try_boundary_adjacency(grain_of, k, reach, e2, e1);
      }
      if (hit) {
        found[ti] = 1;
        if (--remaining == 0) return;
      }
    }
  }

  // Grains mutually reachable with g: the fused group replaying in trace order.
  std::uint16_t comp_grains(const std::array<std::uint16_t, oracle_detail::kMaxEvents>& reach,
                            std::uint32_t k, std::uint8_t g) const {
    std::uint16_t m = 0;
    for (std::uint32_t h = 0; h < k; ++h)
      if (((reach[g] >> h) & 1u) && ((reach[h] >> g) & 1u)) m |= std::uint16_t(1u << h);
    return m;
  }

  // Can a's fused group (which must end with a) be placed immediately before
  // b's (which must begin with b)?
  bool try_boundary_adjacency(const std::array<std::uint8_t, oracle_detail::kMaxEvents>& grain_of,
                              std::uint32_t k,
                              const std::array<std::uint16_t, oracle_detail::kMaxEvents>& reach,
                              std::uint32_t a, std::uint32_t b) const {
    std::uint8_t ga = grain_of[a], gb = grain_of[b];
    if ((reach[gb] >> ga) & 1u) return false;  // b's group must not precede a's
    std::uint16_t comp_a = comp_grains(reach, k, ga);
    std::uint16_t comp_b = comp_grains(reach, k, gb);
    for (std::uint32_t e = 0; e < st_.n; ++e) {
      if (((comp_a >> grain_of[e]) & 1u) && e > a) return false;
      if (((comp_b >> grain_of[e]) & 1u) && e < b) return false;
    }
    // no third group forced both after a's and before b's
    std::uint16_t to_b = 0;
    for (std::uint32_t h = 0; h < k; ++h)
      if ((reach[h] >> gb) & 1u) to_b |= std::uint16_t(1u << h);
    if (reach[ga] & to_b & std::uint16_t(~comp_a) & std::uint16_t(~comp_b)) return false;
    return validate_adjacency_witness(grain_of, k, reach, a, b);
  }

  // Builds a replay that places a directly before b and checks it really is a
  // full correct reordering. The dependence rules are supposed to guarantee
  // this; a failure here means they are unsound, so it throws instead of
  // silently dropping the pair.
  bool validate_adjacency_witness(
      const std::array<std::uint8_t, oracle_detail::kMaxEvents>& grain_of, std::uint32_t k,
      const std::array<std::uint16_t, oracle_detail::kMaxEvents>& reach, std::uint32_t a,
      std::uint32_t b) const {
    std::vector<std::uint16_t> comps;  // grain mask per fused group
    std::array<std::uint8_t, oracle_detail::kMaxEvents> comp_of_grain{};
    std::uint16_t seen = 0;
    for (std::uint32_t g = 0; g < k; ++g) {
      if ((seen >> g) & 1u) continue;
      std::uint16_t cm = comp_grains(reach, k, static_cast<std::uint8_t>(g));
      seen |= cm;
      for (std::uint32_t h = 0; h < k; ++h)
        if ((cm >> h) & 1u) comp_of_grain[h] = static_cast<std::uint8_t>(comps.size());
      comps.push_back(cm);
    }
    std::size_t nc = comps.size();
    std::size_t ca = comp_of_grain[grain_of[a]], cb = comp_of_grain[grain_of[b]];
    auto reaches = [&](std::size_t x, std::size_t y) {
      if (x == y) return false;
      for (std::uint32_t g = 0; g < k; ++g)
        if (((comps[x] >> g) & 1u) && (reach[g] & comps[y])) return true;
      return false;
    };
    std::vector<char> placed(nc, 0);
    std::vector<std::size_t> order;
    auto kahn_fill = [&](auto&& eligible) {
      for (bool progress = true; progress;) {
        progress = false;
        for (std::size_t c = 0; c < nc; ++c) {
          if (placed[c] || !eligible(c)) continue;
          bool ready = true;
          for (std::size_t d = 0; d < nc && ready; ++d)
            if (!placed[d] && reaches(d, c)) ready = false;
          if (!ready) continue;
          placed[c] = 1;
          order.push_back(c);
          progress = true;
        }
      }
    };
    if (ca == cb) {
      kahn_fill([](std::size_t) { return true; });
    } else {
      kahn_fill([&](std::size_t c) {
        return c != ca && c != cb && (reaches(c, ca) || reaches(c, cb));
      });
      placed[ca] = 1;
      order.push_back(ca);
      placed[cb] = 1;
      order.push_back(cb);
      kahn_fill([](std::size_t) { return true; });
    }
    if (order.size() != nc) throw std::logic_error("grain replay order incomplete");
    std::vector<std::uint32_t> word;
    word.reserve(st_.n);
    for (std::size_t c : order)
      for (std::uint32_t e = 0; e < st_.n; ++e)
        if ((comps[c] >> grain_of[e]) & 1u) word.push_back(e);
    if (!word_valid_over(st_.full_mask(), word))
      throw std::logic_error("grain replay is not a correct reordering");
    for (std::size_t i = 0; i < word.size(); ++i)
      if (word[i] == a) {
        if (i + 1 < word.size() && word[i + 1] == b) return true;
        throw std::logic_error("grain replay failed to realize the adjacency");
      }
    throw std::logic_error("grain replay lost an event");
  }

  // Word over exactly the events of `mask`: per-thread order, lock
  // discipline, and every read seeing its original writer.
  bool word_valid_over(std::uint32_t mask, const std::vector<std::uint32_t>& word) const {
    std::uint32_t seen_mask = 0;
    std::array<std::uint8_t, oracle_detail::kMaxThreads> counts{};
    std::array<std::int8_t, oracle_detail::kMaxObjects> holder{};
    std::array<std::int8_t, oracle_detail::kMaxObjects> lastw;
    holder.fill(0);
    lastw.fill(-1);
    for (std::uint32_t e : word) {
      if (!(mask & (1u << e)) || (seen_mask & (1u << e))) return false;
      seen_mask |= 1u << e;
      std::uint8_t t = st_.thread[e], o = st_.obj[e];
      if (st_.tev[t][counts[t]] != e) return false;  // out of program order
      switch (st_.op[e]) {
        case Op::Acquire:
          if (holder[o] != 0) return false;
          holder[o] = static_cast<std::int8_t>(t + 1);
          break;
        case Op::Release:
          if (holder[o] != static_cast<std::int8_t>(t + 1)) return false;
          holder[o] = 0;
          break;
        case Op::Read:
          if (lastw[o] != st_.rf[e]) return false;
          break;
        case Op::Write:
          lastw[o] = static_cast<std::int8_t>(e);
          break;
      }
      ++counts[t];
    }
    return seen_mask == mask;
  }

  // Replays every contiguous-grain permutation of the prefix's word and
  // checks each is a correct reordering over exactly the prefix's events; the
  // dependence graph is built within the prefix (its reads decide which
  // writes count as observed, its grains decide lock matching).
  void verify_prefix_grain_closure(std::uint32_t mask, oracle_detail::WallClock& wall) {
    std::vector<std::uint32_t> ids = mask_to_ids(mask);
    std::uint32_t m = static_cast<std::uint32_t>(ids.size());
    if (m < 2) return;
    std::array<char, oracle_detail::kMaxEvents> obs{};
    std::array<std::uint8_t, oracle_detail::kMaxEvents> pos_of{};
    for (std::uint32_t p = 0; p < m; ++p) pos_of[ids[p]] = static_cast<std::uint8_t>(p);
    for (std::uint32_t e : ids)
      if (st_.op[e] == Op::Read && st_.rf[e] >= 0) obs[st_.rf[e]] = 1;
    for (std::uint32_t cut_mask = 0; cut_mask < (1u << (m - 1)); ++cut_mask) {
      wall.tick();
      std::array<std::uint8_t, oracle_detail::kMaxEvents> grain_of{};  // by position
      std::uint8_t g = 0;
      for (std::uint32_t p = 0; p < m; ++p) {
        grain_of[p] = g;
        if (p + 1 < m && (cut_mask & (1u << p))) ++g;
      }
      std::uint32_t k = g + 1u;
      std::array<std::uint8_t, oracle_detail::kMaxEvents> unmatched{};
      for (std::uint32_t i = 0; i < k; ++i) unmatched[i] = 0;
      for (std::uint32_t p = 0; p < m; ++p) {
        std::uint32_t e = ids[p];
        if (st_.op[e] != Op::Acquire && st_.op[e] != Op::Release) continue;
        std::int8_t mm = lock_match_[e];
        bool matched_here = mm >= 0 && (mask & (1u << mm)) &&
                            grain_of[pos_of[static_cast<std::uint32_t>(mm)]] == grain_of[p];
        if (!matched_here) unmatched[grain_of[p]] |= std::uint8_t(1u << st_.obj[e]);
      }
      std::array<std::uint16_t, oracle_detail::kMaxEvents> adj{};
      for (std::uint32_t i = 0; i < k; ++i) adj[i] = 0;
      for (std::uint32_t p = 0; p < m; ++p) {
        std::uint32_t e = ids[p];
        bool e_mem = st_.op[e] == Op::Read || st_.op[e] == Op::Write;
        for (std::uint32_t q = p + 1; q < m; ++q) {
          std::uint32_t f = ids[q];
          std::uint8_t gp = grain_of[p], gq = grain_of[q];
          if (gp == gq) continue;
          bool dep = false;
          if (st_.thread[e] == st_.thread[f]) {
            dep = true;
          } else {
            bool f_mem = st_.op[f] == Op::Read || st_.op[f] == Op::Write;
            if (e_mem == f_mem && st_.obj[e] == st_.obj[f]) {
              if (!e_mem)
                dep = ((unmatched[gp] | unmatched[gq]) >> st_.obj[e]) & 1u;
              else {
                bool e_w = st_.op[e] == Op::Write, f_w = st_.op[f] == Op::Write;
                dep = e_w && f_w ? (obs[e] || obs[f]) : (e_w || f_w);
              }
            }
          }
          if (dep) adj[gp] |= std::uint16_t(1u << gq);
        }
      }
      std::array<std::uint16_t, oracle_detail::kMaxEvents> reach{};
      for (std::uint32_t i = 0; i < k; ++i) reach[i] = adj[i] | std::uint16_t(1u << i);
      for (bool changed = true; changed;) {
        changed = false;
        for (std::uint32_t i = 0; i < k; ++i) {
          std::uint16_t r = reach[i];
          std::uint32_t bits = r;
          while (bits) {
            std::uint32_t j = static_cast<std::uint32_t>(std::countr_zero(bits));
            bits &= bits - 1;
            r |= reach[j];
          }
          if (r != reach[i]) {
            reach[i] = r;
            changed = true;
          }
        }
      }
      // one full replay per decomposition: fused groups in a topological
      // order, each group's positions ascending
      std::vector<char> placed(k, 0);
      std::vector<std::uint32_t> word;
      word.reserve(m);
      for (bool progress = true; progress && word.size() < m;) {
        progress = false;
        for (std::uint32_t c = 0; c < k; ++c) {
          if (placed[c]) continue;
          std::uint16_t cm = comp_grains(reach, k, static_cast<std::uint8_t>(c));
          bool ready = true;
          for (std::uint32_t d = 0; d < k && ready; ++d)
            if (!placed[d] && !((cm >> d) & 1u) && (reach[d] & cm)) ready = false;
          if (!ready) continue;
          for (std::uint32_t h = 0; h < k; ++h)
            if ((cm >> h) & 1u) placed[h] = 1;
          for (std::uint32_t p = 0; p < m; ++p)
            if ((cm >> grain_of[p]) & 1u) word.push_back(ids[p]);
          progress = true;
        }
      }
      if (word.size() != m || !word_valid_over(mask, word))
        throw std::logic_error("prefix grain replay is not a correct reordering");
    }
  }

  // ---- suffixes ----------------------------------------------------------

  // Is the trace-order word of `tau` executable directly after `rho`? Reads
  // seeing a different writer are allowed only as their thread's final event.
  bool suffix_enabled(std::uint32_t rho, std::uint32_t tau) const {
    for (std::uint32_t i = 0; i < st_.n; ++i) {
      if (!(tau & (1u << i))) continue;
      if (st_.po_pred[i] >= 0) {
        std::uint32_t p = static_cast<std::uint32_t>(st_.po_pred[i]);
        if (!((rho | tau) & (1u << p))) return false;
      }
    }
    std::array<std::int8_t, oracle_detail::kMaxObjects> holder;
    holder.fill(0);
    std::array<std::int8_t, oracle_detail::kMaxObjects> lastw;
    lastw.fill(-1);
    std::uint32_t finished_threads = 0;  // threads sealed by a stale read
    for (std::uint32_t pass = 0; pass < 2; ++pass) {
      std::uint32_t mask = pass == 0 ? rho : tau;
      for (std::uint32_t i = 0; i < st_.n; ++i) {
        if (!(mask & (1u << i))) continue;
        std::uint8_t t = st_.thread[i], o = st_.obj[i];
        if (pass == 1 && (finished_threads & (1u << t))) return false;
        switch (st_.op[i]) {
          case Op::Acquire:
            if (holder[o] != 0) return false;
            holder[o] = static_cast<std::int8_t>(t + 1);
            break;
          case Op::Release:
            if (holder[o] != static_cast<std::int8_t>(t + 1)) return false;
            holder[o] = 0;
            break;
          case Op::Read:
            if (lastw[o] == st_.rf[i]) break;  // original writer
            if (pass == 0 || lastw[o] < 0) return false;
            finished_threads |= 1u << t;  // stale read: thread must end here
            break;
          case Op::Write:
            lastw[o] = static_cast<std::int8_t>(i);
            break;
        }
      }
    }
    return true;
  }

  struct SuffixLists {
    std::vector<std::uint32_t> all;      // every executable suffix set
    std::vector<std::uint32_t> maximal;  // the inclusion-maximal ones
  };

  const SuffixLists& suffix_lists(std::uint32_t rho) {
    auto it = maxsuf_memo_.find(rho);
    if (it != maxsuf_memo_.end()) return it->second;
    SuffixLists lists;
    std::uint32_t rest = st_.full_mask() & ~rho;
    std::uint32_t tau = rest;
    for (;;) {
      // the empty set is vacuously executable, so tau = 0 is included
      if (suffix_enabled(rho, tau)) lists.all.push_back(tau);
      if (tau == 0) break;
      tau = (tau - 1) & rest;
    }
    for (std::uint32_t m : lists.all) {
      bool is_max = true;
      for (std::uint32_t o : lists.all)
        if (o != m && (m & o) == m) {
          is_max = false;
          break;
        }
      if (is_max) lists.maximal.push_back(m);
    }
    return maxsuf_memo_.emplace(rho, std::move(lists)).first->second;
  }

  const std::vector<std::uint32_t>& maximal_suffix_masks(std::uint32_t rho) {
    return suffix_lists(rho).maximal;
  }

  std::vector<RacePair> granular_scan(const std::vector<RacePair>& targets) {
    require_events(budget_.max_events_tight, "granular race enumeration");
    std::vector<char> found(targets.size(), 0);
    std::size_t remaining = targets.size();
    oracle_detail::WallClock wall(budget_.wall_seconds);
    for (std::uint32_t rho : prefix_masks()) {
      if (remaining == 0) break;
      auto& taus = maximal_suffix_masks(rho);
      enabled_epoch_++;
      for (std::uint32_t t1i = 0; t1i < taus.size() && remaining; ++t1i) {
        std::vector<std::uint32_t> w1 = mask_to_ids(taus[t1i]);
        for (std::uint32_t t2i = 0; t2i < taus.size() && remaining; ++t2i) {
          std::vector<std::uint32_t> w2 = mask_to_ids(taus[t2i]);
          scan_window_pairs(rho, w1, w2, targets, found, remaining, wall);
        }
      }
    }
    std::vector<RacePair> out;
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (found[i]) out.push_back(targets[i]);
    return out;
  }

  // All window pairs (g1 from w1, g2 from w2, g1 entirely before g2 in trace
  // order); marks target pairs racing inside an executable concatenation.
  // With a witness sink, hits are recorded instead and a target is only
  // marked found once max_witnesses justifications have been collected.
  void scan_window_pairs(std::uint32_t rho, const std::vector<std::uint32_t>& w1,
                         const std::vector<std::uint32_t>& w2,
                         const std::vector<RacePair>& targets, std::vector<char>& found,
                         std::size_t& remaining, oracle_detail::WallClock& wall,
                         std::vector<GranularWitness>* sink = nullptr,
                         std::size_t max_witnesses = 0) {
    for (std::size_t i1 = 0; i1 < w1.size() && remaining; ++i1) {
      for (std::size_t j1 = i1; j1 < w1.size() && remaining; ++j1) {
        std::uint32_t g1 = 0;
        for (std::size_t k = i1; k <= j1; ++k) g1 |= 1u << w1[k];
        std::uint32_t last_g1 = w1[j1];
        for (std::size_t i2 = 0; i2 < w2.size() && remaining; ++i2) {
          if (w2[i2] <= last_g1) continue;
          for (std::size_t j2 = i2; j2 < w2.size() && remaining; ++j2) {
            wall.tick();
            std::uint32_t g2 = 0;
            for (std::size_t k = i2; k <= j2; ++k) g2 |= 1u << w2[k];
            // any unseen target pair split across the windows?
            bool interesting = false;
            for (std::size_t pi = 0; pi < targets.size() && !interesting; ++pi)
              if (!found[pi] && (g1 & (1u << targets[pi].e1)) &&
                  (g2 & (1u << targets[pi].e2)))
                interesting = true;
            if (!interesting) continue;
            std::uint32_t u = g1 | g2;
            char& verdict = enabled_cache(u);
            if (verdict == 0) verdict = suffix_enabled(rho, u) ? 1 : 2;
            if (verdict != 1) continue;
            std::vector<std::uint32_t> ids = mask_to_ids(u);
            std::vector<Event> word;
            for (std::uint32_t id : ids) word.push_back(st_.src->events[id]);
            for (std::size_t pi = 0; pi < targets.size(); ++pi) {
              if (found[pi]) continue;
              const RacePair& p = targets[pi];
              if (!(g1 & (1u << p.e1)) || !(g2 & (1u << p.e2))) continue;
              if (mrace_in_word(word, position_of(ids, p.e1), position_of(ids, p.e2))) {
                if (sink != nullptr) {
                  std::uint64_t key = std::uint64_t(rho) | (std::uint64_t(g1) << 16) |
                                      (std::uint64_t(g2) << 32);
                  if (!witness_seen_.insert(key).second) continue;
                  GranularWitness wit;
                  wit.rho = mask_to_ids(rho);
                  wit.g1.assign(w1.begin() + static_cast<std::ptrdiff_t>(i1),
                                w1.begin() + static_cast<std::ptrdiff_t>(j1) + 1);
                  wit.g2.assign(w2.begin() + static_cast<std::ptrdiff_t>(i2),
                                w2.begin() + static_cast<std::ptrdiff_t>(j2) + 1);
                  sink->push_back(std::move(wit));
                  if (sink->size() < max_witnesses) continue;
                }
                found[pi] = 1;
                --remaining;
              }
            }
          }
        }
      }
    }
  }

  char& enabled_cache(std::uint32_t mask) {
    if (enabled_vals_.empty()) {
      enabled_vals_.assign(std::size_t(1) << st_.n, 0);
      enabled_stamp_.assign(std::size_t(1) << st_.n, 0);
    }
    if (enabled_stamp_[mask] != enabled_epoch_) {
      enabled_stamp_[mask] = enabled_epoch_;
      enabled_vals_[mask] = 0;
    }
    return enabled_vals_[mask];
  }

  OracleBudget budget_;
  oracle_detail::SmallTrace st_;
  std::vector<RacePair> conflict_pairs_;
  std::vector<std::uint32_t> prefix_masks_;
  bool prefix_masks_ready_ = false;
  bool grain_tables_ready_ = false;
  std::array<std::int8_t, oracle_detail::kMaxEvents> lock_match_{};
  std::array<char, oracle_detail::kMaxEvents> observed_{};
  std::array<std::uint16_t, oracle_detail::kMaxEvents> dep_fixed_after_{};
  std::array<std::uint16_t, oracle_detail::kMaxEvents> lockpair_after_{};
  std::unordered_map<std::uint32_t, SuffixLists> maxsuf_memo_;
  std::vector<char> enabled_vals_;
  std::vector<std::uint32_t> enabled_stamp_;
  std::uint32_t enabled_epoch_ = 0;
  std::unordered_set<std::uint64_t> witness_seen_;
};

// --- free-function forms of the reference checks ---------------------------

inline std::vector<ReorderingWitness> enumerate_correct_reorderings(
    const Trace& t, const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).correct_reorderings();
}

inline bool oracle_predictable_race(const Trace& t, std::uint32_t e1, std::uint32_t e2,
                                    const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).predictable_race(e1, e2);
}

inline std::vector<RacePair> oracle_predictable_races(const Trace& t,
                                                      const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).predictable_races();
}

inline std::vector<RacePair> oracle_prefix_races(const Trace& t,
                                                 const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).prefix_races();
}

inline std::vector<RacePair> oracle_syncp_prefix_races(const Trace& t,
                                                       const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).syncp_prefix_races();
}

inline std::vector<RacePair> oracle_grain_races(const Trace& t, bool scattered,
                                                const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).grain_races(scattered);
}

inline std::vector<RacePair> oracle_grain_races_among(const Trace& t, bool scattered,
                                                      std::vector<RacePair> targets,
                                                      const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).grain_races_among(scattered, std::move(targets));
}

inline std::vector<RacePair> oracle_grain_augmented_prefix_races(
    const Trace& t, const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).grain_augmented_prefix_races();
}

inline std::vector<std::vector<std::uint32_t>> oracle_maximal_suffixes(
    const Trace& t, const std::vector<std::uint32_t>& prefix_ids,
    const OracleBudget& b = OracleBudget()) {
  std::uint32_t mask = 0;
  for (std::uint32_t id : prefix_ids) mask |= 1u << id;
  return OracleSession(t, b).maximal_suffixes(mask);
}

inline std::vector<RacePair> oracle_maximal_suffix_mraces(const Trace& t,
                                                          const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).maximal_suffix_mraces();
}

inline std::vector<RacePair> oracle_granular_races(const Trace& t,
                                                   const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).granular_races();
}

inline std::vector<RacePair> oracle_granular_relaxed_races_among(
    const Trace& t, std::vector<RacePair> targets, const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).granular_relaxed_races_among(std::move(targets));
}

inline std::vector<GranularWitness> oracle_granular_witnesses(
    const Trace& t, RacePair p, bool relaxed, std::size_t max_count,
    const OracleBudget& b = OracleBudget()) {
  return OracleSession(t, b).granular_witnesses(p, relaxed, max_count);
}

}  // namespace racepred
