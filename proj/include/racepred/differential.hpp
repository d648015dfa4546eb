#pragma once

// Cross-checks between the streaming detectors and the brute-force reference
// implementations, plus the property checks shared by the test suite, the
// fuzzing harness and the acceptance runner. Every function either returns a
// human-readable description of what went wrong or a structured result that
// classifies each disagreement.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "racepred/commutativity.hpp"
#include "racepred/grains.hpp"
#include "racepred/oracle.hpp"
#include "racepred/seqp.hpp"
#include "racepred/trace.hpp"

namespace racepred {

inline std::string format_pairs(const std::vector<RacePair>& v) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << '(' << v[i].e1 << ',' << v[i].e2 << ')';
  }
  os << '}';
  return os.str();
}

inline std::string format_ids(const std::vector<std::uint32_t>& v) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ' ';
    os << v[i];
  }
  os << ']';
  return os.str();
}

inline std::string format_witness(const GranularWitness& w) {
  return "prefix=" + format_ids(w.rho) + " win1=" + format_ids(w.g1) +
         " win2=" + format_ids(w.g2);
}

// How a disagreement between the window detector and the window reference is
// explained, if at all.
enum class GapKind {
  WindowMaximalityOnly,    // detector report valid once windows may come from
                           // non-maximal executable suffixes
  NeedsChangedReader,      // every reference justification relies on a read
                           // observing a different writer inside a window
  NeedsInterleavedPrefix,  // every remaining justification replays prefix
                           // events from inside or beyond the window span
  Unexplained,             // none of the known relaxations applies
};

inline const char* to_string(GapKind k) {
  switch (k) {
    case GapKind::WindowMaximalityOnly: return "window-maximality-only";
    case GapKind::NeedsChangedReader: return "needs-changed-reader";
    case GapKind::NeedsInterleavedPrefix: return "needs-interleaved-prefix";
    case GapKind::Unexplained: return "unexplained";
  }
  return "unexplained";
}

struct GapInstance {
  RacePair pair;
  bool detector_reported = false;  // true: detector-only; false: reference-only
  GapKind kind = GapKind::Unexplained;
  std::string detail;
};

struct DiffResult {
  bool ok = true;             // no disagreement at all
  bool hard_failure = false;  // at least one unexplained disagreement
  std::vector<GapInstance> gaps;
  std::vector<std::string> errors;  // violated inclusions; always hard
};

// The streaming prefix-race detector must reproduce the reference set
// exactly. Returns a description of the first mismatch, if any.
inline std::optional<std::string> check_prefix_detector(const Trace& t,
                                                        const OracleBudget& budget = {}) {
  auto det = detect_prefix_races(t);
  auto ref = oracle_prefix_races(t, budget);
  if (det == ref) return std::nullopt;
  return "prefix detector reported " + format_pairs(det) + " but the reference computes " +
         format_pairs(ref);
}

// Does this justification rely on a read inside a window observing a
// different writer than it did in the recorded trace? The second event of the
// pair is exempt: it only has to become enabled, never to execute.
inline bool witness_needs_changed_reader(const Trace& t, const std::vector<std::int32_t>& rf,
                                         const GranularWitness& w, RacePair p) {
  std::unordered_map<std::uint32_t, std::int32_t> lastw;
  for (std::uint32_t id : w.rho)
    if (t.events[id].op == Op::Write)
      lastw[t.events[id].object] = static_cast<std::int32_t>(id);
  auto scan = [&](const std::vector<std::uint32_t>& ids) {
    for (std::uint32_t id : ids) {
      const Event& e = t.events[id];
      if (e.op == Op::Read && id != p.e2) {
        auto it = lastw.find(e.object);
        std::int32_t seen = it == lastw.end() ? -1 : it->second;
        if (seen != rf[id]) return true;
      } else if (e.op == Op::Write) {
        lastw[e.object] = static_cast<std::int32_t>(id);
      }
      if (id == p.e2) break;
    }
    return false;
  };
  return scan(w.g1) || scan(w.g2);
}

// Does this justification fit the streaming detector's shape: both windows
// are unbroken runs of consecutive trace events (the second one cut off at
// the reported event) and every replayed-prefix event sits either before the
// first window or strictly between the two?
inline bool witness_is_block_shaped(const GranularWitness& w, RacePair p) {
  std::vector<std::uint32_t> g2t;
  for (std::uint32_t id : w.g2) {
    g2t.push_back(id);
    if (id == p.e2) break;
  }
  if (g2t.empty() || g2t.back() != p.e2) return false;
  auto contiguous = [](const std::vector<std::uint32_t>& v) {
    return v.back() - v.front() + 1 == v.size();
  };
  if (!contiguous(w.g1) || !contiguous(g2t)) return false;
  for (std::uint32_t r : w.rho)
    if (!(r < w.g1.front() || (r > w.g1.back() && r < g2t.front()))) return false;
  return true;
}

// Sandwich check for the streaming window detector (heuristics off):
// it must contain every prefix race and stay within the window reference;
// each residual disagreement is classified by which relaxation explains it.
inline DiffResult check_granular_detector(const Trace& t, const OracleBudget& budget = {}) {
  DiffResult r;
  auto det = detect_granular_races(t);
  OracleSession s(t, budget);
  auto prefix = s.prefix_races();

  std::vector<RacePair> missed_prefix;
  std::set_difference(prefix.begin(), prefix.end(), det.begin(), det.end(),
                      std::back_inserter(missed_prefix));
  for (const RacePair& p : missed_prefix) {
    r.errors.push_back("window detector missed prefix race (" + std::to_string(p.e1) + "," +
                       std::to_string(p.e2) + ")");
    r.hard_failure = true;
  }

  auto ref = s.granular_races();
  std::vector<RacePair> extras, missing;
  std::set_difference(det.begin(), det.end(), ref.begin(), ref.end(),
                      std::back_inserter(extras));
  std::set_difference(ref.begin(), ref.end(), det.begin(), det.end(),
                      std::back_inserter(missing));

  for (const RacePair& p : extras) {
    GapInstance g;
    g.pair = p;
    g.detector_reported = true;
    auto relaxed = s.granular_relaxed_races_among({p});
    if (!relaxed.empty()) {
      g.kind = GapKind::WindowMaximalityOnly;
      auto ws = s.granular_witnesses(p, /*relaxed=*/true, 1);
      if (!ws.empty()) g.detail = format_witness(ws.front());
    } else {
      g.kind = GapKind::Unexplained;
      g.detail = "no executable suffix word realizes the pair at all";
      r.hard_failure = true;
    }
    r.gaps.push_back(std::move(g));
  }

  if (!missing.empty()) {
    auto rf = reads_from(t);
    constexpr std::size_t kWitnessCap = 4096;
    for (const RacePair& p : missing) {
      auto ws = s.granular_witnesses(p, /*relaxed=*/false, kWitnessCap);
      GapInstance g;
      g.pair = p;
      g.detector_reported = false;
      bool all_changed_reader = true;
      const GranularWitness* shaped_clean = nullptr;
      const GranularWitness* plain = nullptr;
      for (const GranularWitness& w : ws) {
        bool changed = witness_needs_changed_reader(t, rf, w, p);
        all_changed_reader = all_changed_reader && changed;
        if (!changed && plain == nullptr) plain = &w;
        if (!changed && witness_is_block_shaped(w, p)) {
          shaped_clean = &w;
          break;
        }
      }
      if (shaped_clean != nullptr) {
        g.kind = GapKind::Unexplained;
        g.detail = "detector-shaped justification exists: " + format_witness(*shaped_clean);
        r.hard_failure = true;
      } else if (all_changed_reader) {
        g.kind = GapKind::NeedsChangedReader;
        if (!ws.empty()) g.detail = format_witness(ws.front());
      } else {
        g.kind = GapKind::NeedsInterleavedPrefix;
        if (plain != nullptr) g.detail = format_witness(*plain);
      }
      if (ws.size() >= kWitnessCap) g.detail += " (justification list truncated)";
      r.gaps.push_back(std::move(g));
    }
  }

  r.ok = r.gaps.empty() && r.errors.empty();
  return r;
}

// Reference-level structure shared by the race notions: adjacent-swap races
// survive as trace-order grain races, scattered grain races stay within
// prefix races, the synchronization-preserving and prefix formulations agree,
// and both the prefix and maximal-suffix sets embed into the window races.
// Optionally replays every prefix as permuted grains, which must leave the
// prefix race set untouched. Returns one message per violated property.
inline std::vector<std::string> check_reference_properties(const Trace& t,
                                                           bool with_prefix_replay,
                                                           const OracleBudget& budget = {}) {
  std::vector<std::string> out;
  OracleSession s(t, budget);
  auto prefix = s.prefix_races();

  auto m = detect_mraces(t);
  auto grains_m = s.grain_races_among(false, m);
  if (grains_m != m)
    out.push_back("adjacent-swap races missing from trace-order grain races: reported " +
                  format_pairs(grains_m) + " of " + format_pairs(m));

  std::vector<RacePair> beyond;
  const auto& conflicts = s.conflict_pairs();
  std::set_difference(conflicts.begin(), conflicts.end(), prefix.begin(), prefix.end(),
                      std::back_inserter(beyond));
  if (!beyond.empty()) {
    auto sg = s.grain_races_among(true, beyond);
    if (!sg.empty())
      out.push_back("scattered grain races outside the prefix race set: " + format_pairs(sg));
  }

  auto syncp = s.syncp_prefix_races();
  if (syncp != prefix)
    out.push_back("synchronization-preserving races " + format_pairs(syncp) +
                  " differ from prefix races " + format_pairs(prefix));

  auto granular_prefix = s.granular_races_among(prefix);
  if (granular_prefix != prefix)
    out.push_back("prefix races missing from window races: reported " +
                  format_pairs(granular_prefix) + " of " + format_pairs(prefix));

  auto suffix_races = s.maximal_suffix_mraces();
  auto granular_suffix = s.granular_races_among(suffix_races);
  if (granular_suffix != suffix_races)
    out.push_back("maximal-suffix races missing from window races: reported " +
                  format_pairs(granular_suffix) + " of " + format_pairs(suffix_races));

  if (with_prefix_replay) {
    auto replayed = s.grain_augmented_prefix_races();
    if (replayed != prefix)
      out.push_back("grain-permuted prefix replay changed the prefix race set: " +
                    format_pairs(replayed) + " versus " + format_pairs(prefix));
  }
  return out;
}

// Frontier pruning must never change what either detector reports, and may
// only shrink the peak state count.
inline std::optional<std::string> check_antichain_consistency(const Trace& t) {
  auto run_prefix = [&](bool antichain) {
    SeqpDetector det({antichain, true, 0, 1});
    std::vector<RacePair> out;
    for (const Event& e : t.events)
      det.feed(e, [&](std::uint32_t a, const Event& b) { out.push_back(RacePair{a, b.id}); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return std::make_pair(out, det.peak_states());
  };
  auto [on, peak_on] = run_prefix(true);
  auto [off, peak_off] = run_prefix(false);
  if (on != off)
    return "prefix detector changed its report under pruning: " + format_pairs(on) +
           " versus " + format_pairs(off);
  if (peak_on > peak_off)
    return "prefix detector peak states grew under pruning: " + std::to_string(peak_on) +
           " versus " + std::to_string(peak_off);

  auto run_windows = [&](bool antichain) {
    GrainsPrefixDetector det({antichain, true, HeuristicConfig{}, 0, 1});
    std::vector<RacePair> out;
    for (const Event& e : t.events)
      det.feed(e, [&](std::uint32_t a, const Event& b) { out.push_back(RacePair{a, b.id}); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return std::make_pair(out, det.peak_states());
  };
  auto [won, wpeak_on] = run_windows(true);
  auto [woff, wpeak_off] = run_windows(false);
  if (won != woff)
    return "window detector changed its report under pruning: " + format_pairs(won) +
           " versus " + format_pairs(woff);
  if (wpeak_on > wpeak_off)
    return "window detector peak states grew under pruning: " + std::to_string(wpeak_on) +
           " versus " + std::to_string(wpeak_off);
  return std::nullopt;
}

// Every heuristic configuration may only drop reports, never invent them.
inline std::optional<std::string> check_heuristic_subsets(
    const Trace& t, const std::vector<HeuristicConfig>& configs) {
  auto full = detect_granular_races(t);
  for (const HeuristicConfig& h : configs) {
    auto sub = detect_granular_races(t, h);
    if (!std::includes(full.begin(), full.end(), sub.begin(), sub.end())) {
      std::vector<RacePair> extra;
      std::set_difference(sub.begin(), sub.end(), full.begin(), full.end(),
                          std::back_inserter(extra));
      return "heuristic run (sz=" + std::to_string(h.sz) + " sh=" + std::to_string(h.sh) +
             " lru=" + std::to_string(h.lru) + ") invented races " + format_pairs(extra);
    }
  }
  return std::nullopt;
}

// Splitting candidate ownership across partitions must cover exactly the
// unpartitioned report once the per-partition outputs are merged.
inline std::optional<std::string> check_partition_coverage(const Trace& t,
                                                           std::uint32_t partitions) {
  auto whole_prefix = detect_prefix_races(t);
  std::vector<RacePair> merged;
  for (std::uint32_t i = 0; i < partitions; ++i) {
    SeqpDetector det({true, true, i, partitions});
    for (const Event& e : t.events)
      det.feed(e, [&](std::uint32_t a, const Event& b) { merged.push_back(RacePair{a, b.id}); });
  }
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  if (merged != whole_prefix)
    return "partitioned prefix detectors reported " + format_pairs(merged) +
           " but the single run reports " + format_pairs(whole_prefix);

  auto whole_windows = detect_granular_races(t);
  merged.clear();
  for (std::uint32_t i = 0; i < partitions; ++i) {
    GrainsPrefixDetector det({true, true, HeuristicConfig{}, i, partitions});
    for (const Event& e : t.events)
      det.feed(e, [&](std::uint32_t a, const Event& b) { merged.push_back(RacePair{a, b.id}); });
  }
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  if (merged != whole_windows)
    return "partitioned window detectors reported " + format_pairs(merged) +
           " but the single run reports " + format_pairs(whole_windows);
  return std::nullopt;
}

// Greedy one-event shrinking: repeatedly drop any single event whose removal
// keeps the trace well-formed and the predicate true, until no removal helps.
// Event ids are re-assigned to positions after each removal, so the predicate
// always sees a contiguous trace.
template <typename Pred>
Trace shrink_trace(Trace t, Pred&& pred) {
  bool progress = true;
  while (progress && !t.events.empty()) {
    progress = false;
    for (std::size_t drop = 0; drop < t.events.size(); ++drop) {
      Trace cand;
      cand.symbols = t.symbols;
      cand.events.reserve(t.events.size() - 1);
      for (std::size_t j = 0; j < t.events.size(); ++j) {
        if (j == drop) continue;
        Event e = t.events[j];
        e.id = static_cast<std::uint32_t>(cand.events.size());
        cand.events.push_back(e);
      }
      if (validate_wellformed(cand).has_value()) continue;
      if (!pred(cand)) continue;
      t = std::move(cand);
      progress = true;
      break;
    }
  }
  return t;
}

}  // namespace racepred
