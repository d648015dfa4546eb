#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "racepred/ids.hpp"

namespace racepred {

enum class Op : std::uint8_t { Read, Write, Acquire, Release };

inline bool is_memory_op(Op op) { return op == Op::Read || op == Op::Write; }
inline bool is_lock_op(Op op) { return op == Op::Acquire || op == Op::Release; }

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Read: return "r";
    case Op::Write: return "w";
    case Op::Acquire: return "acq";
    case Op::Release: return "rel";
  }
  return "?";
}

// One trace event. `object` indexes the location table for memory ops and the
// lock table for lock ops; the two namespaces are disjoint by construction.
// `srcloc_ref` < 0 means the source location defaults to the event id.
struct Event {
  std::uint32_t id = 0;
  std::uint32_t thread = 0;
  Op op = Op::Read;
  std::uint32_t object = 0;
  std::int32_t srcloc_ref = -1;
};

inline bool same_label(const Event& a, const Event& b) {
  return a.thread == b.thread && a.op == b.op && a.object == b.object;
}

// Interning tables mapping external names to dense ids. Memory locations and
// locks are interned separately, so a name can appear in both namespaces
// without clashing.
struct SymbolTables {
  std::vector<std::string> threads;
  std::vector<std::string> locations;
  std::vector<std::string> locks;
  std::vector<std::string> srclocs;  // explicit source locations only

  std::uint32_t intern_thread(std::string_view name) { return intern(thread_ids_, threads, name); }
  std::uint32_t intern_location(std::string_view name) { return intern(location_ids_, locations, name); }
  std::uint32_t intern_lock(std::string_view name) { return intern(lock_ids_, locks, name); }
  // Memory locations and locks live in disjoint namespaces; reusing a name
  // across them is rejected at parse time via these lookups.
  bool is_known_location(std::string_view name) const {
    return location_ids_.count(std::string(name)) != 0;
  }
  bool is_known_lock(std::string_view name) const {
    return lock_ids_.count(std::string(name)) != 0;
  }
  std::int32_t intern_srcloc(std::string_view name) {
    return static_cast<std::int32_t>(intern(srcloc_ids_, srclocs, name));
  }

 private:
  static std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& ids,
                              std::vector<std::string>& names, std::string_view name) {
    auto it = ids.find(std::string(name));
    if (it != ids.end()) return it->second;
    std::uint32_t id = static_cast<std::uint32_t>(names.size());
    names.emplace_back(name);
    ids.emplace(std::string(name), id);
    return id;
  }

  std::unordered_map<std::string, std::uint32_t> thread_ids_;
  std::unordered_map<std::string, std::uint32_t> location_ids_;
  std::unordered_map<std::string, std::uint32_t> lock_ids_;
  std::unordered_map<std::string, std::uint32_t> srcloc_ids_;
};

// A fully materialized trace. Streaming consumers use Event directly and keep
// their own SymbolTables.
struct Trace {
  std::vector<Event> events;
  SymbolTables symbols;

  std::size_t size() const { return events.size(); }
  std::uint32_t num_threads() const { return static_cast<std::uint32_t>(symbols.threads.size()); }
  std::uint32_t num_locations() const { return static_cast<std::uint32_t>(symbols.locations.size()); }
  std::uint32_t num_locks() const { return static_cast<std::uint32_t>(symbols.locks.size()); }

  // Bug-location string of an event: the explicit source location when given,
  // otherwise the event id rendered in decimal.
  std::string srcloc_of(std::uint32_t id) const {
    const Event& e = events[id];
    if (e.srcloc_ref >= 0) return symbols.srclocs[static_cast<std::size_t>(e.srcloc_ref)];
    return std::to_string(id);
  }
};

// Two events conflict when they touch the same memory location and at least
// one writes it. (Thread distinctness is a separate condition checked by race
// definitions.)
inline bool conflicting(const Event& a, const Event& b) {
  return is_memory_op(a.op) && is_memory_op(b.op) && a.object == b.object &&
         (a.op == Op::Write || b.op == Op::Write);
}

enum class WfViolation : std::uint8_t {
  ReadBeforeWrite,
  DoubleAcquire,
  ReleaseWithoutAcquire,
  OverlappingCriticalSections,
};

struct WfError {
  WfViolation kind;
  std::uint32_t event_id;  // first offending event

  std::string message() const {
    const char* what = "";
    switch (kind) {
      case WfViolation::ReadBeforeWrite: what = "read-before-write"; break;
      case WfViolation::DoubleAcquire: what = "double-acquire"; break;
      case WfViolation::ReleaseWithoutAcquire: what = "release-without-acquire"; break;
      case WfViolation::OverlappingCriticalSections: what = "overlapping-critical-sections"; break;
    }
    return std::string(what) + " at event " + std::to_string(event_id);
  }
};

// Incremental well-formedness checker, usable on a stream. Feed events in
// order; the first violation is reported and remembered.
class WfChecker {
 public:
  // Returns the violation for `e` if it is the first one seen, otherwise
  // nullopt. After a violation, subsequent events are not checked.
  std::optional<WfError> feed(const Event& e) {
    if (failed_) return std::nullopt;
    switch (e.op) {
      case Op::Read:
        if (!written_.contains(e.object)) return fail(WfViolation::ReadBeforeWrite, e.id);
        break;
      case Op::Write:
        written_.insert(e.object);
        break;
      case Op::Acquire: {
        auto it = holder_.find(e.object);
        if (it != holder_.end()) {
          if (it->second == e.thread) return fail(WfViolation::DoubleAcquire, e.id);
          return fail(WfViolation::OverlappingCriticalSections, e.id);
        }
        holder_.emplace(e.object, e.thread);
        break;
      }
      case Op::Release: {
        auto it = holder_.find(e.object);
        if (it == holder_.end() || it->second != e.thread)
          return fail(WfViolation::ReleaseWithoutAcquire, e.id);
        holder_.erase(it);
        break;
      }
    }
    return std::nullopt;
  }

  bool failed() const { return failed_; }

 private:
  std::optional<WfError> fail(WfViolation kind, std::uint32_t id) {
    failed_ = true;
    return WfError{kind, id};
  }

  IdSet written_;
  std::unordered_map<std::uint32_t, std::uint32_t> holder_;  // lock -> holding thread
  bool failed_ = false;
};

// Returns the first well-formedness violation of the trace, if any.
inline std::optional<WfError> validate_wellformed(const Trace& trace) {
  WfChecker checker;
  for (const Event& e : trace.events) {
    if (auto err = checker.feed(e)) return err;
  }
  return std::nullopt;
}

// Per-event program-order predecessor (previous event of the same thread), or
// -1 for the first event of a thread.
inline std::vector<std::int32_t> program_order(const Trace& trace) {
  std::vector<std::int32_t> pred(trace.size(), -1);
  std::unordered_map<std::uint32_t, std::int32_t> last;
  for (const Event& e : trace.events) {
    auto it = last.find(e.thread);
    if (it != last.end()) pred[e.id] = it->second;
    last[e.thread] = static_cast<std::int32_t>(e.id);
  }
  return pred;
}

// Per-event reads-from: for a read, the id of the latest earlier write on the
// same location; -1 for non-reads and for reads with no earlier write.
inline std::vector<std::int32_t> reads_from(const Trace& trace) {
  std::vector<std::int32_t> rf(trace.size(), -1);
  std::unordered_map<std::uint32_t, std::int32_t> last_write;
  for (const Event& e : trace.events) {
    if (e.op == Op::Write) {
      last_write[e.object] = static_cast<std::int32_t>(e.id);
    } else if (e.op == Op::Read) {
      auto it = last_write.find(e.object);
      if (it != last_write.end()) rf[e.id] = it->second;
    }
  }
  return rf;
}

// A reordering witness: event ids in execution order. Validity with respect to
// a trace is checked by the reference tooling.
struct ReorderingWitness {
  std::vector<std::uint32_t> order;
};

// An unordered race pair, normalized so first < second in trace order.
struct RacePair {
  std::uint32_t e1 = 0;
  std::uint32_t e2 = 0;

  bool operator==(const RacePair& o) const { return e1 == o.e1 && e2 == o.e2; }
  bool operator<(const RacePair& o) const { return e1 != o.e1 ? e1 < o.e1 : e2 < o.e2; }
};

inline RacePair make_pair_normalized(std::uint32_t a, std::uint32_t b) {
  return a < b ? RacePair{a, b} : RacePair{b, a};
}

struct RacePairHash {
  std::size_t operator()(const RacePair& p) const {
    return static_cast<std::size_t>(
        IdSet::mix((std::uint64_t{p.e1} << 32) | std::uint64_t{p.e2}));
  }
};

}  // namespace racepred
