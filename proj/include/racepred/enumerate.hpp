#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "racepred/trace.hpp"

namespace racepred {

// Bounds for exhaustive well-formed trace enumeration.
struct EnumConfig {
  std::uint32_t max_events = 7;
  std::uint32_t num_threads = 2;
  std::uint32_t num_locks = 1;
  std::uint32_t num_locations = 2;
};

// Visits every well-formed trace (including the empty one) whose events use at
// most the configured thread/lock/location universe and whose length is at
// most max_events. Well-formedness is maintained incrementally, so the search
// never leaves the legal space: reads only of written locations, acquires only
// of free locks, releases only of own held locks.
//
// The same Trace object is reused across visits; visitors must not hold on to
// it across calls.
template <typename Visit>
void enumerate_wellformed_traces(const EnumConfig& cfg, Visit&& visit) {
  Trace t;
  for (std::uint32_t i = 0; i < cfg.num_threads; ++i)
    t.symbols.intern_thread("T" + std::to_string(i + 1));
  for (std::uint32_t i = 0; i < cfg.num_locations; ++i)
    t.symbols.intern_location("x" + std::to_string(i));
  for (std::uint32_t i = 0; i < cfg.num_locks; ++i)
    t.symbols.intern_lock("l" + std::to_string(i));

  std::vector<std::uint32_t> write_count(cfg.num_locations, 0);
  // holder[lock] = thread + 1, 0 when free
  std::vector<std::uint32_t> holder(cfg.num_locks, 0);

  struct Rec {
    Trace& t;
    const EnumConfig& cfg;
    std::vector<std::uint32_t>& write_count;
    std::vector<std::uint32_t>& holder;
    Visit& visit;

    void emit(std::uint32_t thread, Op op, std::uint32_t object) {
      Event e;
      e.id = static_cast<std::uint32_t>(t.events.size());
      e.thread = thread;
      e.op = op;
      e.object = object;
      e.srcloc_ref = -1;
      t.events.push_back(e);
      switch (op) {
        case Op::Write: ++write_count[object]; break;
        case Op::Acquire: holder[object] = thread + 1; break;
        case Op::Release: holder[object] = 0; break;
        case Op::Read: break;
      }
      visit(const_cast<const Trace&>(t));
      if (t.events.size() < cfg.max_events) expand();
      t.events.pop_back();
      switch (op) {
        case Op::Write: --write_count[object]; break;
        case Op::Acquire: holder[object] = 0; break;
        case Op::Release: holder[object] = thread + 1; break;
        case Op::Read: break;
      }
    }

    void expand() {
      for (std::uint32_t th = 0; th < cfg.num_threads; ++th) {
        for (std::uint32_t x = 0; x < cfg.num_locations; ++x) {
          emit(th, Op::Write, x);
          if (write_count[x] > 0) emit(th, Op::Read, x);
        }
        for (std::uint32_t l = 0; l < cfg.num_locks; ++l) {
          if (holder[l] == 0) emit(th, Op::Acquire, l);
          else if (holder[l] == th + 1) emit(th, Op::Release, l);
        }
      }
    }
  };

  Rec rec{t, cfg, write_count, holder, visit};
  visit(const_cast<const Trace&>(t));  // the empty trace
  if (cfg.max_events > 0) rec.expand();
}

// Counts the traces the enumeration visits; handy for corpus reporting.
inline std::uint64_t count_wellformed_traces(const EnumConfig& cfg) {
  std::uint64_t n = 0;
  enumerate_wellformed_traces(cfg, [&](const Trace&) { ++n; });
  return n;
}

}  // namespace racepred
