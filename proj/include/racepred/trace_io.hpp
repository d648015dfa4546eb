#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "racepred/trace.hpp"

namespace racepred {

// Line format: `thread SP op SP object (SP srcloc)?` with op one of
// r, w, acq, rel. `#` starts a comment line; blank lines are ignored; LF and
// CRLF both accepted. Output always uses LF.

struct ParseError {
  std::size_t line = 0;  // 1-based
  std::string message;

  std::string to_string() const {
    return "parse error at line " + std::to_string(line) + ": " + message;
  }
};

// Incremental reader: turns an input stream into events one at a time without
// materializing the trace. Keeps the interning tables for the stream.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in) : in_(in) {}

  // Returns the next event, or nullopt at end of input or after an error.
  std::optional<Event> next() {
    if (error_) return std::nullopt;
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string_view rest = trim(line);
      if (rest.empty() || rest[0] == '#') continue;

      std::string_view tok[4];
      int ntok = 0;
      while (!rest.empty()) {
        std::size_t sp = rest.find_first_of(" \t");
        std::string_view word = sp == std::string_view::npos ? rest : rest.substr(0, sp);
        rest = sp == std::string_view::npos ? std::string_view{} : trim(rest.substr(sp + 1));
        if (ntok == 4) {
          error_ = ParseError{line_no_, "too many fields (expected `thread op object [srcloc]`)"};
          return std::nullopt;
        }
        tok[ntok++] = word;
      }
      if (ntok < 3) {
        error_ = ParseError{line_no_, "too few fields (expected `thread op object [srcloc]`)"};
        return std::nullopt;
      }

      Op op;
      if (tok[1] == "r") op = Op::Read;
      else if (tok[1] == "w") op = Op::Write;
      else if (tok[1] == "acq") op = Op::Acquire;
      else if (tok[1] == "rel") op = Op::Release;
      else {
        error_ = ParseError{line_no_, "unknown op `" + std::string(tok[1]) +
                                          "` (expected r, w, acq or rel)"};
        return std::nullopt;
      }

      // Memory locations and locks are disjoint namespaces: one name may not
      // serve as both.
      if (is_memory_op(op) && symbols_.is_known_lock(tok[2])) {
        error_ = ParseError{line_no_, "object `" + std::string(tok[2]) +
                                          "` already used as a lock"};
        return std::nullopt;
      }
      if (is_lock_op(op) && symbols_.is_known_location(tok[2])) {
        error_ = ParseError{line_no_, "object `" + std::string(tok[2]) +
                                          "` already used as a memory location"};
        return std::nullopt;
      }

      Event e;
      e.id = next_id_++;
      e.thread = symbols_.intern_thread(tok[0]);
      e.op = op;
      e.object = is_memory_op(op) ? symbols_.intern_location(tok[2])
                                  : symbols_.intern_lock(tok[2]);
      e.srcloc_ref = ntok == 4 ? symbols_.intern_srcloc(tok[3]) : -1;
      last_line_ = line_no_;
      return e;
    }
    return std::nullopt;
  }

  std::size_t last_event_line() const { return last_line_; }

  const std::optional<ParseError>& error() const { return error_; }
  SymbolTables& symbols() { return symbols_; }
  const SymbolTables& symbols() const { return symbols_; }
  std::uint32_t events_read() const { return next_id_; }

 private:
  static std::string_view trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

  std::istream& in_;
  SymbolTables symbols_;
  std::uint32_t next_id_ = 0;
  std::size_t line_no_ = 0;
  std::size_t last_line_ = 0;
  std::optional<ParseError> error_;
};

struct ParseResult {
  std::optional<Trace> trace;
  std::optional<ParseError> error;
  bool ok() const { return trace.has_value(); }
};

// Parses without the well-formedness pass; used where deliberately ill-formed
// traces are needed (e.g. exercising validate_wellformed directly).
inline ParseResult parse_trace_raw(std::istream& in) {
  TraceReader reader(in);
  Trace t;
  while (auto e = reader.next()) t.events.push_back(*e);
  if (reader.error()) return {std::nullopt, reader.error()};
  t.symbols = std::move(reader.symbols());
  return {std::move(t), std::nullopt};
}

inline ParseResult parse_trace_raw(const std::string& text) {
  std::istringstream in(text);
  return parse_trace_raw(in);
}

// Full parse: grammar plus well-formedness; a violation is reported as an
// error at the offending event's line.
inline ParseResult parse_trace(std::istream& in) {
  TraceReader reader(in);
  Trace t;
  std::vector<std::size_t> lines;
  while (auto e = reader.next()) {
    t.events.push_back(*e);
    lines.push_back(reader.last_event_line());
  }
  if (reader.error()) return {std::nullopt, reader.error()};
  t.symbols = std::move(reader.symbols());
  if (auto wf = validate_wellformed(t))
    return {std::nullopt, ParseError{lines[wf->event_id], wf->message()}};
  return {std::move(t), std::nullopt};
}

inline ParseResult parse_trace(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

inline void serialize_event(std::ostream& out, const SymbolTables& symbols, const Event& e) {
  out << symbols.threads[e.thread] << ' ' << op_name(e.op) << ' '
      << (is_memory_op(e.op) ? symbols.locations[e.object] : symbols.locks[e.object]);
  if (e.srcloc_ref >= 0) out << ' ' << symbols.srclocs[static_cast<std::size_t>(e.srcloc_ref)];
  out << '\n';
}

inline void serialize_trace(std::ostream& out, const Trace& t) {
  for (const Event& e : t.events) serialize_event(out, t.symbols, e);
}

inline std::string serialize_trace(const Trace& t) {
  std::ostringstream out;
  serialize_trace(out, t);
  return out.str();
}

// Configuration for the random well-formed trace generator. Fixed seed gives a
// fixed trace. Weights bias the op mix; illegal choices are re-drawn from the
// legal set, so generated traces are well-formed by construction.
struct GenConfig {
  std::uint64_t seed = 1;
  std::uint32_t num_events = 100;
  std::uint32_t num_threads = 2;
  std::uint32_t num_locks = 1;
  std::uint32_t num_locations = 2;
  // Relative weights of candidate actions.
  double weight_read = 3.0;
  double weight_write = 3.0;
  double weight_acquire = 1.0;
  double weight_release = 1.0;
};

struct UnsatisfiableConfig : std::runtime_error {
  UnsatisfiableConfig() : std::runtime_error("unsatisfiable-config") {}
};

// Generates a well-formed trace deterministically from the config seed.
inline Trace generate_trace(const GenConfig& cfg) {
  if (cfg.num_events > 0 &&
      (cfg.num_threads == 0 || (cfg.num_locations == 0 && cfg.num_locks == 0)))
    throw UnsatisfiableConfig{};

  Trace t;
  for (std::uint32_t i = 0; i < cfg.num_threads; ++i)
    t.symbols.intern_thread("T" + std::to_string(i + 1));
  for (std::uint32_t i = 0; i < cfg.num_locations; ++i)
    t.symbols.intern_location("x" + std::to_string(i));
  for (std::uint32_t i = 0; i < cfg.num_locks; ++i)
    t.symbols.intern_lock("l" + std::to_string(i));

  std::mt19937_64 rng(cfg.seed);
  std::vector<bool> written(cfg.num_locations, false);
  // holder[lock] = thread + 1, 0 when free
  std::vector<std::uint32_t> holder(cfg.num_locks, 0);
  std::vector<std::uint32_t> held_count(cfg.num_threads, 0);

  struct Action {
    Op op;
    std::uint32_t object;
    double weight;
  };
  std::vector<Action> actions;

  t.events.reserve(cfg.num_events);
  for (std::uint32_t i = 0; i < cfg.num_events; ++i) {
    std::uint32_t thread = static_cast<std::uint32_t>(rng() % cfg.num_threads);

    actions.clear();
    // Zero-weight ops are never emitted, so they are not legal actions.
    for (std::uint32_t x = 0; x < cfg.num_locations; ++x) {
      if (cfg.weight_write > 0) actions.push_back({Op::Write, x, cfg.weight_write});
      if (written[x] && cfg.weight_read > 0)
        actions.push_back({Op::Read, x, cfg.weight_read});
    }
    for (std::uint32_t l = 0; l < cfg.num_locks; ++l) {
      if (holder[l] == 0) {
        if (cfg.weight_acquire > 0) actions.push_back({Op::Acquire, l, cfg.weight_acquire});
      } else if (holder[l] == thread + 1) {
        if (cfg.weight_release > 0) actions.push_back({Op::Release, l, cfg.weight_release});
      }
    }
    if (actions.empty()) {
      // The drawn thread cannot act (e.g. all locks held by other threads and
      // no usable location op); fall back to a thread that can release.
      bool placed = false;
      if (cfg.weight_release > 0) {
        for (std::uint32_t l = 0; l < cfg.num_locks && !placed; ++l) {
          if (holder[l] != 0) {
            thread = holder[l] - 1;
            actions.push_back({Op::Release, l, cfg.weight_release});
            placed = true;
          }
        }
      }
      if (!placed) throw UnsatisfiableConfig{};
    }

    double total = 0;
    for (const Action& a : actions) total += a.weight;
    double pick = std::uniform_real_distribution<double>(0.0, total)(rng);
    const Action* chosen = &actions.back();
    for (const Action& a : actions) {
      if (pick < a.weight) {
        chosen = &a;
        break;
      }
      pick -= a.weight;
    }

    Event e;
    e.id = i;
    e.thread = thread;
    e.op = chosen->op;
    e.object = chosen->object;
    e.srcloc_ref = -1;
    t.events.push_back(e);

    switch (chosen->op) {
      case Op::Write: written[chosen->object] = true; break;
      case Op::Acquire:
        holder[chosen->object] = thread + 1;
        ++held_count[thread];
        break;
      case Op::Release:
        holder[chosen->object] = 0;
        --held_count[thread];
        break;
      case Op::Read: break;
    }
  }
  return t;
}

}  // namespace racepred
