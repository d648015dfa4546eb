#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "racepred/commutativity.hpp"
#include "racepred/grains.hpp"
#include "racepred/report.hpp"
#include "racepred/seqp.hpp"
#include "racepred/trace.hpp"
#include "racepred/trace_io.hpp"

namespace racepred {

// Runs one detector over an event stream: events are read (or taken from an
// in-memory trace) once, fanned out to one detector instance per state
// partition, and the per-partition results are merged into a RaceReport.
// Partition workers run on their own threads per event batch; the merge is
// single-threaded. A wall-clock cap is checked between batches and yields a
// flushed partial report flagged `timeout`.

enum class Algorithm { Mrace, Seqp, GrainsPrefix };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Mrace: return "m";
    case Algorithm::Seqp: return "seqp";
    case Algorithm::GrainsPrefix: return "grainsprefix";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  if (s == "m") return Algorithm::Mrace;
  if (s == "seqp") return Algorithm::Seqp;
  if (s == "grainsprefix") return Algorithm::GrainsPrefix;
  return std::nullopt;
}

struct DriverOptions {
  Algorithm algo = Algorithm::Seqp;
  bool antichain = true;
  HeuristicConfig heur;          // grainsprefix only
  bool track_ids = true;         // off: report counts only, no per-pair records
  bool count_locations = true;   // with ids off: still track distinct bug locations
  std::uint32_t partitions = 1;  // 0: one per available hardware thread
  double timeout_seconds = 0.0;  // 0: unlimited
  std::uint32_t batch_events = 4096;
};

inline std::uint32_t resolve_partitions(std::uint32_t requested) {
  if (requested) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

struct StreamOutcome {
  RaceReport report;
  std::optional<ParseError> parse_error;
  std::optional<WfError> wf_error;
  bool ok() const { return !parse_error && !wf_error; }
};

namespace detail {

struct DriverWorker {
  std::variant<MraceDetector, SeqpDetector, GrainsPrefixDetector> det;
  std::vector<RacePair> pairs;  // ids mode
  std::vector<std::pair<std::uint32_t, std::int32_t>> racy;  // (e2 id, srcloc ref)

  void feed_batch(const Event* begin, const Event* end, bool track_ids) {
    auto sink = [&](std::uint32_t e1, const Event& e2) {
      if (track_ids)
        pairs.push_back(RacePair{e1, e2.id});
      else
        racy.emplace_back(e2.id, e2.srcloc_ref);
    };
    std::visit(
        [&](auto& d) {
          for (const Event* p = begin; p != end; ++p) d.feed(*p, sink);
        },
        det);
  }

  std::uint64_t peak() const {
    return std::visit([](const auto& d) { return static_cast<std::uint64_t>(d.peak_states()); },
                      det);
  }
};

}  // namespace detail

class StreamDriver {
 public:
  explicit StreamDriver(const DriverOptions& opts)
      : opts_(opts), num_partitions_(resolve_partitions(opts.partitions)),
        start_(std::chrono::steady_clock::now()) {
    batch_.reserve(opts_.batch_events ? opts_.batch_events : 1);
    for (std::uint32_t i = 0; i < num_partitions_; ++i) {
      detail::DriverWorker w;
      switch (opts_.algo) {
        case Algorithm::Mrace:
          w.det.emplace<MraceDetector>(MraceOptions{
              opts_.track_ids ? MraceMode::Exhaustive : MraceMode::Existence, i,
              num_partitions_});
          break;
        case Algorithm::Seqp:
          w.det.emplace<SeqpDetector>(
              SeqpOptions{opts_.antichain, opts_.track_ids, i, num_partitions_});
          break;
        case Algorithm::GrainsPrefix:
          w.det.emplace<GrainsPrefixDetector>(
              GrainsOptions{opts_.antichain, opts_.track_ids, opts_.heur, i,
                            num_partitions_});
          break;
      }
      workers_.push_back(std::move(w));
    }
  }

  void feed(const Event& e) {
    if (timed_out_) return;
    if (opts_.track_ids) srcloc_refs_.push_back(e.srcloc_ref);
    ++events_;
    batch_.push_back(e);
    if (batch_.size() >= std::max<std::size_t>(1, opts_.batch_events)) flush();
  }

  bool timed_out() const { return timed_out_; }
  std::uint32_t num_partitions() const { return num_partitions_; }

  RaceReport finish(const SymbolTables& symbols) {
    flush();
    RaceReport r;
    r.algorithm = algorithm_name(opts_.algo);
    r.config.antichain = opts_.antichain;
    r.config.heur = opts_.heur;
    r.config.partitions = num_partitions_;
    r.config.track_ids = opts_.track_ids;
    r.events = events_;
    r.timeout = timed_out_;
    auto loc_of = [&](std::uint32_t id, std::int32_t ref) {
      if (ref >= 0) return symbols.srclocs[static_cast<std::size_t>(ref)];
      return std::to_string(id);
    };
    if (opts_.track_ids) {
      for (detail::DriverWorker& w : workers_)
        for (const RacePair& p : w.pairs)
          r.races.push_back(RaceRecord{p.e1, p.e2, loc_of(p.e1, srcloc_refs_[p.e1]),
                                       loc_of(p.e2, srcloc_refs_[p.e2])});
      finalize_counts(r);
    } else {
      std::vector<std::pair<std::uint32_t, std::int32_t>> racy;
      for (detail::DriverWorker& w : workers_)
        racy.insert(racy.end(), w.racy.begin(), w.racy.end());
      std::sort(racy.begin(), racy.end());
      racy.erase(std::unique(racy.begin(), racy.end()), racy.end());
      r.racy_events = racy.size();
      if (opts_.count_locations) {
        std::set<std::string> locs;
        for (auto [id, ref] : racy) locs.insert(loc_of(id, ref));
        r.locations = locs.size();
      }
    }
    for (const detail::DriverWorker& w : workers_)
      r.peak_states = std::max(r.peak_states, w.peak());
    r.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start_)
                    .count();
    return r;
  }

 private:
  void flush() {
    if (batch_.empty()) return;
    const Event* begin = batch_.data();
    const Event* end = begin + batch_.size();
    if (workers_.size() == 1) {
      workers_[0].feed_batch(begin, end, opts_.track_ids);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(workers_.size() - 1);
      for (std::size_t i = 1; i < workers_.size(); ++i)
        threads.emplace_back([this, i, begin, end] {
          workers_[i].feed_batch(begin, end, opts_.track_ids);
        });
      workers_[0].feed_batch(begin, end, opts_.track_ids);
      for (std::thread& t : threads) t.join();
    }
    batch_.clear();
    if (opts_.timeout_seconds > 0) {
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                        .count();
      if (secs > opts_.timeout_seconds) timed_out_ = true;
    }
  }

  DriverOptions opts_;
  std::uint32_t num_partitions_;
  std::chrono::steady_clock::time_point start_;
  std::vector<detail::DriverWorker> workers_;
  std::vector<Event> batch_;
  std::vector<std::int32_t> srcloc_refs_;  // per event id; ids mode only
  std::uint64_t events_ = 0;
  bool timed_out_ = false;
};

// Streams a trace file through the selected detector. Grammar and
// well-formedness are checked on the fly; the first violation stops the run.
inline StreamOutcome run_streaming(std::istream& in, const DriverOptions& opts) {
  StreamOutcome out;
  TraceReader reader(in);
  WfChecker wf;
  StreamDriver driver(opts);
  while (auto e = reader.next()) {
    if (auto err = wf.feed(*e)) {
      out.wf_error = err;
      break;
    }
    driver.feed(*e);
    if (driver.timed_out()) break;
  }
  if (reader.error()) out.parse_error = reader.error();
  out.report = driver.finish(reader.symbols());
  return out;
}

// In-memory convenience wrapper over the same engine.
inline RaceReport analyze_trace(const Trace& t, const DriverOptions& opts) {
  StreamDriver driver(opts);
  for (const Event& e : t.events) {
    driver.feed(e);
    if (driver.timed_out()) break;
  }
  return driver.finish(t.symbols);
}

}  // namespace racepred
