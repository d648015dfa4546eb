#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "racepred/grains.hpp"
#include "racepred/trace.hpp"

namespace racepred {

// Result of one detector run: the reported pairs with their bug locations,
// summary counts, timing, and state-space telemetry. Serializable as text, as
// schema-stable JSON, or as a CSV benchmark row.

struct RaceRecord {
  std::uint32_t e1 = 0;
  std::uint32_t e2 = 0;
  std::string e1_loc;  // source location when the trace gives one, else the event id
  std::string e2_loc;

  friend bool operator==(const RaceRecord& a, const RaceRecord& b) {
    return a.e1 == b.e1 && a.e2 == b.e2 && a.e1_loc == b.e1_loc && a.e2_loc == b.e2_loc;
  }
  friend bool operator<(const RaceRecord& a, const RaceRecord& b) {
    if (a.e1 != b.e1) return a.e1 < b.e1;
    return a.e2 < b.e2;
  }
};

struct ReportConfig {
  bool antichain = true;
  HeuristicConfig heur;
  std::uint32_t partitions = 1;
  bool track_ids = true;  // off: counts only, no per-pair records

  friend bool operator==(const ReportConfig& a, const ReportConfig& b) {
    return a.antichain == b.antichain && a.heur.sz == b.heur.sz && a.heur.sh == b.heur.sh &&
           a.heur.lru == b.heur.lru && a.partitions == b.partitions &&
           a.track_ids == b.track_ids;
  }
};

struct RaceReport {
  std::string algorithm;  // "m", "seqp" or "grainsprefix"
  ReportConfig config;
  std::uint64_t events = 0;
  std::vector<RaceRecord> races;  // sorted by (e1, e2); empty when counting only
  std::uint64_t racy_events = 0;  // distinct e2 ids
  std::uint64_t locations = 0;    // distinct e2 bug locations
  double wall_ms = 0.0;
  std::uint64_t peak_states = 0;  // largest per-partition frontier observed
  bool timeout = false;

  friend bool operator==(const RaceReport& a, const RaceReport& b) {
    return a.algorithm == b.algorithm && a.config == b.config && a.events == b.events &&
           a.races == b.races && a.racy_events == b.racy_events &&
           a.locations == b.locations && a.wall_ms == b.wall_ms &&
           a.peak_states == b.peak_states && a.timeout == b.timeout;
  }
};

// Sorts the race list and recomputes the summary counts from it. Only
// meaningful when per-pair records exist; counting-only runs fill the counts
// directly.
inline void finalize_counts(RaceReport& r) {
  std::sort(r.races.begin(), r.races.end());
  r.races.erase(std::unique(r.races.begin(), r.races.end()), r.races.end());
  std::set<std::uint32_t> e2s;
  std::set<std::string> locs;
  for (const RaceRecord& rec : r.races) {
    e2s.insert(rec.e2);
    locs.insert(rec.e2_loc);
  }
  r.racy_events = e2s.size();
  r.locations = locs.size();
}

inline nlohmann::json report_to_json(const RaceReport& r) {
  nlohmann::json races = nlohmann::json::array();
  for (const RaceRecord& rec : r.races) {
    races.push_back({{"e1", rec.e1},
                     {"e2", rec.e2},
                     {"e1_loc", rec.e1_loc},
                     {"e2_loc", rec.e2_loc}});
  }
  return nlohmann::json{
      {"algorithm", r.algorithm},
      {"config",
       {{"antichain", r.config.antichain},
        {"sz", r.config.heur.sz},
        {"sh", r.config.heur.sh},
        {"lru", r.config.heur.lru},
        {"partitions", r.config.partitions},
        {"ids", r.config.track_ids}}},
      {"events", r.events},
      {"races", std::move(races)},
      {"racy_events", r.racy_events},
      {"locations", r.locations},
      {"wall_ms", r.wall_ms},
      {"peak_states", r.peak_states},
      {"timeout", r.timeout},
  };
}

inline RaceReport report_from_json(const nlohmann::json& j) {
  RaceReport r;
  r.algorithm = j.at("algorithm").get<std::string>();
  const auto& c = j.at("config");
  r.config.antichain = c.at("antichain").get<bool>();
  r.config.heur.sz = c.at("sz").get<std::uint32_t>();
  r.config.heur.sh = c.at("sh").get<bool>();
  r.config.heur.lru = c.at("lru").get<std::uint32_t>();
  r.config.partitions = c.at("partitions").get<std::uint32_t>();
  r.config.track_ids = c.at("ids").get<bool>();
  r.events = j.at("events").get<std::uint64_t>();
  for (const auto& rec : j.at("races")) {
    r.races.push_back(RaceRecord{rec.at("e1").get<std::uint32_t>(),
                                 rec.at("e2").get<std::uint32_t>(),
                                 rec.at("e1_loc").get<std::string>(),
                                 rec.at("e2_loc").get<std::string>()});
  }
  r.racy_events = j.at("racy_events").get<std::uint64_t>();
  r.locations = j.at("locations").get<std::uint64_t>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.peak_states = j.at("peak_states").get<std::uint64_t>();
  r.timeout = j.at("timeout").get<bool>();
  return r;
}

inline std::string render_text(const RaceReport& r) {
  std::ostringstream os;
  os << "algorithm:   " << r.algorithm << "\n";
  os << "config:      antichain=" << (r.config.antichain ? "on" : "off");
  if (r.config.heur.sz) os << " sz=" << r.config.heur.sz;
  if (r.config.heur.sh) os << " sh";
  if (r.config.heur.lru) os << " lru=" << r.config.heur.lru;
  os << " partitions=" << r.config.partitions
     << " ids=" << (r.config.track_ids ? "on" : "off") << "\n";
  os << "events:      " << r.events << "\n";
  if (r.config.track_ids) {
    os << "races:\n";
    for (const RaceRecord& rec : r.races)
      os << "  (" << rec.e1 << ", " << rec.e2 << ")  " << rec.e1_loc << " / "
         << rec.e2_loc << "\n";
  }
  os << "racy events: " << r.racy_events << "\n";
  os << "locations:   " << r.locations << "\n";
  os << "wall ms:     " << std::fixed << std::setprecision(2) << r.wall_ms << "\n";
  os << "peak states: " << r.peak_states << "\n";
  if (r.timeout) os << "TIMEOUT: partial results\n";
  return os.str();
}

inline const char* bench_csv_header() {
  return "trace,algo,antichain,events,races,wall_ms,peak_states";
}

// One benchmark row; `races` is the racy-event count (distinct racy e2).
inline std::string bench_csv_row(const std::string& trace_name, const RaceReport& r) {
  std::ostringstream os;
  os << trace_name << ',' << r.algorithm << ',' << (r.config.antichain ? "on" : "off")
     << ',' << r.events << ',' << r.racy_events << ',' << std::fixed
     << std::setprecision(2) << r.wall_ms << ',' << r.peak_states;
  return os.str();
}

}  // namespace racepred
