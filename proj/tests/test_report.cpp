#include <string>

#include "catch2/catch_amalgamated.hpp"
#include "helpers.hpp"
#include "racepred/report.hpp"

using namespace racepred;

namespace {

RaceReport sample_report() {
  RaceReport r;
  r.algorithm = "seqp";
  r.config.antichain = true;
  r.config.heur = HeuristicConfig{5, true, 100};
  r.config.partitions = 4;
  r.config.track_ids = true;
  r.events = 9;
  r.races = {
      {0, 3, "a.c:12", "b.c:7"},
      {1, 8, "1", "8"},
      {0, 8, "a.c:12", "8"},
  };
  r.wall_ms = 1.25;
  r.peak_states = 17;
  r.timeout = false;
  finalize_counts(r);
  return r;
}

}  // namespace

TEST_CASE("summary counts are computed from the race records") {
  RaceReport r = sample_report();
  // three pairs, two distinct e2 ids, two distinct e2 locations
  CHECK(r.races.size() == 3);
  CHECK(r.racy_events == 2);
  CHECK(r.locations == 2);
  // records are sorted by (e1, e2)
  CHECK(r.races[0].e1 == 0);
  CHECK(r.races[0].e2 == 3);
  CHECK(r.races[1].e1 == 0);
  CHECK(r.races[1].e2 == 8);
  CHECK(r.races[2].e1 == 1);
}

TEST_CASE("duplicate race records collapse") {
  RaceReport r;
  r.races = {{0, 3, "x", "y"}, {0, 3, "x", "y"}, {0, 3, "x", "y"}};
  finalize_counts(r);
  CHECK(r.races.size() == 1);
  CHECK(r.racy_events == 1);
  CHECK(r.locations == 1);
}

TEST_CASE("JSON report round-trips") {
  RaceReport r = sample_report();
  nlohmann::json j = report_to_json(r);
  // schema-stable top-level keys
  for (const char* key : {"algorithm", "config", "events", "races", "racy_events",
                          "locations", "wall_ms", "peak_states", "timeout"})
    CHECK(j.contains(key));
  for (const char* key : {"antichain", "sz", "sh", "lru", "partitions", "ids"})
    CHECK(j.at("config").contains(key));
  RaceReport back = report_from_json(j);
  CHECK(back == r);
  // a serialized-then-parsed text body also round-trips
  RaceReport again = report_from_json(nlohmann::json::parse(j.dump()));
  CHECK(again == r);
}

TEST_CASE("text rendering shows pairs, counts, and flags") {
  RaceReport r = sample_report();
  std::string text = render_text(r);
  CHECK(text.find("algorithm:   seqp") != std::string::npos);
  CHECK(text.find("(0, 3)") != std::string::npos);
  CHECK(text.find("a.c:12") != std::string::npos);
  CHECK(text.find("racy events: 2") != std::string::npos);
  CHECK(text.find("locations:   2") != std::string::npos);
  CHECK(text.find("TIMEOUT") == std::string::npos);
  r.timeout = true;
  CHECK(render_text(r).find("TIMEOUT") != std::string::npos);
}

TEST_CASE("benchmark CSV row matches the header") {
  RaceReport r = sample_report();
  std::string header = bench_csv_header();
  std::string row = bench_csv_row("fixtures/tr8.trace", r);
  CHECK(header == "trace,algo,antichain,events,races,wall_ms,peak_states");
  // same number of columns
  auto count_commas = [](const std::string& s) {
    return std::count(s.begin(), s.end(), ',');
  };
  CHECK(count_commas(header) == count_commas(row));
  CHECK(row.rfind("fixtures/tr8.trace,seqp,on,9,2,", 0) == 0);
}
