#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "helpers.hpp"
#include "racepred/driver.hpp"
#include "racepred/grains.hpp"
#include "racepred/seqp.hpp"
#include "racepred/trace_io.hpp"

using namespace racepred;
using racepred::testing::load_fixture;

namespace {

std::vector<RacePair> report_pairs(const RaceReport& r) {
  std::vector<RacePair> out;
  for (const RaceRecord& rec : r.races) out.push_back(RacePair{rec.e1, rec.e2});
  return out;
}

std::string fixture_text(const std::string& name) {
  std::ifstream in(std::string(FIXTURE_DIR) + "/" + name + ".trace");
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("streaming analysis equals the in-memory detectors") {
  for (const char* name : {"tr8", "tr7", "fig2", "fig51", "fig3a", "fig1a"}) {
    Trace t = load_fixture(name);
    std::string text = fixture_text(name);
    INFO("fixture " << name);
    for (Algorithm algo : {Algorithm::Mrace, Algorithm::Seqp, Algorithm::GrainsPrefix}) {
      INFO("algorithm " << algorithm_name(algo));
      DriverOptions opts;
      opts.algo = algo;
      std::istringstream in(text);
      StreamOutcome out = run_streaming(in, opts);
      REQUIRE(out.ok());
      std::vector<RacePair> expected;
      switch (algo) {
        case Algorithm::Mrace: expected = detect_mraces(t); break;
        case Algorithm::Seqp: expected = detect_prefix_races(t); break;
        case Algorithm::GrainsPrefix: expected = detect_granular_races(t); break;
      }
      CHECK(report_pairs(out.report) == expected);
      CHECK(out.report.events == t.size());
      CHECK(out.report.algorithm == algorithm_name(algo));
    }
  }
}

TEST_CASE("partition counts do not change the reported races") {
  std::vector<Trace> traces;
  for (const char* name : {"tr8", "fig51", "fig1a"}) traces.push_back(load_fixture(name));
  for (std::uint64_t seed = 900; seed < 910; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.num_events = 30;
    cfg.num_threads = 4;
    cfg.num_locks = 2;
    cfg.num_locations = 5;
    traces.push_back(generate_trace(cfg));
  }
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const Trace& t = traces[i];
    INFO("trace " << i);
    for (Algorithm algo : {Algorithm::Mrace, Algorithm::Seqp, Algorithm::GrainsPrefix}) {
      INFO("algorithm " << algorithm_name(algo));
      DriverOptions base;
      base.algo = algo;
      base.partitions = 1;
      if (algo == Algorithm::GrainsPrefix && t.size() > 10)
        base.heur = HeuristicConfig{3, true, 0};
      RaceReport one = analyze_trace(t, base);
      for (std::uint32_t parts : {4u, 16u}) {
        INFO("partitions " << parts);
        DriverOptions opts = base;
        opts.partitions = parts;
        RaceReport many = analyze_trace(t, opts);
        CHECK(many.races == one.races);
        CHECK(many.racy_events == one.racy_events);
        CHECK(many.locations == one.locations);
      }
    }
  }
}

TEST_CASE("grammar and well-formedness violations stop the stream") {
  DriverOptions opts;
  {
    std::istringstream in("T1 w x\nT1 hop x\n");
    StreamOutcome out = run_streaming(in, opts);
    REQUIRE(out.parse_error.has_value());
    CHECK(out.parse_error->line == 2);
    CHECK(!out.wf_error.has_value());
    CHECK(!out.ok());
  }
  {
    std::istringstream in("T1 w x\nT1 rel l\n");
    StreamOutcome out = run_streaming(in, opts);
    REQUIRE(out.wf_error.has_value());
    CHECK(out.wf_error->event_id == 1);
    CHECK(!out.ok());
  }
  {
    std::istringstream in("T1 w x\nT2 w x\n");
    StreamOutcome out = run_streaming(in, opts);
    REQUIRE(out.ok());
    CHECK(out.report.racy_events == 1);
  }
}

TEST_CASE("a tiny wall-clock cap yields a flagged partial report") {
  GenConfig cfg;
  cfg.seed = 42;
  cfg.num_events = 3000;
  cfg.num_threads = 4;
  cfg.num_locks = 2;
  cfg.num_locations = 4;
  Trace t = generate_trace(cfg);
  DriverOptions full;
  full.algo = Algorithm::Seqp;
  RaceReport whole = analyze_trace(t, full);
  DriverOptions capped = full;
  capped.timeout_seconds = 1e-9;
  capped.batch_events = 64;
  RaceReport partial = analyze_trace(t, capped);
  CHECK(partial.timeout);
  CHECK(!whole.timeout);
  CHECK(partial.events < whole.events);
  CHECK(std::includes(whole.races.begin(), whole.races.end(), partial.races.begin(),
                      partial.races.end()));
}

TEST_CASE("count-only runs report the same racy events as listings") {
  for (const char* name : {"tr8", "tr7", "fig2", "fig51", "fig3a", "fig1a"}) {
    Trace t = load_fixture(name);
    INFO("fixture " << name);
    for (Algorithm algo : {Algorithm::Mrace, Algorithm::Seqp, Algorithm::GrainsPrefix}) {
      INFO("algorithm " << algorithm_name(algo));
      DriverOptions listing;
      listing.algo = algo;
      DriverOptions counting = listing;
      counting.track_ids = false;
      RaceReport a = analyze_trace(t, listing);
      RaceReport b = analyze_trace(t, counting);
      CHECK(b.races.empty());
      CHECK(a.racy_events == b.racy_events);
      CHECK(a.locations == b.locations);
    }
  }
}

TEST_CASE("explicit source locations flow into race records") {
  std::istringstream in("T1 w x a.c:12\nT2 w x b.c:7\nT2 w x b.c:7\n");
  DriverOptions opts;
  StreamOutcome out = run_streaming(in, opts);
  REQUIRE(out.ok());
  REQUIRE(out.report.races.size() >= 2);
  CHECK(out.report.races[0].e1_loc == "a.c:12");
  CHECK(out.report.races[0].e2_loc == "b.c:7");
  // both racy e2 events share one source line
  CHECK(out.report.racy_events == 2);
  CHECK(out.report.locations == 1);
}

TEST_CASE("partition auto-detection always yields at least one worker") {
  CHECK(resolve_partitions(0) >= 1);
  CHECK(resolve_partitions(7) == 7);
}
