#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "helpers.hpp"
#include "racepred/differential.hpp"
#include "racepred/enumerate.hpp"
#include "racepred/oracle.hpp"
#include "racepred/seqp.hpp"
#include "racepred/trace_io.hpp"

using namespace racepred;
using racepred::testing::load_fixture;
using racepred::testing::pairs;

TEST_CASE("prefix detector reproduces the fixture race sets") {
  CHECK(detect_prefix_races(load_fixture("tr8")) == pairs({{0, 3}, {1, 8}}));
  CHECK(detect_prefix_races(load_fixture("tr7")).empty());
  CHECK(detect_prefix_races(load_fixture("fig2")) == pairs({{0, 4}}));
  CHECK(detect_prefix_races(load_fixture("fig51")) == pairs({{0, 5}, {0, 6}, {1, 5}}));
  CHECK(detect_prefix_races(load_fixture("fig3a")).empty());
  CHECK(detect_prefix_races(load_fixture("fig1a")) == pairs({{0, 7}, {0, 8}}));
  CHECK(detect_prefix_races(load_fixture("empty")).empty());
}

TEST_CASE("every candidate instance of a racy access is reported") {
  // two writes of the same location on one thread both race with the later
  // write on the other thread; id tracking must keep them apart
  auto parsed = parse_trace("T1 w x\nT1 w x\nT2 w x\n");
  REQUIRE(parsed.ok());
  auto det = detect_prefix_races(*parsed.trace);
  CHECK(det == pairs({{0, 2}, {1, 2}}));
  CHECK(det == oracle_prefix_races(*parsed.trace));
}

TEST_CASE("prefix detector matches the reference on every tiny trace") {
  EnumConfig cfg;
  cfg.max_events = 5;
  cfg.num_threads = 2;
  cfg.num_locks = 1;
  cfg.num_locations = 2;
  std::size_t visited = 0, failures = 0;
  std::string first_failure;
  enumerate_wellformed_traces(cfg, [&](const Trace& t) {
    ++visited;
    if (auto err = check_prefix_detector(t)) {
      ++failures;
      if (first_failure.empty()) {
        std::ostringstream os;
        serialize_trace(os, t);
        first_failure = *err + "\n" + os.str();
      }
    }
  });
  INFO(first_failure);
  CHECK(failures == 0);
  CHECK(visited > 1000);
}

TEST_CASE("prefix detector matches the reference on fuzzed traces") {
  std::size_t failures = 0;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.num_events = 9;
    cfg.num_threads = 3;
    cfg.num_locks = 2;
    cfg.num_locations = 2;
    Trace t = generate_trace(cfg);
    std::optional<std::string> err = check_prefix_detector(t);
    if (!err) err = check_antichain_consistency(t);
    if (!err) err = check_partition_coverage(t, 3);
    if (err) {
      ++failures;
      if (first_failure.empty()) {
        std::ostringstream os;
        serialize_trace(os, t);
        first_failure = "seed " + std::to_string(seed) + ": " + *err + "\n" + os.str();
      }
    }
  }
  INFO(first_failure);
  CHECK(failures == 0);
}

TEST_CASE("count-only mode reports the same racy events with fewer states") {
  auto racy_events = [](const Trace& t, bool track_ids, std::uint64_t& peak) {
    SeqpDetector det({true, track_ids, 0, 1});
    std::set<std::uint32_t> out;
    for (const Event& e : t.events)
      det.feed(e, [&](std::uint32_t, const Event& e2) { out.insert(e2.id); });
    peak = det.peak_states();
    return out;
  };
  for (const char* name : {"tr8", "tr7", "fig2", "fig51", "fig3a", "fig1a"}) {
    Trace t = load_fixture(name);
    INFO("fixture " << name);
    std::uint64_t peak_list = 0, peak_count = 0;
    auto listed = racy_events(t, true, peak_list);
    auto counted = racy_events(t, false, peak_count);
    CHECK(listed == counted);
    CHECK(peak_count <= peak_list);
  }
  for (std::uint64_t seed = 500; seed < 560; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.num_events = 40;
    cfg.num_threads = 3;
    cfg.num_locks = 2;
    cfg.num_locations = 3;
    Trace t = generate_trace(cfg);
    INFO("seed " << seed);
    std::uint64_t peak_list = 0, peak_count = 0;
    auto listed = racy_events(t, true, peak_list);
    auto counted = racy_events(t, false, peak_count);
    CHECK(listed == counted);
    CHECK(peak_count <= peak_list);
  }
}

TEST_CASE("partitioned prefix detectors cover the whole report") {
  for (const char* name : {"tr8", "fig51", "fig1a"}) {
    Trace t = load_fixture(name);
    INFO("fixture " << name);
    for (std::uint32_t parts : {2u, 4u, 7u}) {
      INFO("partitions " << parts);
      CHECK(!check_partition_coverage(t, parts).has_value());
    }
  }
}
