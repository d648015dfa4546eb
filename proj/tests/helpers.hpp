#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>

#include "racepred/trace.hpp"
#include "racepred/trace_io.hpp"

#ifndef FIXTURE_DIR
#define FIXTURE_DIR "tests/fixtures"
#endif

namespace racepred::testing {

inline Trace load_fixture(const std::string& name) {
  std::ifstream in(std::string(FIXTURE_DIR) + "/" + name + ".trace");
  REQUIRE(in.good());
  ParseResult r = parse_trace(in);
  REQUIRE(r.ok());
  REQUIRE(validate_wellformed(*r.trace) == std::nullopt);
  return std::move(*r.trace);
}

inline std::vector<RacePair> pairs(std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> xs) {
  std::vector<RacePair> out;
  for (auto [a, b] : xs) out.push_back(RacePair{a, b});
  return out;
}

}  // namespace racepred::testing
