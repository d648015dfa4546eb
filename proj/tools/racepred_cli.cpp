// Command-line front end: analyze traces with a chosen detector, compare
// detectors against each other, fuzz the detectors against the reference
// semantics, and benchmark streaming runs.
//
// Exit codes: 0 success, 1 grammar error, 2 ill-formed trace, 3 wall-clock
// cap hit (partial report still emitted), 4 bad flags, 5 property violation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "racepred/racepred.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kParseError = 1;
constexpr int kIllFormed = 2;
constexpr int kTimeout = 3;
constexpr int kBadFlags = 4;
constexpr int kPropertyViolation = 5;

using namespace racepred;

struct CommonFlags {
  std::string algo = "seqp";
  std::uint32_t sz = 0;
  bool sh = false;
  std::uint32_t lru = 0;
  bool no_antichain = false;
  std::uint32_t partitions = 0;  // 0: one per hardware thread
  double timeout = 0.0;
  std::string format = "text";
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool with_format = true) {
  cmd->add_option("--algo", f.algo, "detector: m, seqp or grainsprefix")
      ->check(CLI::IsMember({"m", "seqp", "grainsprefix"}));
  cmd->add_option("--sz", f.sz, "cap on events per window (grainsprefix)");
  cmd->add_flag("--sh", f.sh,
                "restrict window shapes: first window a single event or one "
                "complete critical section, second a single event (grainsprefix)");
  cmd->add_option("--lru", f.lru, "cap on live candidates, least recently active evicted");
  cmd->add_flag("--no-antichain", f.no_antichain, "disable frontier pruning");
  cmd->add_option("--partitions", f.partitions,
                  "state partitions / worker threads (0 = hardware threads)");
  cmd->add_option("--timeout", f.timeout, "wall-clock cap in seconds (0 = none)");
  if (with_format)
    cmd->add_option("--format", f.format, "output format")
        ->check(CLI::IsMember({"text", "json"}));
}

DriverOptions driver_options(const CommonFlags& f) {
  DriverOptions opts;
  opts.algo = *parse_algorithm(f.algo);
  opts.antichain = !f.no_antichain;
  if (opts.algo == Algorithm::GrainsPrefix) opts.heur = HeuristicConfig{f.sz, f.sh, f.lru};
  opts.partitions = f.partitions;
  opts.timeout_seconds = f.timeout;
  return opts;
}

std::string event_label(const Trace& t, std::uint32_t id) {
  const Event& e = t.events[id];
  std::string obj = is_memory_op(e.op) ? t.symbols.locations[e.object]
                                       : t.symbols.locks[e.object];
  return t.symbols.threads[e.thread] + " " + op_name(e.op) + "(" + obj + ")";
}

// Parses a whole trace file; fills `exit_code` and prints to stderr on error.
std::optional<Trace> load_trace_file(const std::string& path, int& exit_code) {
  std::ifstream in(path);
  if (!in.good()) {
    std::cerr << "cannot open " << path << "\n";
    exit_code = kParseError;
    return std::nullopt;
  }
  ParseResult raw = parse_trace_raw(in);
  if (!raw.ok()) {
    std::cerr << path << ": " << raw.error->to_string() << "\n";
    exit_code = kParseError;
    return std::nullopt;
  }
  if (auto wf = validate_wellformed(*raw.trace)) {
    std::cerr << path << ": ill-formed trace: " << wf->message() << "\n";
    exit_code = kIllFormed;
    return std::nullopt;
  }
  return std::move(raw.trace);
}

int run_analyze(const std::string& path, const CommonFlags& flags) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (path != "-") {
    file.open(path);
    if (!file.good()) {
      std::cerr << "cannot open " << path << "\n";
      return kParseError;
    }
    in = &file;
  }
  StreamOutcome out = run_streaming(*in, driver_options(flags));
  if (out.parse_error) {
    std::cerr << path << ": " << out.parse_error->to_string() << "\n";
    return kParseError;
  }
  if (out.wf_error) {
    std::cerr << path << ": ill-formed trace: " << out.wf_error->message() << "\n";
    return kIllFormed;
  }
  if (flags.format == "json")
    std::cout << report_to_json(out.report).dump(2) << "\n";
  else
    std::cout << render_text(out.report);
  return out.report.timeout ? kTimeout : kOk;
}

int run_compare(const std::string& path, std::vector<std::string> algos,
                const CommonFlags& flags) {
  if (algos.empty()) algos = {"m", "seqp", "grainsprefix"};
  // hierarchy rank: every m-race is a seqp race, every seqp race a grainsprefix race
  auto rank = [](const std::string& a) { return a == "m" ? 0 : a == "seqp" ? 1 : 2; };
  std::sort(algos.begin(), algos.end(),
            [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
  algos.erase(std::unique(algos.begin(), algos.end()), algos.end());

  int exit_code = kOk;
  std::optional<Trace> t = load_trace_file(path, exit_code);
  if (!t) return exit_code;

  std::vector<RaceReport> reports;
  for (const std::string& name : algos) {
    CommonFlags f = flags;
    f.algo = name;
    DriverOptions opts = driver_options(f);
    opts.partitions = 1;
    reports.push_back(analyze_trace(*t, opts));
  }

  struct Verdict {
    std::string lower, higher;
    bool holds;
    std::vector<RacePair> missing;
  };
  std::vector<Verdict> verdicts;
  for (std::size_t i = 0; i + 1 < reports.size(); ++i) {
    Verdict v{algos[i], algos[i + 1], true, {}};
    for (const RaceRecord& rec : reports[i].races) {
      bool found = false;
      for (const RaceRecord& other : reports[i + 1].races)
        if (other.e1 == rec.e1 && other.e2 == rec.e2) found = true;
      if (!found) {
        v.holds = false;
        v.missing.push_back(RacePair{rec.e1, rec.e2});
      }
    }
    verdicts.push_back(std::move(v));
  }

  bool violated = false;
  if (flags.format == "json") {
    nlohmann::json j;
    j["trace"] = path;
    j["algorithms"] = nlohmann::json::array();
    for (const RaceReport& r : reports) j["algorithms"].push_back(report_to_json(r));
    j["inclusions"] = nlohmann::json::array();
    for (const Verdict& v : verdicts) {
      j["inclusions"].push_back({{"lower", v.lower}, {"higher", v.higher}, {"holds", v.holds}});
      if (!v.holds) violated = true;
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "trace: " << path << " (" << t->size() << " events)\n";
    std::cout << "algorithm     races  racy  locations\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const RaceReport& r = reports[i];
      std::cout << "  " << r.algorithm << std::string(12 - r.algorithm.size(), ' ')
                << r.races.size() << "      " << r.racy_events << "     " << r.locations
                << "\n";
      for (const RaceRecord& rec : r.races)
        std::cout << "    (" << event_label(*t, rec.e1) << ", " << event_label(*t, rec.e2)
                  << ")  ids (" << rec.e1 << ", " << rec.e2 << ")\n";
    }
    for (const Verdict& v : verdicts) {
      std::cout << "inclusion " << v.lower << " <= " << v.higher << ": "
                << (v.holds ? "ok" : "VIOLATED") << "\n";
      if (!v.holds) {
        violated = true;
        for (const RacePair& p : v.missing)
          std::cout << "  missing (" << event_label(*t, p.e1) << ", "
                    << event_label(*t, p.e2) << ")\n";
      }
    }
  }
  return violated ? kPropertyViolation : kOk;
}

struct FuzzFlags {
  std::uint64_t iterations = 1000;
  std::uint32_t events = 8;
  std::uint32_t threads = 3;
  std::uint32_t locks = 2;
  std::uint32_t locations = 2;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

// The property battery run on each fuzzed trace; returns the first failure.
std::optional<std::string> fuzz_battery(const Trace& t) {
  if (auto err = check_prefix_detector(t)) return err;
  DiffResult g = check_granular_detector(t);
  if (g.hard_failure || !g.errors.empty())
    return g.errors.empty() ? std::string("window detector gap of unexpected kind")
                            : g.errors.front();
  auto props = check_reference_properties(t, false);
  if (!props.empty()) return props.front();
  if (auto err = check_antichain_consistency(t)) return err;
  std::vector<HeuristicConfig> heurs = {
      {5, false, 0}, {0, true, 0}, {5, true, 0}, {5, true, 100}};
  if (auto err = check_heuristic_subsets(t, heurs)) return err;
  if (auto err = check_partition_coverage(t, 3)) return err;
  return std::nullopt;
}

int run_fuzz(const FuzzFlags& f) {
  if (f.events > 9) {
    std::cerr << "--events must be at most 9: the reference semantics are "
                 "exponential and capped there\n";
    return kBadFlags;
  }
  for (std::uint64_t i = 0; i < f.iterations; ++i) {
    GenConfig cfg;
    cfg.seed = f.seed + i;
    cfg.num_events = f.events;
    cfg.num_threads = f.threads;
    cfg.num_locks = f.locks;
    cfg.num_locations = f.locations;
    Trace t = generate_trace(cfg);
    std::optional<std::string> err = fuzz_battery(t);
    if (!err) continue;

    Trace small = shrink_trace(t, [](const Trace& u) { return fuzz_battery(u).has_value(); });
    std::filesystem::path out =
        std::filesystem::path(f.out_dir) /
        ("counterexample_seed" + std::to_string(cfg.seed) + ".trace");
    std::ofstream os(out);
    serialize_trace(os, small);
    os.close();
    std::cerr << "property violation at seed " << cfg.seed << ": " << *err << "\n";
    std::cerr << "shrunk counterexample (" << small.size() << " events) written to "
              << out.string() << "\n";
    std::optional<std::string> small_err = fuzz_battery(small);
    if (small_err) std::cerr << "shrunk failure: " << *small_err << "\n";
    return kPropertyViolation;
  }
  std::cout << "fuzz: " << f.iterations << " traces ("
            << f.events << " events, " << f.threads << " threads, " << f.locks
            << " locks, " << f.locations << " locations), all properties held\n";
  return kOk;
}

struct BenchFlags {
  std::string file;
  bool gen = false;
  std::uint32_t events = 100000;
  std::uint32_t threads = 8;
  std::uint32_t locks = 4;
  std::uint32_t locations = 16;
  std::uint64_t seed = 1;
  bool both_antichain = false;
  std::uint64_t assert_frontier = 0;
};

int run_bench(const BenchFlags& b, const CommonFlags& flags) {
  if (b.file.empty() == !b.gen) {
    std::cerr << "bench needs exactly one input: a trace file or --gen\n";
    return kBadFlags;
  }

  std::string name;
  std::optional<Trace> gen_trace;
  if (b.gen) {
    GenConfig cfg;
    cfg.seed = b.seed;
    cfg.num_events = b.events;
    cfg.num_threads = b.threads;
    cfg.num_locks = b.locks;
    cfg.num_locations = b.locations;
    gen_trace = generate_trace(cfg);
    name = "gen:s" + std::to_string(b.seed) + ":n" + std::to_string(b.events);
  } else {
    name = b.file;
  }

  auto one_run = [&](bool antichain, RaceReport& out) -> int {
    CommonFlags f = flags;
    f.no_antichain = !antichain;
    DriverOptions opts = driver_options(f);
    opts.track_ids = false;       // streaming counts; no per-pair storage
    opts.count_locations = false;
    if (gen_trace) {
      out = analyze_trace(*gen_trace, opts);
    } else {
      std::ifstream in(b.file);
      if (!in.good()) {
        std::cerr << "cannot open " << b.file << "\n";
        return kParseError;
      }
      StreamOutcome res = run_streaming(in, opts);
      if (res.parse_error) {
        std::cerr << b.file << ": " << res.parse_error->to_string() << "\n";
        return kParseError;
      }
      if (res.wf_error) {
        std::cerr << b.file << ": ill-formed trace: " << res.wf_error->message() << "\n";
        return kIllFormed;
      }
      out = res.report;
    }
    return kOk;
  };

  std::cout << bench_csv_header() << "\n";
  RaceReport on;
  int rc = one_run(!flags.no_antichain, on);
  if (rc != kOk) return rc;
  std::cout << bench_csv_row(name, on) << "\n";
  if (b.assert_frontier && on.peak_states > b.assert_frontier) {
    std::cerr << "peak frontier " << on.peak_states << " exceeds bound "
              << b.assert_frontier << "\n";
    return kPropertyViolation;
  }
  if (b.both_antichain) {
    RaceReport off;
    rc = one_run(flags.no_antichain, off);
    if (rc != kOk) return rc;
    std::cout << bench_csv_row(name, off) << "\n";
    if (on.racy_events != off.racy_events) {
      std::cerr << "race counts differ with pruning on (" << on.racy_events
                << ") vs off (" << off.racy_events << ")\n";
      return kPropertyViolation;
    }
  }
  return on.timeout ? kTimeout : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming data-race prediction toolkit"};
  app.require_subcommand(1);

  CommonFlags analyze_flags;
  std::string analyze_file;
  CLI::App* analyze = app.add_subcommand("analyze", "run one detector over a trace file");
  analyze->add_option("file", analyze_file, "trace file (- for stdin)")->required();
  add_common_flags(analyze, analyze_flags);

  CommonFlags compare_flags;
  std::string compare_file;
  std::vector<std::string> compare_algos;
  CLI::App* compare = app.add_subcommand(
      "compare", "run several detectors on one trace and check their inclusions");
  compare->add_option("file", compare_file, "trace file")->required();
  compare->add_option("--algo", compare_algos, "detectors to run (default: all)")
      ->check(CLI::IsMember({"m", "seqp", "grainsprefix"}));
  compare->add_option("--sz", compare_flags.sz, "cap on events per window (grainsprefix)");
  compare->add_flag("--sh", compare_flags.sh, "restrict window shapes (grainsprefix)");
  compare->add_option("--lru", compare_flags.lru, "cap on live candidates (grainsprefix)");
  compare->add_flag("--no-antichain", compare_flags.no_antichain, "disable frontier pruning");
  compare->add_option("--format", compare_flags.format, "output format")
      ->check(CLI::IsMember({"text", "json"}));

  FuzzFlags fuzz_flags;
  CLI::App* fuzz = app.add_subcommand(
      "fuzz", "generate traces and check every detector against the reference semantics");
  fuzz->add_option("--iterations", fuzz_flags.iterations, "number of traces");
  fuzz->add_option("--events", fuzz_flags.events, "events per trace (max 9)");
  fuzz->add_option("--threads", fuzz_flags.threads, "threads per trace");
  fuzz->add_option("--locks", fuzz_flags.locks, "locks per trace");
  fuzz->add_option("--locations", fuzz_flags.locations, "memory locations per trace");
  fuzz->add_option("--seed", fuzz_flags.seed, "first seed");
  fuzz->add_option("--out", fuzz_flags.out_dir, "directory for counterexample files");

  CommonFlags bench_flags;
  BenchFlags bench_cfg;
  CLI::App* bench = app.add_subcommand("bench", "measure a streaming run, emit CSV");
  bench->add_option("file", bench_cfg.file, "trace file");
  bench->add_flag("--gen", bench_cfg.gen, "generate the input instead of reading a file");
  bench->add_option("--events", bench_cfg.events, "generated events");
  bench->add_option("--threads", bench_cfg.threads, "generated threads");
  bench->add_option("--locks", bench_cfg.locks, "generated locks");
  bench->add_option("--locations", bench_cfg.locations, "generated memory locations");
  bench->add_option("--seed", bench_cfg.seed, "generator seed");
  bench->add_flag("--both-antichain", bench_cfg.both_antichain,
                  "run with pruning on and off and require equal race counts");
  bench->add_option("--assert-frontier", bench_cfg.assert_frontier,
                    "fail if the peak frontier exceeds this bound");
  add_common_flags(bench, bench_flags, /*with_format=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadFlags;
  }

  if (app.got_subcommand(analyze)) return run_analyze(analyze_file, analyze_flags);
  if (app.got_subcommand(compare)) return run_compare(compare_file, compare_algos, compare_flags);
  if (app.got_subcommand(fuzz)) return run_fuzz(fuzz_flags);
  if (app.got_subcommand(bench)) return run_bench(bench_cfg, bench_flags);
  return kBadFlags;
}
