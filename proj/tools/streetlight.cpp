// Command-line entry point: evolve, simulate, extract-rules, export, xcheck.
//
// Exit codes: 0 success, 2 input error, 3 verification failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "streetlight/streetlight.hpp"

namespace fs = std::filesystem;
using namespace streetlight;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitInput = 2;
constexpr int kExitVerify = 3;

std::string default_out_dir() {
  if (const char* env = std::getenv("STREETLIGHT_OUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "out";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InputError("cannot create output directory '" + dir.string() + "'");
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

// Written to a temporary name and renamed so a manifest is never half-written.
void write_manifest(const fs::path& dir, const std::string& command,
                    const nlohmann::json& inputs, std::uint64_t seed,
                    std::chrono::steady_clock::time_point started) {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  nlohmann::json m = {{"command", command},
                      {"inputs", inputs},
                      {"masterSeed", seed},
                      {"outputDirectory", dir.string()},
                      {"toolVersion", kVersion},
                      {"wallClockSeconds", seconds}};
  const fs::path tmp = dir / "manifest.json.tmp";
  write_file(tmp, m.dump(2) + "\n");
  fs::rename(tmp, dir / "manifest.json");
}

nlohmann::json stats_json(const TrialStats& s) {
  nlohmann::json j = {{"completedPeople", s.completedPeople},
                      {"totalPeople", s.totalPeople},
                      {"totalEnergy", s.totalEnergy},
                      {"totalTimeTrip", s.totalTimeTrip},
                      {"timeSimulation", s.timeSimulation},
                      {"totalSmartLights", s.totalSmartLights}};
  if (s.totalPeople > 0 && s.timeSimulation > 0 && s.totalSmartLights > 0) {
    const auto f = compute_fitness(s);
    j["fitness"] = {{"pPeople", f.pPeople},
                    {"pEnergy", f.pEnergy},
                    {"pTrip", f.pTrip},
                    {"fitness", f.fitness}};
  }
  return j;
}

std::string rules_json_text(const RuleTable& t) { return rules_to_json(t).dump(2) + "\n"; }

struct EvolveArgs {
  std::string scenario;
  std::string config;
  std::string policy;
  std::string out;
};

int cmd_evolve(const EvolveArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  const Scenario sc = load_scenario(a.scenario);
  const GaConfig cfg = load_ga_config(a.config);
  DiscretizationPolicy policy = published_policy();
  if (!a.policy.empty()) {
    std::ifstream in(a.policy);
    if (!in) throw InputError("cannot read policy '" + a.policy + "'");
    try {
      policy = policy_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("policy parse error: ") + e.what());
    }
  }
  const fs::path dir = a.out;
  ensure_dir(dir);

  const auto result = evolve(sc, policy, cfg, [](int gen, const FitnessBreakdown& b) {
    std::cout << "generation " << gen << " best " << format_double(b.fitness) << " (people "
              << format_double(b.pPeople) << ", energy " << format_double(b.pEnergy)
              << ", trip " << format_double(b.pTrip) << ")\n";
  });

  std::string csv = "generation,bestFitness,pPeople,pEnergy,pTrip\n";
  for (std::size_t g = 0; g < result.perGenerationBest.size(); ++g) {
    const auto& b = result.perGenerationBest[g];
    csv += std::to_string(g) + "," + format_double(b.fitness) + "," + format_double(b.pPeople) +
           "," + format_double(b.pEnergy) + "," + format_double(b.pTrip) + "\n";
  }
  write_file(dir / "fitness.csv", csv);

  WeightBundle bundle;
  bundle.weights = result.bestGenome.decode();
  bundle.policy = policy;
  bundle.provenance = {cfg.masterSeed, cfg.digest(), sc.digest, result.bestGeneration,
                       result.bestFitness.fitness};
  write_file(dir / "best_genome.json", export_bundle(bundle));

  write_manifest(dir, "evolve",
                 {{"scenario", a.scenario}, {"config", a.config}, {"policy", a.policy}},
                 cfg.masterSeed, started);
  return 0;
}

struct SimulateArgs {
  std::string scenario;
  std::string bundle;
  std::uint64_t seed = 1;
  bool async = false;
  double jitter = 0.0;
  double loss = 0.0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  const Scenario sc = load_scenario(a.scenario);
  const WeightBundle b = load_bundle(a.bundle);
  const fs::path dir = a.out;
  ensure_dir(dir);

  std::ofstream log(dir / "trial.log", std::ios::binary);
  if (!log) throw InputError("cannot write trial log in '" + dir.string() + "'");
  TrialStats stats;
  if (a.async) {
    const AsyncConfig cfg{a.jitter, a.loss};
    const auto res = run_trial_async(sc, b.weights, b.policy, a.seed, cfg, stream_sink(log));
    stats = res.stats;
    const auto& r = res.report;
    auto hist = [](const OccupancyHistogram& h) {
      return nlohmann::json{{"off", h[0]}, {"dim", h[1]}, {"on", h[2]}, {"broken", h[3]}};
    };
    nlohmann::json d = {{"clockJitter", a.jitter},
                        {"messageLossRate", a.loss},
                        {"syncStats", stats_json(r.syncStats)},
                        {"asyncStats", stats_json(r.asyncStats)},
                        {"syncOccupancy", hist(r.syncOccupancy)},
                        {"asyncOccupancy", hist(r.asyncOccupancy)},
                        {"occupancyDistance", r.occupancyDistance},
                        {"syncRuleCount", r.syncRules.size()},
                        {"asyncRuleCount", r.asyncRules.size()},
                        {"asyncOnlyFrames", r.asyncOnlyFrames},
                        {"asyncRulesSubsetOfSync", r.asyncRulesSubsetOfSync},
                        {"deliveredMessages", r.deliveredMessages},
                        {"lostMessages", r.lostMessages}};
    write_file(dir / "divergence.json", d.dump(2) + "\n");
  } else {
    stats = run_trial(sc, b.weights, b.policy, a.seed, stream_sink(log));
  }
  log.close();
  write_file(dir / "summary.json", stats_json(stats).dump(2) + "\n");
  std::cout << "completed " << stats.completedPeople << "/" << stats.totalPeople << " energy "
            << format_double(stats.totalEnergy) << " trip " << format_double(stats.totalTimeTrip)
            << "\n";
  write_manifest(dir, "simulate",
                 {{"scenario", a.scenario},
                  {"bundle", a.bundle},
                  {"async", a.async},
                  {"clockJitter", a.jitter},
                  {"messageLossRate", a.loss}},
                 a.seed, started);
  return 0;
}

struct ExtractArgs {
  std::string bundle;
  std::string log;
  bool verify = false;
  bool search = false;
  std::string out;
};

int cmd_extract_rules(const ExtractArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  if (a.bundle.empty() && a.log.empty()) throw InputError("need --bundle and/or --log");
  if ((a.verify || a.search) && a.bundle.empty()) {
    throw InputError("--verify and --search need --bundle");
  }
  const fs::path dir = a.out;
  ensure_dir(dir);

  std::optional<WeightBundle> bundle;
  RuleTable lattice;
  if (!a.bundle.empty()) {
    bundle = load_bundle(a.bundle);
    lattice = enumerate_lattice(bundle->weights, bundle->policy);
  }
  RuleTable table = lattice;
  if (!a.log.empty()) {
    std::ifstream in(a.log);
    if (!in) throw InputError("cannot read log '" + a.log + "'");
    table = extract_from_logs(in);
  }
  write_file(dir / "rules.txt", format_rules(table));
  write_file(dir / "rules.json", rules_json_text(table));
  std::cout << table.records.size() << " rules\n";

  if (a.search) {
    const auto report = search_consistent_policy(bundle->weights, published_rules());
    write_file(dir / "policy_search.txt", format_search_report(report));
  }
  write_manifest(dir, "extract-rules",
                 {{"bundle", a.bundle}, {"log", a.log}, {"verify", a.verify}, {"search", a.search}},
                 bundle ? bundle->provenance.masterSeed : 0, started);
  if (a.verify && !a.log.empty() && !is_subset(table, lattice)) {
    throw VerificationError("log rule table is not a subset of the lattice table");
  }
  return 0;
}

int cmd_export(const std::string& bundlePath, const std::string& outPath) {
  const WeightBundle b = load_bundle(bundlePath);
  const std::string src = generate_controller_source(b);
  const fs::path out = outPath;
  if (out.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
  }
  write_file(out, src);
  std::cout << "wrote " << out.string() << "\n"
            << "parity check: compile it into a line-protocol harness, then run\n"
            << "  streetlight xcheck --bundle " << bundlePath << " --harness <harness>\n";
  return 0;
}

// Runs the harness over the 36 lattice frames and compares against forward+discretize.
int cmd_xcheck(const std::string& bundlePath, const std::string& harness) {
  const WeightBundle b = load_bundle(bundlePath);
  std::error_code ec;
  if (!fs::is_regular_file(harness, ec)) {
    throw InputError("harness executable '" + harness + "' not found");
  }
  const auto frames = lattice_frames();
  const fs::path tmp = fs::temp_directory_path() /
                       ("streetlight_xcheck_" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  const fs::path inPath = tmp / "frames.txt";
  const fs::path outPath = tmp / "responses.txt";
  {
    std::string frameText;
    for (const auto& f : frames) {
      frameText += format_double(f.previousListening) + " " + format_double(f.lightSensor) + " " +
                   format_double(f.motionSensor) + " " + format_double(f.wirelessReceiver) + "\n";
    }
    write_file(inPath, frameText);
  }
  const std::string cmd = "\"" + harness + "\" < \"" + inPath.string() + "\" > \"" +
                          outPath.string() + "\"";
  const int status = std::system(cmd.c_str());
  std::ifstream in(outPath);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  fs::remove_all(tmp, ec);
  if (status != 0) throw VerificationError("harness exited with status " + std::to_string(status));
  if (lines.size() != frames.size()) {
    throw VerificationError("harness answered " + std::to_string(lines.size()) + " of " +
                            std::to_string(frames.size()) + " frames");
  }
  int mismatches = 0;
  double worstRaw = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::istringstream ls(lines[i]);
    double d[3], r[3];
    if (!(ls >> d[0] >> d[1] >> d[2] >> r[0] >> r[1] >> r[2])) {
      throw VerificationError("unparsable harness response: '" + lines[i] + "'");
    }
    const RawOutputs raw = forward(b.weights, frames[i]);
    const ActuatorCommand cmdExpected = discretize(raw, b.policy);
    const ActuatorCommand got{d[0], d[1], d[2]};
    const double rawErr = std::max({std::abs(r[0] - raw.transmitter),
                                    std::abs(r[1] - raw.listening), std::abs(r[2] - raw.light)});
    worstRaw = std::max(worstRaw, rawErr);
    if (got != cmdExpected || rawErr > 1e-9) {
      ++mismatches;
      std::cerr << "frame " << i << " mismatch: harness '" << lines[i] << "'\n";
    }
  }
  std::cout << frames.size() - static_cast<std::size_t>(mismatches) << "/" << frames.size()
            << " frames match, worst raw deviation " << format_double(worstRaw) << "\n";
  if (mismatches > 0) throw VerificationError("transfer parity check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolve, audit and export street light controllers"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  EvolveArgs ev;
  ev.out = default_out_dir();
  auto* evolveCmd = app.add_subcommand("evolve", "Evolve controller weights with the GA");
  evolveCmd->add_option("--scenario", ev.scenario, "Scenario document")->required();
  evolveCmd->add_option("--config", ev.config, "GA config file")->required();
  evolveCmd->add_option("--policy", ev.policy, "Discretization policy JSON (optional)");
  evolveCmd->add_option("--out", ev.out, "Output directory");

  SimulateArgs sim;
  sim.out = default_out_dir();
  auto* simCmd = app.add_subcommand("simulate", "Run one seeded trial with a weight bundle");
  simCmd->add_option("--scenario", sim.scenario, "Scenario document")->required();
  simCmd->add_option("--bundle", sim.bundle, "Weight bundle")->required();
  simCmd->add_option("--seed", sim.seed, "Trial seed");
  simCmd->add_flag("--async", sim.async, "Asynchronous clocks and lossy radio");
  simCmd->add_option("--jitter", sim.jitter, "Clock jitter in [0, 1)");
  simCmd->add_option("--loss", sim.loss, "Message loss rate in [0, 1]");
  simCmd->add_option("--out", sim.out, "Output directory");

  ExtractArgs ex;
  ex.out = default_out_dir();
  auto* exCmd = app.add_subcommand("extract-rules", "Recover decision rules");
  exCmd->add_option("--bundle", ex.bundle, "Weight bundle (lattice enumeration)");
  exCmd->add_option("--log", ex.log, "Trial log");
  exCmd->add_flag("--verify", ex.verify, "Fail unless the log table is a subset of the lattice");
  exCmd->add_flag("--search", ex.search, "Search thresholds consistent with the published rules");
  exCmd->add_option("--out", ex.out, "Output directory");

  std::string exportBundle, exportOut;
  auto* exportCmd = app.add_subcommand("export", "Generate controller source from a bundle");
  exportCmd->add_option("--bundle", exportBundle, "Weight bundle")->required();
  exportCmd->add_option("--out", exportOut, "Output source path")->required();

  std::string xBundle, xHarness;
  auto* xCmd = app.add_subcommand("xcheck", "Check a compiled controller harness for parity");
  xCmd->add_option("--bundle", xBundle, "Weight bundle")->required();
  xCmd->add_option("--harness", xHarness, "Harness executable")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*evolveCmd) return cmd_evolve(ev);
    if (*simCmd) return cmd_simulate(sim);
    if (*exCmd) return cmd_extract_rules(ex);
    if (*exportCmd) return cmd_export(exportBundle, exportOut);
    if (*xCmd) return cmd_xcheck(xBundle, xHarness);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kExitVerify;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
