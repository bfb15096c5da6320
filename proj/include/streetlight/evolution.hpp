#pragma once

// Elitist genetic algorithm over the 14 controller weights.

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "streetlight/controller.hpp"
#include "streetlight/error.hpp"
#include "streetlight/fitness.hpp"
#include "streetlight/scenario.hpp"
#include "streetlight/util.hpp"
#include "streetlight/world.hpp"

namespace streetlight {

struct Genome {
  std::array<double, ControllerWeights::kCount> genes{};

  ControllerWeights decode() const { return ControllerWeights::unflatten(genes); }
  static Genome encode(const ControllerWeights& w) { return Genome{w.flatten()}; }

  std::uint64_t content_hash() const {
    std::string bytes;
    for (double g : genes) {
      const auto bits = std::bit_cast<std::uint64_t>(g);
      for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
    return fnv1a64(bytes);
  }

  friend bool operator==(const Genome&, const Genome&) = default;
};

// Where per-trial seeds come from. GenomeHash keeps an elite's fitness identical
// across generations; Slot ties seeds to (generation, candidate index).
enum class SeedPolicy { GenomeHash, Slot };

struct GaConfig {
  int generations = 100;
  int populationSize = 50;
  int testsPerCandidate = 5;
  double mutationRate = 0.1;
  double mutationSigma = 0.3;
  double crossoverRate = 0.5;
  int eliteCount = 2;
  double weightLow = -2.0;
  double weightHigh = 2.0;
  std::uint64_t masterSeed = 1;
  SeedPolicy seedPolicy = SeedPolicy::GenomeHash;
  int workers = 0;  // 0 = hardware concurrency; does not affect results

  void validate() const {
    if (generations < 0) throw InputError("generations must be >= 0");
    if (populationSize < 2) throw InputError("populationSize must be >= 2");
    if (testsPerCandidate < 1) throw InputError("testsPerCandidate must be >= 1");
    if (!(mutationRate >= 0.0 && mutationRate <= 1.0))
      throw InputError("mutationRate must lie in [0, 1]");
    if (!(mutationSigma >= 0.0)) throw InputError("mutationSigma must be >= 0");
    if (!(crossoverRate >= 0.0 && crossoverRate <= 1.0))
      throw InputError("crossoverRate must lie in [0, 1]");
    if (eliteCount < 1 || eliteCount >= populationSize)
      throw InputError("eliteCount must satisfy 1 <= eliteCount < populationSize");
    if (!(weightLow < weightHigh)) throw InputError("weight range needs low < high");
    if (workers < 0) throw InputError("workers must be >= 0");
  }

  // Canonical text; also the digest input. `workers` is excluded because it
  // never changes results.
  std::string to_text() const {
    std::ostringstream os;
    os << "generations = " << generations << '\n'
       << "populationSize = " << populationSize << '\n'
       << "testsPerCandidate = " << testsPerCandidate << '\n'
       << "mutationRate = " << format_double(mutationRate) << '\n'
       << "mutationSigma = " << format_double(mutationSigma) << '\n'
       << "crossoverRate = " << format_double(crossoverRate) << '\n'
       << "eliteCount = " << eliteCount << '\n'
       << "weightRangeLow = " << format_double(weightLow) << '\n'
       << "weightRangeHigh = " << format_double(weightHigh) << '\n'
       << "masterSeed = " << masterSeed << '\n'
       << "seedPolicy = " << (seedPolicy == SeedPolicy::GenomeHash ? "genomeHash" : "slot")
       << '\n';
    return os.str();
  }

  std::string digest() const { return hex64(fnv1a64(to_text())); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T out{};
  is >> out;
  if (!is || !is.eof()) throw InputError("bad value for '" + key + "': '" + value + "'");
  return out;
}

}  // namespace detail

// Flat `key = value` document; '#' starts a comment. Unspecified keys keep defaults.
inline GaConfig parse_ga_config(std::istream& in) {
  GaConfig c;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(lineNo) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    using detail::parse_number;
    if (key == "generations") c.generations = parse_number<int>(key, value);
    else if (key == "populationSize") c.populationSize = parse_number<int>(key, value);
    else if (key == "testsPerCandidate") c.testsPerCandidate = parse_number<int>(key, value);
    else if (key == "mutationRate") c.mutationRate = parse_number<double>(key, value);
    else if (key == "mutationSigma") c.mutationSigma = parse_number<double>(key, value);
    else if (key == "crossoverRate") c.crossoverRate = parse_number<double>(key, value);
    else if (key == "eliteCount") c.eliteCount = parse_number<int>(key, value);
    else if (key == "weightRangeLow") c.weightLow = parse_number<double>(key, value);
    else if (key == "weightRangeHigh") c.weightHigh = parse_number<double>(key, value);
    else if (key == "masterSeed") c.masterSeed = parse_number<std::uint64_t>(key, value);
    else if (key == "workers") c.workers = parse_number<int>(key, value);
    else if (key == "seedPolicy") {
      if (value == "genomeHash") c.seedPolicy = SeedPolicy::GenomeHash;
      else if (value == "slot") c.seedPolicy = SeedPolicy::Slot;
      else throw InputError("seedPolicy must be genomeHash or slot");
    } else {
      throw InputError("config line " + std::to_string(lineNo) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

inline GaConfig load_ga_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read GA config '" + path + "'");
  return parse_ga_config(in);
}

inline std::uint64_t trial_seed(const GaConfig& cfg, const Genome& g, int generation,
                                int candidate, int trial) {
  if (cfg.seedPolicy == SeedPolicy::GenomeHash) {
    return mix_seed({cfg.masterSeed, g.content_hash(), static_cast<std::uint64_t>(trial)});
  }
  return mix_seed({cfg.masterSeed, static_cast<std::uint64_t>(generation),
                   static_cast<std::uint64_t>(candidate), static_cast<std::uint64_t>(trial)});
}

// Mean percentages over testsPerCandidate trials; fitness recombined from the means.
inline FitnessBreakdown evaluate_candidate(const Genome& g, const Scenario& sc,
                                          const DiscretizationPolicy& policy,
                                          const GaConfig& cfg, int generation, int candidate) {
  const ControllerWeights w = g.decode();
  double people = 0, energy = 0, trip = 0;
  for (int t = 0; t < cfg.testsPerCandidate; ++t) {
    const auto b =
        compute_fitness(run_trial(sc, w, policy, trial_seed(cfg, g, generation, candidate, t)));
    people += b.pPeople;
    energy += b.pEnergy;
    trip += b.pTrip;
  }
  const double n = cfg.testsPerCandidate;
  FitnessBreakdown mean{people / n, energy / n, trip / n, 0.0};
  mean.fitness = combine_fitness(mean.pPeople, mean.pTrip, mean.pEnergy);
  return mean;
}

struct EvolutionResult {
  Genome bestGenome;
  FitnessBreakdown bestFitness;
  int bestGeneration = 0;
  std::vector<FitnessBreakdown> perGenerationBest;
  std::vector<Genome> finalPopulation;
  std::vector<FitnessBreakdown> finalFitness;
};

using GenerationCallback = std::function<void(int generation, const FitnessBreakdown& best)>;

namespace detail {

inline std::vector<FitnessBreakdown> evaluate_population(const std::vector<Genome>& pop,
                                                         const Scenario& sc,
                                                         const DiscretizationPolicy& policy,
                                                         const GaConfig& cfg, int generation) {
  std::vector<FitnessBreakdown> out(pop.size());
  std::size_t workers = cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, pop.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failureMutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < pop.size(); i = next++) {
      try {
        out[i] = evaluate_candidate(pop[i], sc, policy, cfg, generation, static_cast<int>(i));
      } catch (...) {
        std::lock_guard lock(failureMutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Indices sorted by descending fitness; ties keep the lower index first.
inline std::vector<std::size_t> ranking(const std::vector<FitnessBreakdown>& fit) {
  std::vector<std::size_t> idx(fit.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return fit[a].fitness > fit[b].fitness; });
  return idx;
}

}  // namespace detail

inline Genome random_genome(std::mt19937_64& rng, const GaConfig& cfg) {
  std::uniform_real_distribution<double> u(cfg.weightLow, cfg.weightHigh);
  Genome g;
  for (double& v : g.genes) v = u(rng);
  return g;
}

// Runs max(1, generations) evaluated generations; generation 0 is the random
// initial population.
inline EvolutionResult evolve(const Scenario& sc, const DiscretizationPolicy& policy,
                              const GaConfig& cfg, const GenerationCallback& onGeneration = {}) {
  cfg.validate();
  policy.validate();
  std::mt19937_64 rng(mix_seed({cfg.masterSeed, 0x6A0E5ULL}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(cfg.populationSize) - 1);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<Genome> pop;
  for (int i = 0; i < cfg.populationSize; ++i) pop.push_back(random_genome(rng, cfg));

  EvolutionResult result;
  const int evaluated = std::max(1, cfg.generations);
  for (int gen = 0; gen < evaluated; ++gen) {
    const auto fit = detail::evaluate_population(pop, sc, policy, cfg, gen);
    const auto order = detail::ranking(fit);
    result.perGenerationBest.push_back(fit[order[0]]);
    if (onGeneration) onGeneration(gen, fit[order[0]]);

    if (gen + 1 == evaluated) {
      result.bestGenome = pop[order[0]];
      result.bestFitness = fit[order[0]];
      result.bestGeneration = gen;
      result.finalPopulation = pop;
      result.finalFitness = fit;
      break;
    }

    auto tournament = [&]() -> const Genome& {
      const std::size_t a = pick(rng);
      const std::size_t b = pick(rng);
      if (fit[b].fitness > fit[a].fitness) return pop[b];
      return pop[a];
    };

    std::vector<Genome> next;
    next.reserve(pop.size());
    for (int e = 0; e < cfg.eliteCount; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);
    while (next.size() < pop.size()) {
      const Genome& mother = tournament();
      const Genome& father = tournament();
      Genome child = mother;
      if (unit(rng) < cfg.crossoverRate) {
        for (std::size_t k = 0; k < child.genes.size(); ++k)
          if (unit(rng) < 0.5) child.genes[k] = father.genes[k];
      }
      for (double& v : child.genes) {
        if (unit(rng) < cfg.mutationRate) {
          v = std::clamp(v + cfg.mutationSigma * noise(rng), cfg.weightLow, cfg.weightHigh);
        }
      }
      next.push_back(child);
    }
    pop = std::move(next);
  }
  return result;
}

}  // namespace streetlight
