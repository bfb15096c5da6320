#pragma once

// Weight bundles: an evolved controller plus its discretization policy and the
// provenance needed to reproduce it.

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "streetlight/controller.hpp"
#include "streetlight/error.hpp"
#include "streetlight/serialization.hpp"

namespace streetlight {

struct Provenance {
  std::uint64_t masterSeed = 0;
  std::string gaConfigDigest;
  std::string scenarioDigest;
  int generation = 0;
  double fitness = 0.0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct WeightBundle {
  ControllerWeights weights;
  DiscretizationPolicy policy;
  Provenance provenance;

  void validate() const {
    weights.validate();
    policy.validate();
    if (provenance.gaConfigDigest.empty() || provenance.scenarioDigest.empty()) {
      throw InputError("bundle provenance digests must be present");
    }
  }

  friend bool operator==(const WeightBundle&, const WeightBundle&) = default;
};

inline nlohmann::json bundle_to_json(const WeightBundle& b) {
  return {{"weights", weights_to_json(b.weights)},
          {"policy", policy_to_json(b.policy)},
          {"provenance",
           {{"masterSeed", b.provenance.masterSeed},
            {"gaConfigDigest", b.provenance.gaConfigDigest},
            {"scenarioDigest", b.provenance.scenarioDigest},
            {"generation", b.provenance.generation},
            {"fitness", b.provenance.fitness}}}};
}

inline WeightBundle bundle_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("bundle document must be an object");
  for (const char* key : {"weights", "policy", "provenance"}) {
    if (!j.contains(key)) throw InputError(std::string("bundle missing '") + key + "'");
  }
  WeightBundle b;
  b.weights = weights_from_json(j.at("weights"));
  b.policy = policy_from_json(j.at("policy"));
  const auto& p = j.at("provenance");
  try {
    b.provenance.masterSeed = p.at("masterSeed").get<std::uint64_t>();
    b.provenance.gaConfigDigest = p.at("gaConfigDigest").get<std::string>();
    b.provenance.scenarioDigest = p.at("scenarioDigest").get<std::string>();
    b.provenance.generation = p.at("generation").get<int>();
    b.provenance.fitness = p.at("fitness").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bundle provenance malformed: ") + e.what());
  }
  b.validate();
  return b;
}

inline WeightBundle import_bundle(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("bundle parse error: ") + e.what());
  }
  return bundle_from_json(j);
}

namespace detail {

inline bool bit_identical(const WeightBundle& a, const WeightBundle& b) {
  auto same = [](double x, double y) {
    return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
  };
  const auto wa = a.weights.flatten();
  const auto wb = b.weights.flatten();
  for (std::size_t i = 0; i < wa.size(); ++i)
    if (!same(wa[i], wb[i])) return false;
  return same(a.policy.light.lower, b.policy.light.lower) &&
         same(a.policy.light.upper, b.policy.light.upper) &&
         same(a.policy.transmitter.lower, b.policy.transmitter.lower) &&
         same(a.policy.transmitter.upper, b.policy.transmitter.upper) &&
         same(a.policy.listeningThreshold, b.policy.listeningThreshold) &&
         a.policy.listeningDirection == b.policy.listeningDirection &&
         same(a.provenance.fitness, b.provenance.fitness) &&
         a.provenance.masterSeed == b.provenance.masterSeed &&
         a.provenance.gaConfigDigest == b.provenance.gaConfigDigest &&
         a.provenance.scenarioDigest == b.provenance.scenarioDigest &&
         a.provenance.generation == b.provenance.generation;
}

}  // namespace detail

// Serializes and re-imports to prove the document is lossless.
inline std::string export_bundle(const WeightBundle& b) {
  b.validate();
  const std::string text = bundle_to_json(b).dump(2) + "\n";
  if (!detail::bit_identical(import_bundle(text), b)) {
    throw VerificationError("bundle export lost precision on round-trip");
  }
  return text;
}

inline WeightBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read bundle '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return import_bundle(ss.str());
}

}  // namespace streetlight
