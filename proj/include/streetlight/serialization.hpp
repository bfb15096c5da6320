#pragma once

// JSON forms of controller weights and discretization policies.

#include <array>
#include <cstddef>
#include <string>

#include <json.hpp>

#include "streetlight/controller.hpp"
#include "streetlight/error.hpp"

namespace streetlight {

inline nlohmann::json weights_to_json(const ControllerWeights& w) {
  return {{"hidden0", w.hidden0},
          {"hidden1", w.hidden1},
          {"outTransmitter", w.outTransmitter},
          {"outListening", w.outListening},
          {"outLight", w.outLight}};
}

namespace detail {

template <std::size_t N>
std::array<double, N> number_array(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != N) {
    throw InputError(std::string("field '") + key + "' must be an array of " + std::to_string(N) +
                     " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!a[i].is_number()) throw InputError(std::string("field '") + key + "' holds a non-number");
    out[i] = a[i].get<double>();
  }
  return out;
}

}  // namespace detail

inline ControllerWeights weights_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("weights must be an object");
  ControllerWeights w;
  w.hidden0 = detail::number_array<4>(j, "hidden0");
  w.hidden1 = detail::number_array<4>(j, "hidden1");
  w.outTransmitter = detail::number_array<2>(j, "outTransmitter");
  w.outListening = detail::number_array<2>(j, "outListening");
  w.outLight = detail::number_array<2>(j, "outLight");
  w.validate();
  return w;
}

inline nlohmann::json policy_to_json(const DiscretizationPolicy& p) {
  return {{"lightThresholds", {p.light.lower, p.light.upper}},
          {"transmitterThresholds", {p.transmitter.lower, p.transmitter.upper}},
          {"listeningThreshold", p.listeningThreshold},
          {"listeningDirection", std::string(to_string(p.listeningDirection))}};
}

inline DiscretizationPolicy policy_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("policy must be an object");
  DiscretizationPolicy p;
  const auto light = detail::number_array<2>(j, "lightThresholds");
  const auto tx = detail::number_array<2>(j, "transmitterThresholds");
  p.light = {light[0], light[1]};
  p.transmitter = {tx[0], tx[1]};
  if (!j.contains("listeningThreshold") || !j.at("listeningThreshold").is_number())
    throw InputError("policy needs a numeric 'listeningThreshold'");
  p.listeningThreshold = j.at("listeningThreshold").get<double>();
  if (!j.contains("listeningDirection") || !j.at("listeningDirection").is_string())
    throw InputError("policy needs a 'listeningDirection' string");
  p.listeningDirection = parse_listening_direction(j.at("listeningDirection").get<std::string>());
  p.validate();
  return p;
}

}  // namespace streetlight
