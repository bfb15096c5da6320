#pragma once

// Fixed-topology controller of a single street light: four discretized inputs,
// two sigmoid hidden units, three sigmoid outputs, no biases. The listening
// output is fed back as the first input on the next cycle.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "streetlight/error.hpp"

namespace streetlight {

inline constexpr std::array<double, 2> kBinaryLevels{0.0, 1.0};
inline constexpr std::array<double, 3> kTriLevels{0.0, 0.5, 1.0};

inline bool is_binary_level(double v) { return v == 0.0 || v == 1.0; }
inline bool is_tri_level(double v) { return v == 0.0 || v == 0.5 || v == 1.0; }

struct ControllerWeights {
  std::array<double, 4> hidden0{};
  std::array<double, 4> hidden1{};
  std::array<double, 2> outTransmitter{};
  std::array<double, 2> outListening{};
  std::array<double, 2> outLight{};

  static constexpr std::size_t kCount = 14;

  // Flat order: hidden0, hidden1, outTransmitter, outListening, outLight.
  std::array<double, kCount> flatten() const {
    std::array<double, kCount> out{};
    std::size_t i = 0;
    for (double w : hidden0) out[i++] = w;
    for (double w : hidden1) out[i++] = w;
    for (double w : outTransmitter) out[i++] = w;
    for (double w : outListening) out[i++] = w;
    for (double w : outLight) out[i++] = w;
    return out;
  }

  static ControllerWeights unflatten(std::span<const double> genes) {
    if (genes.size() != kCount) {
      throw InputError("controller weights need exactly 14 values, got " +
                       std::to_string(genes.size()));
    }
    ControllerWeights w;
    std::size_t i = 0;
    for (double& v : w.hidden0) v = genes[i++];
    for (double& v : w.hidden1) v = genes[i++];
    for (double& v : w.outTransmitter) v = genes[i++];
    for (double& v : w.outListening) v = genes[i++];
    for (double& v : w.outLight) v = genes[i++];
    return w;
  }

  void validate() const {
    for (double v : flatten()) {
      if (!std::isfinite(v)) throw InputError("controller weight is not finite");
    }
  }

  void validate(double lo, double hi) const {
    validate();
    for (double v : flatten()) {
      if (v < lo || v > hi) {
        throw InputError("controller weight " + std::to_string(v) + " outside weight range");
      }
    }
  }

  friend bool operator==(const ControllerWeights&, const ControllerWeights&) = default;
};

// Weights of the controller deployed on the prototype lights.
inline ControllerWeights published_weights() {
  ControllerWeights w;
  w.hidden0 = {1.2, -0.8, 1.6, -0.5};
  w.hidden1 = {1.6, -0.8, 1.5, -0.3};
  w.outTransmitter = {-0.6, -0.2};
  w.outListening = {-0.9, -0.7};
  w.outLight = {1.7, -0.4};
  return w;
}

struct SensorFrame {
  double previousListening = 0.0;  // I0 in {0, 1}
  double lightSensor = 0.0;        // I1 in {0, 0.5, 1}
  double motionSensor = 0.0;       // I2 in {0, 1}
  double wirelessReceiver = 0.0;   // I3 in {0, 0.5, 1}

  std::array<double, 4> as_array() const {
    return {previousListening, lightSensor, motionSensor, wirelessReceiver};
  }

  bool on_lattice() const {
    return is_binary_level(previousListening) && is_tri_level(lightSensor) &&
           is_binary_level(motionSensor) && is_tri_level(wirelessReceiver);
  }

  friend auto operator<=>(const SensorFrame&, const SensorFrame&) = default;
};

struct RawOutputs {
  double transmitter = 0.5;
  double listening = 0.5;
  double light = 0.5;

  friend bool operator==(const RawOutputs&, const RawOutputs&) = default;
};

struct ActuatorCommand {
  double wirelessTransmitter = 0.0;  // Out0 in {0, 0.5, 1}
  double listeningDecision = 0.0;    // Out1 in {0, 1}
  double lightDecision = 0.0;        // Out2 in {0, 0.5, 1}: OFF / DIM / ON

  bool on_lattice() const {
    return is_tri_level(wirelessTransmitter) && is_binary_level(listeningDecision) &&
           is_tri_level(lightDecision);
  }

  friend auto operator<=>(const ActuatorCommand&, const ActuatorCommand&) = default;
};

enum class ListeningDirection { HighIsOne, LowIsOne };

inline std::string_view to_string(ListeningDirection d) {
  return d == ListeningDirection::HighIsOne ? "highIsOne" : "lowIsOne";
}

inline ListeningDirection parse_listening_direction(std::string_view s) {
  if (s == "highIsOne") return ListeningDirection::HighIsOne;
  if (s == "lowIsOne") return ListeningDirection::LowIsOne;
  throw InputError("unknown listening direction '" + std::string(s) + "'");
}

struct ThresholdPair {
  double lower = 0.6;
  double upper = 0.8;

  friend bool operator==(const ThresholdPair&, const ThresholdPair&) = default;
};

struct DiscretizationPolicy {
  ThresholdPair light{0.6, 0.8};
  ThresholdPair transmitter{0.6, 0.8};
  double listeningThreshold = 0.5;
  ListeningDirection listeningDirection = ListeningDirection::HighIsOne;

  void validate() const {
    auto check_pair = [](const ThresholdPair& p, const char* name) {
      if (!(0.0 < p.lower && p.lower < p.upper && p.upper < 1.0)) {
        throw InputError(std::string(name) + " thresholds must satisfy 0 < t1 < t2 < 1");
      }
    };
    check_pair(light, "light");
    check_pair(transmitter, "transmitter");
    if (!(0.0 < listeningThreshold && listeningThreshold < 1.0)) {
      throw InputError("listening threshold must lie in (0, 1)");
    }
  }

  friend bool operator==(const DiscretizationPolicy&, const DiscretizationPolicy&) = default;
};

// Fallback ladder used when no rule set constrains the thresholds.
inline DiscretizationPolicy fallback_policy() { return DiscretizationPolicy{}; }

// Representative thresholds found by search_consistent_policy() for the published
// weights and the four published rules (1e-3 grid points nearest the centre of each
// feasible interval). tests/rules_test.cpp re-derives these values.
inline DiscretizationPolicy published_policy() {
  DiscretizationPolicy p;
  p.light = {0.708, 0.883};
  p.transmitter = {0.382, 0.701};
  p.listeningThreshold = 0.274;
  p.listeningDirection = ListeningDirection::LowIsOne;
  return p;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// (H0, H1) for a frame.
inline std::array<double, 2> hidden_activations(const ControllerWeights& w, const SensorFrame& s) {
  const auto in = s.as_array();
  auto hidden = [&in](const std::array<double, 4>& wh) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) sum += in[i] * wh[i];
    return sigmoid(sum);
  };
  return {hidden(w.hidden0), hidden(w.hidden1)};
}

inline RawOutputs forward(const ControllerWeights& w, const SensorFrame& s) {
  const auto h = hidden_activations(w, s);
  const double h0 = h[0];
  const double h1 = h[1];
  auto output = [h0, h1](const std::array<double, 2>& wo) {
    return sigmoid(h0 * wo[0] + h1 * wo[1]);
  };
  return {output(w.outTransmitter), output(w.outListening), output(w.outLight)};
}

inline double tri_level(double raw, const ThresholdPair& t) {
  if (raw > t.upper) return 1.0;
  if (raw > t.lower) return 0.5;
  return 0.0;
}

// Ties at the listening threshold go to the "1" side in both directions.
inline double listening_level(double raw, const DiscretizationPolicy& p) {
  if (p.listeningDirection == ListeningDirection::HighIsOne) {
    return raw >= p.listeningThreshold ? 1.0 : 0.0;
  }
  return raw <= p.listeningThreshold ? 1.0 : 0.0;
}

inline ActuatorCommand discretize(const RawOutputs& r, const DiscretizationPolicy& p) {
  return {tri_level(r.transmitter, p.transmitter), listening_level(r.listening, p),
          tri_level(r.light, p.light)};
}

struct StepResult {
  ActuatorCommand command;
  double nextPreviousListening = 0.0;
};

inline StepResult step(const ControllerWeights& w, const DiscretizationPolicy& p,
                       const SensorFrame& s) {
  const ActuatorCommand cmd = discretize(forward(w, s), p);
  return {cmd, cmd.listeningDecision};
}

inline constexpr std::size_t kLatticeSize = 36;

// All 2*3*2*3 input frames, I0 slowest and I3 fastest.
inline std::array<SensorFrame, kLatticeSize> lattice_frames() {
  std::array<SensorFrame, kLatticeSize> out{};
  std::size_t i = 0;
  for (double i0 : kBinaryLevels)
    for (double i1 : kTriLevels)
      for (double i2 : kBinaryLevels)
        for (double i3 : kTriLevels) out[i++] = SensorFrame{i0, i1, i2, i3};
  return out;
}

}  // namespace streetlight
