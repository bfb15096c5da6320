#pragma once

// Emits a self-contained controller source file in the style of the Arduino
// sketches the lights run: globals for sensor readings and decisions, inline
// weight arrays, a threshold ladder, and a collect/decide/enforce skeleton.
// Sensor and actuator functions are declared but left to the target runtime.

#include <array>
#include <cstddef>
#include <string>

#include "streetlight/bundle.hpp"
#include "streetlight/controller.hpp"
#include "streetlight/util.hpp"

namespace streetlight {

namespace detail {

template <std::size_t N>
std::string array_literal(const std::array<double, N>& values) {
  std::string s = "{ ";
  for (std::size_t i = 0; i < N; ++i) {
    if (i > 0) s += ", ";
    s += format_double(values[i]);
  }
  return s + " }";
}

}  // namespace detail

inline std::string generate_controller_source(const WeightBundle& bundle) {
  bundle.validate();
  const auto& w = bundle.weights;
  const auto& p = bundle.policy;
  const auto& prov = bundle.provenance;
  using detail::array_literal;

  const std::string listeningTest = p.listeningDirection == ListeningDirection::HighIsOne
                                        ? "listeningDecisionOutput >= listeningThreshold"
                                        : "listeningDecisionOutput <= listeningThreshold";

  std::string s;
  s += "// Street light controller generated from an evolved weight bundle.\n";
  s += "// masterSeed " + std::to_string(prov.masterSeed) + ", generation " +
       std::to_string(prov.generation) + ", fitness " + format_double(prov.fitness) + "\n";
  s += "// gaConfig " + prov.gaConfigDigest + ", scenario " + prov.scenarioDigest + "\n";
  s += "\n#include <math.h>\n\n";
  s += "// Provided by the target runtime.\n";
  s += "double readLightSensor();\n";
  s += "double readMotionSensor();\n";
  s += "double receiveWirelessData();\n";
  s += "void sendWirelessData(double value);\n";
  s += "void writeLed(double value);\n\n";

  s += "double previousListeningDecision = 0;\n";
  s += "double lightSensor = 0;\n";
  s += "double motionSensor = 0;\n";
  s += "double receivedSignal = 0;\n\n";
  s += "double transmitterSignal = 0;\n";
  s += "double listeningDecision = 0;\n";
  s += "double lightDecision = 0;\n\n";
  s += "double transmitterOutput = 0;\n";
  s += "double listeningDecisionOutput = 0;\n";
  s += "double lightDecisionOutput = 0;\n\n";

  s += "const double threshold1 = " + format_double(p.light.lower) + ";\n";
  s += "const double threshold2 = " + format_double(p.light.upper) + ";\n";
  s += "const double transmitterThreshold1 = " + format_double(p.transmitter.lower) + ";\n";
  s += "const double transmitterThreshold2 = " + format_double(p.transmitter.upper) + ";\n";
  s += "const double listeningThreshold = " + format_double(p.listeningThreshold) + ";\n\n";

  s += "double weightsH0[4] = " + array_literal(w.hidden0) + ";\n";
  s += "double weightsH1[4] = " + array_literal(w.hidden1) + ";\n";
  s += "double weightsTransmitterOutput[2] = " + array_literal(w.outTransmitter) + ";\n";
  s += "double weightslisteningDecision[2] = " + array_literal(w.outListening) + ";\n";
  s += "double weightslightDecision[2] = " + array_literal(w.outLight) + ";\n\n";

  s += R"(double sigmoid(double x) {
  return 1.0 / (1.0 + exp(-x));
}

double calculateHiddenUnitOutput(const double weights[4]) {
  double sum = 0.0;
  sum += previousListeningDecision * weights[0];
  sum += lightSensor * weights[1];
  sum += motionSensor * weights[2];
  sum += receivedSignal * weights[3];
  return sigmoid(sum);
}

double calculateOutputDecisions(const double weights[2], double H0, double H1) {
  return sigmoid(H0 * weights[0] + H1 * weights[1]);
}

double triLevel(double output, double lower, double upper) {
  if (output > upper) {
    return 1.0;
  }
  if (output > lower) {
    return 0.5;
  }
  return 0.0;
}

void getInputs() {
  lightSensor = readLightSensor();
  motionSensor = readMotionSensor();
  previousListeningDecision = listeningDecision;
  if (listeningDecision == 1) {
    receivedSignal = receiveWirelessData();
  } else {
    receivedSignal = 0;
  }
}

void makeDecisions() {
  double H0 = calculateHiddenUnitOutput(weightsH0);
  double H1 = calculateHiddenUnitOutput(weightsH1);

  transmitterOutput = calculateOutputDecisions(weightsTransmitterOutput, H0, H1);
  transmitterSignal = triLevel(transmitterOutput, transmitterThreshold1, transmitterThreshold2);

  listeningDecisionOutput = calculateOutputDecisions(weightslisteningDecision, H0, H1);
)";
  s += "  if (" + listeningTest + ") {\n";
  s += R"(    listeningDecision = 1.0;
  } else {
    listeningDecision = 0.0;
  }

  lightDecisionOutput = calculateOutputDecisions(weightslightDecision, H0, H1);
  lightDecision = triLevel(lightDecisionOutput, threshold1, threshold2);
}

void setOutputs() {
  sendWirelessData(transmitterSignal);
  writeLed(lightDecision);
}

void controllerLoop() {
  getInputs();
  makeDecisions();
  setOutputs();
}
)";
  return s;
}

}  // namespace streetlight
