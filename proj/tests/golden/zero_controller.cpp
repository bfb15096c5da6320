// Street light controller generated from an evolved weight bundle.
// masterSeed 3, generation 0, fitness 0
// gaConfig 0123456789abcdef, scenario fedcba9876543210

#include <math.h>

// Provided by the target runtime.
double readLightSensor();
double readMotionSensor();
double receiveWirelessData();
void sendWirelessData(double value);
void writeLed(double value);

double previousListeningDecision = 0;
double lightSensor = 0;
double motionSensor = 0;
double receivedSignal = 0;

double transmitterSignal = 0;
double listeningDecision = 0;
double lightDecision = 0;

double transmitterOutput = 0;
double listeningDecisionOutput = 0;
double lightDecisionOutput = 0;

const double threshold1 = 0.6;
const double threshold2 = 0.8;
const double transmitterThreshold1 = 0.6;
const double transmitterThreshold2 = 0.8;
const double listeningThreshold = 0.5;

double weightsH0[4] = { 0, 0, 0, 0 };
double weightsH1[4] = { 0, 0, 0, 0 };
double weightsTransmitterOutput[2] = { 0, 0 };
double weightslisteningDecision[2] = { 0, 0 };
double weightslightDecision[2] = { 0, 0 };

double sigmoid(double x) {
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
  if (listeningDecisionOutput >= listeningThreshold) {
    listeningDecision = 1.0;
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
