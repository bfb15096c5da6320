#pragma once

// Synchronous simulation of the neighborhood: every tick all lights sense the
// tick-start snapshot, step their controllers, actuate, then people move and
// energy/trip time accrue.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "streetlight/controller.hpp"
#include "streetlight/error.hpp"
#include "streetlight/scenario.hpp"
#include "streetlight/util.hpp"

namespace streetlight {

inline constexpr double kRadioCharge = 0.1;

struct LightState {
  int nodeId = 0;
  double lampLevel = 0.0;  // commanded level; see emission()
  bool lampBroken = false;
  std::optional<int> brokenAtTick;
  double previousListening = 0.0;
  double lastTransmitted = 0.0;
  bool radioActive = false;
};

// Brightness actually emitted during `tick`. Dead lamps emit nothing.
inline double emission(const LightState& l, int tick) {
  if (l.lampBroken && l.brokenAtTick && tick >= *l.brokenAtTick) return 0.0;
  return l.lampLevel;
}

struct PersonState {
  int id = 0;
  std::vector<std::size_t> route;  // node indices, departure first
  std::size_t leg = 0;             // index of the node last reached
  double progress = 0.0;           // along route[leg] -> route[leg + 1]
  double accruedTripTime = 0.0;
  bool completed = false;
  int spawnTick = 0;
  std::size_t spawnNode = 0;

  bool active(int tick) const { return !completed && tick >= spawnTick; }
  bool on_edge() const { return progress > 0.0; }
};

struct TrialStats {
  int completedPeople = 0;
  int totalPeople = 0;
  double totalEnergy = 0.0;
  double totalTimeTrip = 0.0;
  int timeSimulation = 0;
  int totalSmartLights = 0;

  friend bool operator==(const TrialStats&, const TrialStats&) = default;
};

struct WorldState {
  int tick = 0;
  std::vector<LightState> lights;
  std::vector<PersonState> people;
  TrialStats stats;
  std::mt19937_64 aggregationRng;
};

struct LogRecord {
  int tick = 0;
  int nodeId = 0;
  SensorFrame inputs;
  ActuatorCommand outputs;
  double lampEmitted = 0.0;
  double energyAccrued = 0.0;
};

using LogSink = std::function<void(const LogRecord&)>;

inline std::string format_log_line(const LogRecord& r) {
  std::string s = std::to_string(r.tick) + "," + std::to_string(r.nodeId);
  for (double v : r.inputs.as_array()) s += "," + format_double(v);
  s += "," + format_double(r.outputs.wirelessTransmitter);
  s += "," + format_double(r.outputs.listeningDecision);
  s += "," + format_double(r.outputs.lightDecision);
  s += "," + format_double(r.lampEmitted);
  s += "," + format_double(r.energyAccrued);
  return s;
}

inline LogRecord parse_log_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (fields.size() != 11) {
    throw InputError("malformed log line (expected 11 fields): '" + line + "'");
  }
  std::vector<double> v(11);
  for (std::size_t i = 0; i < 11; ++i) {
    try {
      std::size_t used = 0;
      v[i] = std::stod(fields[i], &used);
      while (used < fields[i].size() && fields[i][used] == ' ') ++used;
      if (used != fields[i].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError("malformed log line (bad number '" + fields[i] + "'): '" + line + "'");
    }
  }
  LogRecord r;
  r.tick = static_cast<int>(v[0]);
  r.nodeId = static_cast<int>(v[1]);
  r.inputs = {v[2], v[3], v[4], v[5]};
  r.outputs = {v[6], v[7], v[8]};
  r.lampEmitted = v[9];
  r.energyAccrued = v[10];
  if (!r.inputs.on_lattice() || !r.outputs.on_lattice()) {
    throw InputError("log line values off the sensor/actuator lattice: '" + line + "'");
  }
  return r;
}

inline LogSink stream_sink(std::ostream& out) {
  return [&out](const LogRecord& r) { out << format_log_line(r) << '\n'; };
}

// Mean ambient of both endpoints plus what both endpoint lamps emit at state.tick.
inline double edge_intensity(const Scenario& sc, const WorldState& st, std::size_t edge) {
  if (edge >= sc.edges.size()) throw InputError("unknown edge " + std::to_string(edge));
  const auto [a, b] = sc.edges[edge];
  const double ambient = 0.5 * (sc.nodes[a].ambient + sc.nodes[b].ambient);
  return ambient + emission(st.lights[a], st.tick) + emission(st.lights[b], st.tick);
}

inline double round_to_tri_level(double v) {
  if (v > 0.75) return 1.0;
  if (v > 0.25) return 0.5;
  return 0.0;
}

inline bool person_near(const WorldState& st, std::size_t node) {
  for (const auto& p : st.people) {
    if (!p.active(st.tick)) continue;
    const std::size_t here = p.route[p.leg];
    if (!p.on_edge()) {
      if (here == node) return true;
    } else if (here == node || p.route[p.leg + 1] == node) {
      return true;
    }
  }
  return false;
}

// I0, I1 and I2 for a light; the receiver input is left at 0.
inline SensorFrame sense_local(const Scenario& sc, const WorldState& st, std::size_t node) {
  SensorFrame f;
  f.previousListening = st.lights[node].previousListening;
  double spill = 0.0;
  for (std::size_t n : sc.neighbors[node]) spill += emission(st.lights[n], st.tick - 1);
  f.lightSensor = round_to_tri_level(sc.nodes[node].ambient + sc.spillFactor * spill);
  f.motionSensor = person_near(st, node) ? 1.0 : 0.0;
  return f;
}

inline SensorFrame sense_inputs(const Scenario& sc, WorldState& st, std::size_t node) {
  if (node >= sc.nodes.size()) throw InputError("unknown node index " + std::to_string(node));
  SensorFrame f = sense_local(sc, st, node);
  if (f.previousListening == 0.0) return f;
  const auto& nbrs = sc.neighbors[node];
  if (nbrs.empty()) return f;
  if (sc.aggregation == Aggregation::Max) {
    for (std::size_t n : nbrs)
      f.wirelessReceiver = std::max(f.wirelessReceiver, st.lights[n].lastTransmitted);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
    f.wirelessReceiver = st.lights[nbrs[pick(st.aggregationRng)]].lastTransmitted;
  }
  return f;
}

// Applies a controller decision to a light and returns its log record.
inline LogRecord actuate(WorldState& st, std::size_t node, const SensorFrame& in,
                         const StepResult& res) {
  LightState& l = st.lights[node];
  l.lampLevel = res.command.lightDecision;
  l.previousListening = res.nextPreviousListening;
  l.lastTransmitted = res.command.wirelessTransmitter;
  l.radioActive = in.previousListening == 1.0 || res.command.wirelessTransmitter != 0.0;
  LogRecord r;
  r.tick = st.tick;
  r.nodeId = l.nodeId;
  r.inputs = in;
  r.outputs = res.command;
  r.lampEmitted = emission(l, st.tick);
  r.energyAccrued = r.lampEmitted + (l.radioActive ? kRadioCharge : 0.0);
  return r;
}

inline void move_people(const Scenario& sc, WorldState& st) {
  for (auto& p : st.people) {
    if (!p.active(st.tick)) continue;
    auto intensity_between = [&](std::size_t u, std::size_t v) {
      return edge_intensity(sc, st, *sc.edge_between(u, v));
    };
    double intensity = intensity_between(p.route[p.leg], p.route[p.leg + 1]);
    if (intensity == 0.0 && sc.reroute && !p.on_edge()) {
      auto detour = shortest_path(sc, p.route[p.leg], p.route.back(),
                                  [&](std::size_t u, std::size_t v) {
                                    return intensity_between(u, v) > 0.0;
                                  });
      if (detour.size() >= 2) {
        p.route.resize(p.leg);
        p.route.insert(p.route.end(), detour.begin(), detour.end());
        intensity = intensity_between(p.route[p.leg], p.route[p.leg + 1]);
      }
    }
    if (intensity == 0.0) {
      p.accruedTripTime += 1.0;
      continue;
    }
    if (intensity < 1.0) {
      p.progress += 0.5;
      p.accruedTripTime += sc.slowTimeFactor;
    } else {
      p.progress += 1.0;
      p.accruedTripTime += 1.0;
    }
    if (p.progress >= 1.0) {
      ++p.leg;
      p.progress = 0.0;
      if (p.leg + 1 == p.route.size()) {
        p.completed = true;
        ++st.stats.completedPeople;
      }
    }
  }
}

inline void accrue_energy(const Scenario& sc, WorldState& st) {
  (void)sc;
  for (const auto& l : st.lights) {
    st.stats.totalEnergy += emission(l, st.tick) + (l.radioActive ? kRadioCharge : 0.0);
  }
}

inline void finish_tick(const Scenario& sc, WorldState& st) {
  move_people(sc, st);
  accrue_energy(sc, st);
  st.stats.totalTimeTrip = 0.0;
  for (const auto& p : st.people) st.stats.totalTimeTrip += p.accruedTripTime;
  ++st.tick;
  st.stats.timeSimulation = st.tick;
}

// Sense/decide/act half of a synchronous tick: everyone senses the same snapshot.
inline void sense_and_act(const Scenario& sc, const ControllerWeights& w,
                          const DiscretizationPolicy& p, WorldState& st, const LogSink& sink) {
  const std::size_t n = st.lights.size();
  std::vector<SensorFrame> frames(n);
  for (std::size_t i = 0; i < n; ++i) frames[i] = sense_inputs(sc, st, i);
  for (std::size_t i = 0; i < n; ++i) {
    const LogRecord r = actuate(st, i, frames[i], step(w, p, frames[i]));
    if (sink) sink(r);
  }
}

inline void tick(const Scenario& sc, const ControllerWeights& w, const DiscretizationPolicy& p,
                 WorldState& st, const LogSink& sink = {}) {
  if (st.tick >= sc.simulationTicks) throw InputError("trial already finished");
  sense_and_act(sc, w, p, st, sink);
  finish_tick(sc, st);
}

// Seeded initial state: broken-lamp schedule, routes and spawn ticks.
inline WorldState initial_state(const Scenario& sc, std::uint64_t seed) {
  WorldState st;
  std::mt19937_64 rng(mix_seed({seed, 0x5CE7A210ULL}));
  st.aggregationRng.seed(mix_seed({seed, 0xA66E6A7EULL}));

  st.lights.resize(sc.light_count());
  for (std::size_t i = 0; i < sc.light_count(); ++i) st.lights[i].nodeId = sc.nodes[i].id;

  const auto lights = static_cast<double>(sc.light_count());
  const auto brokenCount = static_cast<std::size_t>(std::llround(sc.brokenFraction * lights));
  std::vector<std::size_t> order(sc.light_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<int> failAt(0, std::max(1, sc.simulationTicks / 2) - 1);
  for (std::size_t k = 0; k < brokenCount; ++k) {
    LightState& l = st.lights[order[k]];
    l.lampBroken = true;
    l.brokenAtTick = failAt(rng);
  }

  std::uniform_int_distribution<std::size_t> pickDeparture(0, sc.departures.size() - 1);
  std::uniform_int_distribution<std::size_t> pickDestination(0, sc.destinations.size() - 1);
  for (int i = 0; i < sc.peopleCount; ++i) {
    PersonState p;
    p.id = i;
    p.spawnNode = sc.departures[pickDeparture(rng)];
    p.route = shortest_path(sc, p.spawnNode, sc.destinations[pickDestination(rng)]);
    p.spawnTick = i * sc.spawnInterval;
    st.people.push_back(std::move(p));
  }

  st.stats.totalPeople = sc.peopleCount;
  st.stats.totalSmartLights = static_cast<int>(sc.light_count());
  return st;
}

class Trial {
 public:
  Trial(const Scenario& sc, const ControllerWeights& w, const DiscretizationPolicy& p,
        std::uint64_t seed)
      : scenario_(sc), weights_(w), policy_(p), state_(initial_state(sc, seed)) {
    weights_.validate();
    policy_.validate();
  }

  bool finished() const { return state_.tick >= scenario_.simulationTicks; }
  const WorldState& state() const { return state_; }
  const Scenario& scenario() const { return scenario_; }

  void tick(const LogSink& sink = {}) { streetlight::tick(scenario_, weights_, policy_, state_, sink); }

  TrialStats run(const LogSink& sink = {}) {
    while (!finished()) tick(sink);
    return state_.stats;
  }

 private:
  const Scenario& scenario_;
  ControllerWeights weights_;
  DiscretizationPolicy policy_;
  WorldState state_;
};

inline TrialStats run_trial(const Scenario& sc, const ControllerWeights& w,
                            const DiscretizationPolicy& p, std::uint64_t seed,
                            const LogSink& sink = {}) {
  return Trial(sc, w, p, seed).run(sink);
}

}  // namespace streetlight
