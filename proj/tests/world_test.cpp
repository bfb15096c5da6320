#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "streetlight/controller.hpp"
#include "streetlight/scenario.hpp"
#include "streetlight/world.hpp"
#include "test_support.hpp"

using namespace streetlight;
using test_support::line_scenario;
using test_support::prototype_scenario;
using test_support::run_logged;

namespace {

std::string minimal_doc(const std::string& nodes, const std::string& edges) {
  return "{\"nodes\":[" + nodes + "],\"edges\":[" + edges + "]}";
}

void expect_invariant_error(const std::string& doc, const std::string& fragment) {
  try {
    load_scenario_text(doc);
    FAIL() << "accepted invalid scenario";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Scenario, BundledNeighborhoodsLoad) {
  const auto a = prototype_scenario();
  EXPECT_EQ(a.light_count(), 18u);
  EXPECT_EQ(a.edges.size(), 34u);
  const auto b = test_support::second_scenario();
  EXPECT_EQ(b.light_count(), 12u);
  EXPECT_EQ(b.edges.size(), 19u);
  EXPECT_NE(a.digest, b.digest);
}

TEST(Scenario, RejectsStructuralViolations) {
  const std::string dep = "{\"id\":0,\"departure\":true}";
  const std::string dst = "{\"id\":1,\"destination\":true}";
  expect_invariant_error(minimal_doc(dep + "," + dst, "[0,7]"), "references a missing node");
  expect_invariant_error(minimal_doc(dep + "," + dst, "[0,1],[1,0]"), "duplicate edge");
  expect_invariant_error(minimal_doc(dep + "," + dst, "[0,1],[1,1]"), "self-loop");
  expect_invariant_error(minimal_doc(dep + "," + dst + ",{\"id\":2}", "[0,1]"), "not connected");
  expect_invariant_error(minimal_doc(dep + ",{\"id\":1,\"destination\":true,\"ambient\":0.3}",
                                     "[0,1]"),
                         "ambient");
  expect_invariant_error(minimal_doc(dep + ",{\"id\":1}", "[0,1]"), "no destination");
  expect_invariant_error(
      minimal_doc("{\"id\":0,\"departure\":true,\"destination\":true}," + dst, "[0,1]"),
      "both departure and destination");
  expect_invariant_error(minimal_doc(dep + ",{\"id\":0,\"destination\":true}", "[0,0]"),
                         "duplicate node id");
  EXPECT_THROW(load_scenario_text("{not json"), InputError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), InputError);
}

TEST(Scenario, ShortestPathsMatchBfsOracle) {
  const auto sc = prototype_scenario();
  for (std::size_t a = 0; a < sc.light_count(); ++a) {
    for (std::size_t b = 0; b < sc.light_count(); ++b) {
      const auto path = shortest_path(sc, a, b);
      ASSERT_FALSE(path.empty());
      EXPECT_EQ(path.front(), a);
      EXPECT_EQ(path.back(), b);
      EXPECT_EQ(static_cast<int>(path.size()) - 1, oracle::hop_distance(sc.neighbors, a, b));
      for (std::size_t k = 0; k + 1 < path.size(); ++k)
        EXPECT_TRUE(sc.edge_between(path[k], path[k + 1]).has_value());
    }
  }
}

TEST(LogLine, RoundTripsAndRejectsGarbage) {
  LogRecord r;
  r.tick = 17;
  r.nodeId = 4;
  r.inputs = {1.0, 0.5, 0.0, 0.5};
  r.outputs = {0.5, 1.0, 0.5};
  r.lampEmitted = 0.5;
  r.energyAccrued = 0.6;
  const std::string line = format_log_line(r);
  EXPECT_EQ(line, "17,4,1,0.5,0,0.5,0.5,1,0.5,0.5,0.6");
  const auto back = parse_log_line(line);
  EXPECT_EQ(back.inputs, r.inputs);
  EXPECT_EQ(back.outputs, r.outputs);
  EXPECT_EQ(back.energyAccrued, r.energyAccrued);
  EXPECT_THROW(parse_log_line("1,2,3"), InputError);
  EXPECT_THROW(parse_log_line("17,4,1,0.5,0,0.5,0.5,1,0.5,0.5,abc"), InputError);
  EXPECT_THROW(parse_log_line("17,4,0.7,0.5,0,0.5,0.5,1,0.5,0.5,0.6"), InputError);
}

TEST(Movement, MatchesWalkOracleUnderFixedLighting) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> level(0, 2);
  for (int round = 0; round < 200; ++round) {
    const auto sc = line_scenario(5);
    WorldState st = initial_state(sc, 1);
    for (auto& l : st.lights) l.lampLevel = 0.5 * level(rng);
    std::vector<double> intensity;
    for (std::size_t e = 0; e < sc.edges.size(); ++e)
      intensity.push_back(st.lights[e].lampLevel + st.lights[e + 1].lampLevel);
    const int ticks = 20;
    const auto expected = oracle::walk(intensity, sc.slowTimeFactor, ticks);
    for (int t = 0; t < ticks; ++t) {
      move_people(sc, st);
      ++st.tick;
    }
    const auto& p = st.people[0];
    EXPECT_EQ(p.completed, expected.completed);
    EXPECT_DOUBLE_EQ(p.accruedTripTime, expected.accrued);
    EXPECT_EQ(st.stats.completedPeople, expected.completed ? 1 : 0);
  }
}

TEST(Movement, EdgeIntensityAddsAmbientMeanAndBothLamps) {
  const auto sc = line_scenario(3, "0.5");
  WorldState st = initial_state(sc, 1);
  st.lights[0].lampLevel = 0.5;
  st.lights[1].lampLevel = 1.0;
  EXPECT_DOUBLE_EQ(edge_intensity(sc, st, 0), 2.0);
  st.lights[1].lampBroken = true;
  st.lights[1].brokenAtTick = 0;
  EXPECT_DOUBLE_EQ(edge_intensity(sc, st, 0), 1.0);
  EXPECT_THROW(edge_intensity(sc, st, 9), InputError);
}

TEST(Movement, RerouteAvoidsDarkEdge) {
  // Square 0-1-3 and 0-2-3; the 0-1 edge is dark, the other side lit.
  const std::string doc =
      "{\"nodes\":[{\"id\":0,\"departure\":true},{\"id\":1},{\"id\":2},"
      "{\"id\":3,\"destination\":true}],\"edges\":[[0,1],[1,3],[0,2],[2,3]],"
      "\"config\":{\"peopleCount\":1,\"brokenFraction\":0,\"reroute\":true}}";
  auto sc = load_scenario_text(doc);
  WorldState st = initial_state(sc, 1);
  ASSERT_EQ(st.people[0].route, (std::vector<std::size_t>{0, 1, 3}));
  st.lights[2].lampLevel = 1.0;
  st.lights[3].lampLevel = 1.0;
  for (int t = 0; t < 2; ++t) {
    move_people(sc, st);
    ++st.tick;
  }
  EXPECT_TRUE(st.people[0].completed);
  EXPECT_DOUBLE_EQ(st.people[0].accruedTripTime, 2.0);

  sc.reroute = false;
  WorldState stuck = initial_state(sc, 1);
  stuck.lights[2].lampLevel = 1.0;
  stuck.lights[3].lampLevel = 1.0;
  for (int t = 0; t < 2; ++t) {
    move_people(sc, stuck);
    ++stuck.tick;
  }
  EXPECT_FALSE(stuck.people[0].completed);
  EXPECT_DOUBLE_EQ(stuck.people[0].accruedTripTime, 2.0);
}

TEST(Sensing, MotionSeesNodeAndIncidentEdge) {
  const auto sc = line_scenario(4);
  WorldState st = initial_state(sc, 1);
  auto& p = st.people[0];
  EXPECT_EQ(sense_local(sc, st, 0).motionSensor, 1.0);
  EXPECT_EQ(sense_local(sc, st, 1).motionSensor, 0.0);
  p.progress = 0.5;  // between node 0 and node 1
  EXPECT_EQ(sense_local(sc, st, 0).motionSensor, 1.0);
  EXPECT_EQ(sense_local(sc, st, 1).motionSensor, 1.0);
  EXPECT_EQ(sense_local(sc, st, 2).motionSensor, 0.0);
  p.completed = true;
  EXPECT_EQ(sense_local(sc, st, 0).motionSensor, 0.0);
  EXPECT_THROW(sense_inputs(sc, st, 99), InputError);
}

TEST(Sensing, LightSensorAddsNeighborSpill) {
  const auto sc = line_scenario(3, "0.5");
  WorldState st = initial_state(sc, 1);
  st.tick = 1;
  EXPECT_EQ(sense_local(sc, st, 1).lightSensor, 0.5);
  st.lights[0].lampLevel = 1.0;  // 0.5 + 0.25 = 0.75: not above 0.75
  EXPECT_EQ(sense_local(sc, st, 1).lightSensor, 0.5);
  st.lights[2].lampLevel = 0.5;  // 0.875
  EXPECT_EQ(sense_local(sc, st, 1).lightSensor, 1.0);
  EXPECT_EQ(round_to_tri_level(0.25), 0.0);
  EXPECT_EQ(round_to_tri_level(0.26), 0.5);
}

TEST(Sensing, ReceiverGatedByListening) {
  const auto sc = line_scenario(3);
  WorldState st = initial_state(sc, 1);
  st.lights[0].lastTransmitted = 0.5;
  st.lights[2].lastTransmitted = 1.0;
  EXPECT_EQ(sense_inputs(sc, st, 1).wirelessReceiver, 0.0);
  st.lights[1].previousListening = 1.0;
  EXPECT_EQ(sense_inputs(sc, st, 1).wirelessReceiver, 1.0);
}

TEST(Sensing, RandomNeighborPicksSomeNeighbor) {
  auto sc = line_scenario(3);
  sc.aggregation = Aggregation::RandomNeighbor;
  WorldState st = initial_state(sc, 3);
  st.lights[0].lastTransmitted = 0.5;
  st.lights[2].lastTransmitted = 1.0;
  st.lights[1].previousListening = 1.0;
  std::set<double> seen;
  for (int i = 0; i < 64; ++i) seen.insert(sense_inputs(sc, st, 1).wirelessReceiver);
  EXPECT_EQ(seen, (std::set<double>{0.5, 1.0}));
}

TEST(Trial, InitialStateSchedulesBrokenLamps) {
  const auto sc = prototype_scenario();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto st = initial_state(sc, seed);
    int broken = 0;
    for (const auto& l : st.lights) {
      if (!l.lampBroken) continue;
      ++broken;
      ASSERT_TRUE(l.brokenAtTick.has_value());
      EXPECT_GE(*l.brokenAtTick, 0);
      EXPECT_LT(*l.brokenAtTick, sc.simulationTicks / 2);
    }
    EXPECT_EQ(broken, 4);  // round(0.2 * 18)
    for (const auto& p : st.people) {
      EXPECT_TRUE(sc.nodes[p.route.front()].departure);
      EXPECT_TRUE(sc.nodes[p.route.back()].destination);
    }
  }
}

TEST(Trial, DeterministicPerSeed) {
  const auto sc = prototype_scenario();
  TrialStats a, b, c;
  const auto la = run_logged(sc, published_weights(), published_policy(), 5, &a);
  const auto lb = run_logged(sc, published_weights(), published_policy(), 5, &b);
  run_logged(sc, published_weights(), published_policy(), 6, &c);
  EXPECT_EQ(a, b);
  ASSERT_EQ(la.size(), lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(format_log_line(la[i]), format_log_line(lb[i]));
  EXPECT_EQ(la.size(), sc.light_count() * static_cast<std::size_t>(sc.simulationTicks));
  EXPECT_EQ(a.timeSimulation, sc.simulationTicks);
}

TEST(Trial, PerTickInvariants) {
  const auto sc = prototype_scenario();
  const auto w = published_weights();
  const auto p = published_policy();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Trial trial(sc, w, p, seed);
    std::map<int, ActuatorCommand> previous;  // nodeId -> last tick's command
    int lastCompleted = 0;
    double lastEnergy = 0.0;
    while (!trial.finished()) {
      std::vector<LogRecord> records;
      trial.tick([&records](const LogRecord& r) { records.push_back(r); });
      const auto& st = trial.state();
      const int t = st.tick - 1;
      std::map<int, ActuatorCommand> current;
      for (const auto& r : records) current[r.nodeId] = r.outputs;
      for (const auto& r : records) {
        const std::size_t i = *sc.index_of(r.nodeId);
        const auto& light = st.lights[i];
        // one-cycle latency: the receiver sees what neighbors sent last tick
        double expectedRx = 0.0;
        if (r.inputs.previousListening == 1.0 && t > 0) {
          for (std::size_t n : sc.neighbors[i])
            expectedRx = std::max(expectedRx, previous.at(sc.nodes[n].id).wirelessTransmitter);
        }
        EXPECT_EQ(r.inputs.wirelessReceiver, expectedRx);
        const double prevListen = t > 0 ? previous.at(r.nodeId).listeningDecision : 0.0;
        EXPECT_EQ(r.inputs.previousListening, prevListen);
        if (light.lampBroken && t >= *light.brokenAtTick) EXPECT_EQ(r.lampEmitted, 0.0);
        else EXPECT_EQ(r.lampEmitted, r.outputs.lightDecision);
        EXPECT_LE(r.energyAccrued, 1.1);
      }
      int pending = 0, transit = 0;
      for (const auto& person : st.people) {
        if (person.completed) continue;
        if (person.active(st.tick)) ++transit;
        else ++pending;
        EXPECT_LE(person.accruedTripTime, 1.5 * st.tick);
      }
      EXPECT_EQ(st.stats.completedPeople + transit + pending, st.stats.totalPeople);
      EXPECT_GE(st.stats.completedPeople, lastCompleted);
      EXPECT_GE(st.stats.totalEnergy, lastEnergy);
      lastCompleted = st.stats.completedPeople;
      lastEnergy = st.stats.totalEnergy;
      previous = std::move(current);
    }
    EXPECT_LE(trial.state().stats.totalEnergy, 1.1 * sc.simulationTicks * sc.light_count());
    EXPECT_THROW(trial.tick(), InputError);
  }
}

TEST(Trial, SpawnIntervalStaggersPeople) {
  auto sc = prototype_scenario();
  sc.spawnInterval = 7;
  const auto st = initial_state(sc, 2);
  for (const auto& p : st.people) {
    EXPECT_EQ(p.spawnTick, p.id * 7);
    EXPECT_FALSE(p.active(p.spawnTick - 1));
    EXPECT_TRUE(p.active(p.spawnTick));
  }
}

TEST(Trial, EnergyAccrualMatchesLogSum) {
  const auto sc = prototype_scenario();
  TrialStats stats;
  const auto log = run_logged(sc, published_weights(), published_policy(), 9, &stats);
  double sum = 0.0;
  for (const auto& r : log) sum += r.energyAccrued;
  EXPECT_NEAR(stats.totalEnergy, sum, 1e-9);
}
