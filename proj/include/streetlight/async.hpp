#pragma once

// Asynchronous execution: every light wakes on its own drifting clock and
// messages between lights may be lost. Simulated deterministically inside one
// thread; wake-ups that share a timestamp are handled as one batch (all sense,
// then all act), so zero jitter and zero loss reproduce the synchronous trial.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "streetlight/controller.hpp"
#include "streetlight/scenario.hpp"
#include "streetlight/world.hpp"

namespace streetlight {

struct AsyncConfig {
  double clockJitter = 0.0;      // clock period drawn from 1 +/- jitter, phase from [0, jitter)
  double messageLossRate = 0.0;  // per delivered message

  void validate() const {
    if (!(clockJitter >= 0.0 && clockJitter < 1.0))
      throw InputError("clock jitter must lie in [0, 1)");
    if (!(messageLossRate >= 0.0 && messageLossRate <= 1.0))
      throw InputError("message loss rate must lie in [0, 1]");
  }
};

enum class LampState { Off = 0, Dim = 1, On = 2, Broken = 3 };
using OccupancyHistogram = std::array<long, 4>;

inline LampState lamp_state(const LightState& l, int tick) {
  if (l.lampBroken && l.brokenAtTick && tick >= *l.brokenAtTick) return LampState::Broken;
  if (l.lampLevel == 1.0) return LampState::On;
  if (l.lampLevel == 0.5) return LampState::Dim;
  return LampState::Off;
}

inline void record_occupancy(const WorldState& st, OccupancyHistogram& h) {
  for (const auto& l : st.lights) ++h[static_cast<std::size_t>(lamp_state(l, st.tick))];
}

using ExercisedRules = std::map<SensorFrame, ActuatorCommand>;

struct DivergenceReport {
  TrialStats syncStats;
  TrialStats asyncStats;
  OccupancyHistogram syncOccupancy{};
  OccupancyHistogram asyncOccupancy{};
  double occupancyDistance = 0.0;  // total variation between normalized histograms
  ExercisedRules syncRules;
  ExercisedRules asyncRules;
  std::size_t asyncOnlyFrames = 0;
  bool asyncRulesSubsetOfSync = true;
  long lostMessages = 0;
  long deliveredMessages = 0;
};

struct AsyncTrialResult {
  TrialStats stats;
  DivergenceReport report;
};

namespace detail {

struct WakeEvent {
  double time;
  std::size_t light;
  friend bool operator<(const WakeEvent& a, const WakeEvent& b) {
    return std::tie(a.time, a.light) < std::tie(b.time, b.light);
  }
};

inline double total_variation(const OccupancyHistogram& a, const OccupancyHistogram& b) {
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
  }
  if (na == 0 || nb == 0) return 0.0;
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d += std::abs(static_cast<double>(a[i]) / na - static_cast<double>(b[i]) / nb);
  return 0.5 * d;
}

}  // namespace detail

// Runs only the asynchronous trial; occupancy and exercised rules land in `report`.
inline TrialStats run_async_only(const Scenario& sc, const ControllerWeights& w,
                                 const DiscretizationPolicy& p, std::uint64_t seed,
                                 const AsyncConfig& cfg, DivergenceReport& report,
                                 const LogSink& sink = {}) {
  w.validate();
  p.validate();
  cfg.validate();
  WorldState st = initial_state(sc, seed);
  const std::size_t n = st.lights.size();
  std::mt19937_64 clockRng(mix_seed({seed, 0xC10CC10CULL}));
  std::mt19937_64 lossRng(mix_seed({seed, 0x1055ULL}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> period(n), nextWake(n);
  for (std::size_t i = 0; i < n; ++i) {
    period[i] = 1.0 + cfg.clockJitter * (2.0 * unit(clockRng) - 1.0);
    nextWake[i] = cfg.clockJitter * unit(clockRng);
  }
  std::vector<std::vector<double>> inbox(n);

  while (st.tick < sc.simulationTicks) {
    const double tickEnd = static_cast<double>(st.tick) + 1.0;
    std::set<detail::WakeEvent> queue;
    for (std::size_t i = 0; i < n; ++i) {
      for (double t = nextWake[i]; t < tickEnd; t += period[i]) queue.insert({t, i});
    }
    while (!queue.empty()) {
      const double batchTime = queue.begin()->time;
      std::vector<std::size_t> batch;
      while (!queue.empty() && queue.begin()->time == batchTime) {
        batch.push_back(queue.begin()->light);
        queue.erase(queue.begin());
      }
      std::vector<SensorFrame> frames;
      for (std::size_t i : batch) {
        SensorFrame f = sense_local(sc, st, i);
        if (f.previousListening == 1.0 && !inbox[i].empty()) {
          if (sc.aggregation == Aggregation::Max) {
            f.wirelessReceiver = *std::max_element(inbox[i].begin(), inbox[i].end());
          } else {
            std::uniform_int_distribution<std::size_t> pick(0, inbox[i].size() - 1);
            f.wirelessReceiver = inbox[i][pick(st.aggregationRng)];
          }
        }
        inbox[i].clear();
        frames.push_back(f);
      }
      for (std::size_t k = 0; k < batch.size(); ++k) {
        const std::size_t i = batch[k];
        const StepResult res = step(w, p, frames[k]);
        const LogRecord r = actuate(st, i, frames[k], res);
        report.asyncRules.emplace(frames[k], res.command);
        if (sink) sink(r);
        for (std::size_t nb : sc.neighbors[i]) {
          if (unit(lossRng) < cfg.messageLossRate) {
            ++report.lostMessages;
          } else {
            ++report.deliveredMessages;
            inbox[nb].push_back(res.command.wirelessTransmitter);
          }
        }
        nextWake[i] = batchTime + period[i];
      }
    }
    record_occupancy(st, report.asyncOccupancy);
    finish_tick(sc, st);
  }
  report.asyncStats = st.stats;
  return st.stats;
}

inline AsyncTrialResult run_trial_async(const Scenario& sc, const ControllerWeights& w,
                                        const DiscretizationPolicy& p, std::uint64_t seed,
                                        const AsyncConfig& cfg, const LogSink& sink = {}) {
  AsyncTrialResult out;
  DivergenceReport& rep = out.report;
  out.stats = run_async_only(sc, w, p, seed, cfg, rep, sink);

  WorldState st = initial_state(sc, seed);
  while (st.tick < sc.simulationTicks) {
    sense_and_act(sc, w, p, st,
                  [&rep](const LogRecord& r) { rep.syncRules.emplace(r.inputs, r.outputs); });
    record_occupancy(st, rep.syncOccupancy);
    finish_tick(sc, st);
  }
  rep.syncStats = st.stats;

  rep.occupancyDistance = detail::total_variation(rep.syncOccupancy, rep.asyncOccupancy);
  for (const auto& [frame, cmd] : rep.asyncRules) {
    if (!rep.syncRules.contains(frame)) ++rep.asyncOnlyFrames;
  }
  rep.asyncRulesSubsetOfSync = rep.asyncOnlyFrames == 0;
  return out;
}

}  // namespace streetlight
