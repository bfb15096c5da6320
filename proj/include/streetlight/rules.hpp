#pragma once

// Explicit decision rules of a controller: full-frame input -> output records,
// either enumerated over the input lattice or recovered from trial logs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streetlight/controller.hpp"
#include "streetlight/error.hpp"
#include "streetlight/serialization.hpp"
#include "streetlight/world.hpp"

namespace streetlight {

struct RuleRecord {
  SensorFrame inputs;
  ActuatorCommand outputs;
  long support = 1;

  friend bool operator==(const RuleRecord&, const RuleRecord&) = default;
};

struct RuleTable {
  std::vector<RuleRecord> records;  // sorted by inputs, no duplicate frames
  std::optional<ControllerWeights> sourceWeights;
  std::optional<DiscretizationPolicy> policy;

  const RuleRecord* find(const SensorFrame& f) const {
    auto it = std::lower_bound(records.begin(), records.end(), f,
                               [](const RuleRecord& r, const SensorFrame& k) { return r.inputs < k; });
    if (it == records.end() || it->inputs != f) return nullptr;
    return &*it;
  }
};

// The four rules reported for the deployed controller.
inline std::vector<RuleRecord> published_rules() {
  return {
      {{1.0, 0.5, 0.0, 0.0}, {0.0, 1.0, 0.0}, 1},
      {{1.0, 0.5, 1.0, 0.0}, {0.0, 1.0, 0.5}, 1},
      {{0.0, 0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}, 1},
      {{1.0, 0.0, 0.0, 0.5}, {0.0, 1.0, 0.5}, 1},
  };
}

inline RuleTable enumerate_lattice(const ControllerWeights& w, const DiscretizationPolicy& p) {
  w.validate();
  p.validate();
  RuleTable t;
  t.sourceWeights = w;
  t.policy = p;
  for (const SensorFrame& f : lattice_frames()) {
    t.records.push_back({f, discretize(forward(w, f), p), 1});
  }
  std::sort(t.records.begin(), t.records.end(),
            [](const RuleRecord& a, const RuleRecord& b) { return a.inputs < b.inputs; });
  return t;
}

// Builds a table from world log lines. A frame seen with two different outputs
// means the logged controller was not a pure function of its inputs.
inline RuleTable extract_from_logs(std::istream& in) {
  std::map<SensorFrame, RuleRecord> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const LogRecord r = parse_log_line(line);
    auto [it, inserted] = seen.try_emplace(r.inputs, RuleRecord{r.inputs, r.outputs, 0});
    if (!inserted && it->second.outputs != r.outputs) {
      throw VerificationError("conflicting outputs for one input frame at log line: '" + line +
                              "'");
    }
    ++it->second.support;
  }
  RuleTable t;
  for (auto& [frame, rec] : seen) t.records.push_back(rec);
  return t;
}

// Every record of `sub` appears in `super` with identical outputs.
inline bool is_subset(const RuleTable& sub, const RuleTable& super) {
  return std::all_of(sub.records.begin(), sub.records.end(), [&](const RuleRecord& r) {
    const RuleRecord* m = super.find(r.inputs);
    return m != nullptr && m->outputs == r.outputs;
  });
}

namespace detail {

inline std::string level_text(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace detail

inline std::string format_rule(const RuleRecord& r) {
  using detail::level_text;
  return "(I_0=" + level_text(r.inputs.previousListening) + " ∧ I_1=" +
         level_text(r.inputs.lightSensor) + " ∧ I_2=" + level_text(r.inputs.motionSensor) +
         " ∧ I_3=" + level_text(r.inputs.wirelessReceiver) + ") ⇒ (Out_0 = " +
         level_text(r.outputs.wirelessTransmitter) + " ∧ Out_1 = " +
         level_text(r.outputs.listeningDecision) + " ∧ Out_2 = " +
         level_text(r.outputs.lightDecision) + ")";
}

inline std::string format_rules(const RuleTable& t) {
  std::vector<RuleRecord> sorted = t.records;
  std::sort(sorted.begin(), sorted.end(),
            [](const RuleRecord& a, const RuleRecord& b) { return a.inputs < b.inputs; });
  std::string out;
  for (const auto& r : sorted) out += format_rule(r) + "\n";
  return out;
}

inline nlohmann::json rules_to_json(const RuleTable& t) {
  nlohmann::json j;
  j["records"] = nlohmann::json::array();
  for (const auto& r : t.records) {
    const auto in = r.inputs.as_array();
    j["records"].push_back({{"inputs", in},
                            {"outputs",
                             {r.outputs.wirelessTransmitter, r.outputs.listeningDecision,
                              r.outputs.lightDecision}},
                            {"support", r.support}});
  }
  if (t.sourceWeights) j["weights"] = weights_to_json(*t.sourceWeights);
  if (t.policy) j["policy"] = policy_to_json(*t.policy);
  return j;
}

// ---------------------------------------------------------------------------
// Threshold search

struct Interval {
  double lo = 0.0;
  bool loClosed = false;
  double hi = 1.0;
  bool hiClosed = false;

  void raise_lo(double v, bool closed) {
    if (v > lo) {
      lo = v;
      loClosed = closed;
    } else if (v == lo) {
      loClosed = loClosed && closed;
    }
  }
  void lower_hi(double v, bool closed) {
    if (v < hi) {
      hi = v;
      hiClosed = closed;
    } else if (v == hi) {
      hiClosed = hiClosed && closed;
    }
  }
  bool empty() const { return lo > hi || (lo == hi && !(loClosed && hiClosed)); }
  bool contains(double x) const {
    return (loClosed ? x >= lo : x > lo) && (hiClosed ? x <= hi : x < hi);
  }
  // Grid point (1e-3 resolution) nearest the centre if it is feasible, else the centre.
  double pick() const {
    const double mid = 0.5 * (lo + hi);
    const double grid = std::round(mid * 1000.0) / 1000.0;
    return contains(grid) ? grid : mid;
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct RuleResidual {
  RuleRecord rule;
  RawOutputs raw;
  ActuatorCommand produced;  // under the reported (or best-effort) policy
  int mismatches = 0;
};

struct DirectionReport {
  ListeningDirection direction = ListeningDirection::HighIsOne;
  bool feasible = false;
  Interval lightLower, lightUpper;
  Interval transmitterLower, transmitterUpper;
  Interval listening;
  DiscretizationPolicy policy;  // feasible policy, or a best-effort one when infeasible
  std::vector<RuleResidual> residuals;
};

struct PolicySearchReport {
  bool found = false;
  std::optional<DiscretizationPolicy> policy;
  std::vector<RuleResidual> perRuleResiduals;
  std::array<DirectionReport, 2> directions;  // highIsOne, lowIsOne
};

namespace detail {

struct PairBounds {
  Interval lower, upper;
  bool feasible = false;
  ThresholdPair chosen;
};

inline PairBounds solve_pair(const std::vector<std::pair<double, double>>& rawDemand) {
  PairBounds b;
  for (auto [raw, demand] : rawDemand) {
    if (demand == 0.0) {
      b.lower.raise_lo(raw, true);
    } else if (demand == 0.5) {
      b.lower.lower_hi(raw, false);
      b.upper.raise_lo(raw, true);
    } else {
      b.upper.lower_hi(raw, false);
    }
  }
  // Couple through t1 < t2: the upper threshold must exceed every admissible t1.
  Interval upperEff = b.upper;
  if (b.lower.lo >= upperEff.lo) {
    upperEff.lo = b.lower.lo;
    upperEff.loClosed = false;
  }
  b.feasible = !b.lower.empty() && !upperEff.empty();
  if (b.feasible) {
    b.chosen.upper = upperEff.pick();
    Interval lowerEff = b.lower;
    lowerEff.lower_hi(b.chosen.upper, false);
    b.chosen.lower = lowerEff.pick();
  } else {
    double lo = std::clamp(0.5 * (b.lower.lo + b.lower.hi), 0.001, 0.998);
    double hi = std::clamp(0.5 * (b.upper.lo + b.upper.hi), lo + 0.001, 0.999);
    b.chosen = {lo, hi};
  }
  return b;
}

}  // namespace detail

inline DirectionReport search_direction(const std::vector<RawOutputs>& raws,
                                        const std::vector<RuleRecord>& rules,
                                        ListeningDirection dir) {
  DirectionReport rep;
  rep.direction = dir;
  std::vector<std::pair<double, double>> light, tx;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    light.emplace_back(raws[i].light, rules[i].outputs.lightDecision);
    tx.emplace_back(raws[i].transmitter, rules[i].outputs.wirelessTransmitter);
    const double r = raws[i].listening;
    const bool wantOne = rules[i].outputs.listeningDecision == 1.0;
    if (dir == ListeningDirection::HighIsOne) {
      if (wantOne) rep.listening.lower_hi(r, true);
      else rep.listening.raise_lo(r, false);
    } else {
      if (wantOne) rep.listening.raise_lo(r, true);
      else rep.listening.lower_hi(r, false);
    }
  }
  const auto lightB = detail::solve_pair(light);
  const auto txB = detail::solve_pair(tx);
  rep.lightLower = lightB.lower;
  rep.lightUpper = lightB.upper;
  rep.transmitterLower = txB.lower;
  rep.transmitterUpper = txB.upper;
  rep.feasible = lightB.feasible && txB.feasible && !rep.listening.empty();

  rep.policy.light = lightB.chosen;
  rep.policy.transmitter = txB.chosen;
  rep.policy.listeningDirection = dir;
  rep.policy.listeningThreshold =
      rep.listening.empty() ? std::clamp(0.5 * (rep.listening.lo + rep.listening.hi), 0.001, 0.999)
                            : rep.listening.pick();

  for (std::size_t i = 0; i < rules.size(); ++i) {
    RuleResidual res{rules[i], raws[i], discretize(raws[i], rep.policy), 0};
    res.mismatches = (res.produced.wirelessTransmitter != rules[i].outputs.wirelessTransmitter) +
                     (res.produced.listeningDecision != rules[i].outputs.listeningDecision) +
                     (res.produced.lightDecision != rules[i].outputs.lightDecision);
    rep.residuals.push_back(res);
  }
  return rep;
}

// Finds thresholds (and listening direction) under which every rule holds for
// the given weights. Feasibility depends only on the ordering of realized raw
// outputs against the thresholds, so it is decided exactly per interval.
inline PolicySearchReport search_consistent_policy(const ControllerWeights& w,
                                                   const std::vector<RuleRecord>& rules) {
  w.validate();
  std::vector<RawOutputs> raws;
  for (const auto& r : rules) {
    if (!r.inputs.on_lattice() || !r.outputs.on_lattice()) {
      throw InputError("published rule off the standard lattice");
    }
    raws.push_back(forward(w, r.inputs));
  }
  PolicySearchReport rep;
  rep.directions[0] = search_direction(raws, rules, ListeningDirection::HighIsOne);
  rep.directions[1] = search_direction(raws, rules, ListeningDirection::LowIsOne);
  const DirectionReport* chosen = nullptr;
  for (const auto& d : rep.directions) {
    if (d.feasible) {
      chosen = &d;
      break;
    }
  }
  if (chosen != nullptr) {
    rep.found = true;
    rep.policy = chosen->policy;
    rep.perRuleResiduals = chosen->residuals;
  } else {
    const auto& a = rep.directions[0];
    const auto& b = rep.directions[1];
    auto total = [](const DirectionReport& d) {
      int n = 0;
      for (const auto& r : d.residuals) n += r.mismatches;
      return n;
    };
    rep.perRuleResiduals = total(b) < total(a) ? b.residuals : a.residuals;
  }
  return rep;
}

inline std::string format_interval(const Interval& iv) {
  return std::string(iv.loClosed ? "[" : "(") + format_double(iv.lo) + ", " +
         format_double(iv.hi) + (iv.hiClosed ? "]" : ")");
}

inline std::string format_search_report(const PolicySearchReport& rep) {
  std::string out;
  out += std::string("found: ") + (rep.found ? "yes" : "no") + "\n";
  for (const auto& d : rep.directions) {
    out += "direction " + std::string(to_string(d.direction)) + ": " +
           (d.feasible ? "feasible" : "infeasible") + "\n";
    out += "  light t1 " + format_interval(d.lightLower) + "  t2 " + format_interval(d.lightUpper) +
           "\n";
    out += "  transmitter t1 " + format_interval(d.transmitterLower) + "  t2 " +
           format_interval(d.transmitterUpper) + "\n";
    out += "  listening " + format_interval(d.listening) + "\n";
    for (const auto& r : d.residuals) {
      out += "  " + format_rule(r.rule) + "  raw (" + format_double(r.raw.transmitter) + ", " +
             format_double(r.raw.listening) + ", " + format_double(r.raw.light) +
             ") mismatches " + std::to_string(r.mismatches) + "\n";
    }
  }
  return out;
}

}  // namespace streetlight
