#pragma once

#include "streetlight/error.hpp"
#include "streetlight/world.hpp"

namespace streetlight {

struct FitnessBreakdown {
  double pPeople = 0.0;
  double pEnergy = 0.0;
  double pTrip = 0.0;
  double fitness = 0.0;

  friend bool operator==(const FitnessBreakdown&, const FitnessBreakdown&) = default;
};

inline double combine_fitness(double pPeople, double pTrip, double pEnergy) {
  return (1.0 * pPeople) - (0.6 * pTrip) - (0.4 * pEnergy);
}

// Completion, energy and trip percentages against their attainable maxima:
// 1.1 energy units per light per tick, 1.5 time units per person per tick.
inline FitnessBreakdown compute_fitness(const TrialStats& s) {
  if (s.totalPeople <= 0) throw InputError("fitness needs totalPeople > 0");
  if (s.timeSimulation <= 0) throw InputError("fitness needs timeSimulation > 0");
  if (s.totalSmartLights <= 0) throw InputError("fitness needs totalSmartLights > 0");
  const double completed = s.completedPeople;
  const double people = s.totalPeople;
  const double ticks = s.timeSimulation;
  const double lights = s.totalSmartLights;

  FitnessBreakdown b;
  b.pPeople = (completed * 100) / people;
  b.pEnergy = (s.totalEnergy * 100) / ((11 * (ticks * lights)) / 10);
  b.pTrip = (s.totalTimeTrip * 100) / (((3 * ticks) / 2) * people);
  b.fitness = combine_fitness(b.pPeople, b.pTrip, b.pEnergy);
  return b;
}

}  // namespace streetlight
