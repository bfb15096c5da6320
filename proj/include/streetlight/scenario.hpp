#pragma once

// Neighborhood graph the lights live on. Each node is one street light.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "streetlight/controller.hpp"
#include "streetlight/error.hpp"
#include "streetlight/util.hpp"

namespace streetlight {

enum class Aggregation { Max, RandomNeighbor };

struct ScenarioNode {
  int id = 0;
  double ambient = 0.0;  // {0, 0.5, 1}
  bool departure = false;
  bool destination = false;
};

struct Scenario {
  std::string name;
  std::vector<ScenarioNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // node indices, first < second
  int peopleCount = 10;
  double brokenFraction = 0.2;
  int simulationTicks = 200;
  double slowTimeFactor = 1.5;
  // Fraction of each neighbor lamp's brightness seen by a light sensor.
  double spillFactor = 0.25;
  Aggregation aggregation = Aggregation::Max;
  bool reroute = false;
  int spawnInterval = 0;  // ticks between successive spawns; 0 spawns everyone at tick 0

  // Derived; filled by finalize().
  std::vector<std::vector<std::size_t>> neighbors;       // sorted
  std::vector<std::vector<std::size_t>> incidentEdges;
  std::vector<std::size_t> departures;
  std::vector<std::size_t> destinations;
  std::string digest;

  std::size_t light_count() const { return nodes.size(); }

  std::optional<std::size_t> index_of(int nodeId) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == nodeId) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> edge_between(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    for (std::size_t e : incidentEdges.at(a))
      if (edges[e] == std::make_pair(a, b)) return e;
    return std::nullopt;
  }

  void finalize();
};

namespace detail {

inline void fail_invariant(const std::string& what) {
  throw InputError("scenario invariant violated: " + what);
}

}  // namespace detail

// Checks every structural invariant and builds adjacency.
inline void Scenario::finalize() {
  using detail::fail_invariant;
  if (nodes.empty()) fail_invariant("scenario has no nodes");
  std::set<int> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.id).second) fail_invariant("duplicate node id " + std::to_string(n.id));
    if (!is_tri_level(n.ambient))
      fail_invariant("node " + std::to_string(n.id) + " ambient level not in {0, 0.5, 1}");
    if (n.departure && n.destination)
      fail_invariant("node " + std::to_string(n.id) + " is both departure and destination");
  }
  neighbors.assign(nodes.size(), {});
  incidentEdges.assign(nodes.size(), {});
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto [a, b] = edges[e];
    if (a >= nodes.size() || b >= nodes.size()) fail_invariant("edge references a missing node");
    if (a == b) fail_invariant("self-loop on node " + std::to_string(nodes[a].id));
    if (a > b) std::swap(a, b);
    edges[e] = {a, b};
    if (!seen.insert({a, b}).second) {
      fail_invariant("duplicate edge " + std::to_string(nodes[a].id) + "-" +
                     std::to_string(nodes[b].id));
    }
    neighbors[a].push_back(b);
    neighbors[b].push_back(a);
    incidentEdges[a].push_back(e);
    incidentEdges[b].push_back(e);
  }
  for (auto& n : neighbors) std::sort(n.begin(), n.end());

  std::vector<bool> reached(nodes.size(), false);
  std::queue<std::size_t> q;
  q.push(0);
  reached[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : neighbors[u]) {
      if (!reached[v]) {
        reached[v] = true;
        ++count;
        q.push(v);
      }
    }
  }
  if (count != nodes.size()) fail_invariant("graph is not connected");

  departures.clear();
  destinations.clear();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].departure) departures.push_back(i);
    if (nodes[i].destination) destinations.push_back(i);
  }
  if (departures.empty()) fail_invariant("no departure node");
  if (destinations.empty()) fail_invariant("no destination node");
  if (peopleCount < 0) fail_invariant("peopleCount must be >= 0");
  if (!(brokenFraction >= 0.0 && brokenFraction <= 1.0))
    fail_invariant("brokenFraction must lie in [0, 1]");
  if (simulationTicks <= 0) fail_invariant("simulationTicks must be > 0");
  if (!(slowTimeFactor >= 1.0)) fail_invariant("slowTimeFactor must be >= 1");
  if (!(spillFactor >= 0.0)) fail_invariant("spillFactor must be >= 0");
  if (spawnInterval < 0) fail_invariant("spawnInterval must be >= 0");
}

// Hop-count shortest path; ties resolved toward lower node indices. Only edges
// accepted by `usable` are traversed.
template <typename EdgeFilter>
std::vector<std::size_t> shortest_path(const Scenario& sc, std::size_t from, std::size_t to,
                                       EdgeFilter&& usable) {
  std::vector<std::size_t> parent(sc.nodes.size(), sc.nodes.size());
  std::vector<bool> seen(sc.nodes.size(), false);
  std::queue<std::size_t> q;
  q.push(from);
  seen[from] = true;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    if (u == to) break;
    for (std::size_t v : sc.neighbors[u]) {
      if (seen[v] || !usable(u, v)) continue;
      seen[v] = true;
      parent[v] = u;
      q.push(v);
    }
  }
  if (!seen[to]) return {};
  std::vector<std::size_t> path{to};
  while (path.back() != from) path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

inline std::vector<std::size_t> shortest_path(const Scenario& sc, std::size_t from,
                                              std::size_t to) {
  return shortest_path(sc, from, to, [](std::size_t, std::size_t) { return true; });
}

inline Scenario scenario_from_json(const nlohmann::json& doc) {
  Scenario sc;
  try {
    sc.name = doc.value("name", std::string("unnamed"));
    std::unordered_map<int, std::size_t> index;
    for (const auto& jn : doc.at("nodes")) {
      ScenarioNode n;
      n.id = jn.at("id").get<int>();
      n.ambient = jn.value("ambient", 0.0);
      n.departure = jn.value("departure", false);
      n.destination = jn.value("destination", false);
      index.emplace(n.id, sc.nodes.size());
      sc.nodes.push_back(n);
    }
    for (const auto& je : doc.at("edges")) {
      if (!je.is_array() || je.size() != 2) throw InputError("edge must be a [from, to] pair");
      const int a = je[0].get<int>();
      const int b = je[1].get<int>();
      auto ia = index.find(a);
      auto ib = index.find(b);
      if (ia == index.end() || ib == index.end()) {
        detail::fail_invariant("edge " + std::to_string(a) + "-" + std::to_string(b) +
                               " references a missing node");
      }
      sc.edges.emplace_back(ia->second, ib->second);
    }
    if (doc.contains("config")) {
      const auto& c = doc.at("config");
      sc.peopleCount = c.value("peopleCount", sc.peopleCount);
      sc.brokenFraction = c.value("brokenFraction", sc.brokenFraction);
      sc.simulationTicks = c.value("simulationTicks", sc.simulationTicks);
      sc.slowTimeFactor = c.value("slowTimeFactor", sc.slowTimeFactor);
      sc.spillFactor = c.value("spillFactor", sc.spillFactor);
      sc.reroute = c.value("reroute", sc.reroute);
      sc.spawnInterval = c.value("spawnInterval", sc.spawnInterval);
      const std::string agg = c.value("aggregation", std::string("max"));
      if (agg == "max") {
        sc.aggregation = Aggregation::Max;
      } else if (agg == "randomNeighbor") {
        sc.aggregation = Aggregation::RandomNeighbor;
      } else {
        throw InputError("unknown aggregation '" + agg + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed scenario document: ") + e.what());
  }
  sc.finalize();
  sc.digest = hex64(fnv1a64(doc.dump()));
  return sc;
}

inline Scenario load_scenario_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("scenario parse error: ") + e.what());
  }
  return scenario_from_json(doc);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str());
}

}  // namespace streetlight
