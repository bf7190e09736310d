#pragma once

// Shared helpers for the test binaries: fixture paths and seeded generators.

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lcanet/esn.hpp"
#include "lcanet/model.hpp"

namespace lcanet::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(LCANET_DATA_DIR) / name;
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}
inline bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// Random net with `places` × `transitions` arcs. Integer weights in 1..3
/// when `integer_weights`, otherwise reals in [0.1, 5).
inline EngineeringSystemNet random_net(Rng& rng, std::size_t places, std::size_t transitions, double density,
                                       bool integer_weights) {
  std::vector<Eigen::Triplet<double>> pos, neg;
  for (std::size_t c = 0; c < transitions; ++c)
    for (std::size_t p = 0; p < places; ++p) {
      auto weight = [&] { return integer_weights ? static_cast<double>(pick(rng, 1, 3)) : uniform(rng, 0.1, 5.0); };
      if (coin(rng, density)) pos.emplace_back(static_cast<int>(p), static_cast<int>(c), weight());
      if (coin(rng, density)) neg.emplace_back(static_cast<int>(p), static_cast<int>(c), weight());
    }
  SparseMatrix mp(static_cast<Eigen::Index>(places), static_cast<Eigen::Index>(transitions));
  SparseMatrix mn(static_cast<Eigen::Index>(places), static_cast<Eigen::Index>(transitions));
  mp.setFromTriplets(pos.begin(), pos.end());
  mn.setFromTriplets(neg.begin(), neg.end());
  return make_net(mp, mn);
}

inline Vector random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

inline Vector random_integer_vector(Rng& rng, std::size_t n, std::size_t hi) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = static_cast<double>(pick(rng, 0, hi));
  return v;
}

/// Acyclic LCA-shaped model: process i makes product i at its own plant and
/// may consume products of earlier processes at their plants. Aspects are
/// emitted to an atmosphere buffer or extracted from an earth buffer.
/// Returns the raw file so it can also be serialized.
inline ModelFile random_triangular_model(Rng& rng, std::size_t processes, std::size_t aspects) {
  ModelFile m;
  m.name = "random chain";
  for (std::size_t i = 0; i < processes; ++i)
    m.operands.push_back({"prod" + std::to_string(i), "Product " + std::to_string(i), "u" + std::to_string(i)});
  for (std::size_t a = 0; a < aspects; ++a)
    m.operands.push_back({"asp" + std::to_string(a), "Aspect " + std::to_string(a), "kg"});
  for (std::size_t i = 0; i < processes; ++i)
    m.resources.push_back({"plant" + std::to_string(i), "Plant " + std::to_string(i), ResourceKind::transformation, {}});
  m.resources.push_back({"atmosphere", "Atmosphere", ResourceKind::independent_buffer, {}});
  m.resources.push_back({"earth", "Earth", ResourceKind::independent_buffer, {}});

  for (std::size_t i = 0; i < processes; ++i) {
    ProcessSpec p;
    p.id = "proc" + std::to_string(i);
    p.name = "Process " + std::to_string(i);
    p.primary_output = "prod" + std::to_string(i);
    p.outputs.push_back({p.primary_output, 1.0, ""});
    for (std::size_t j = 0; j < i; ++j) {
      if (!coin(rng, 0.6)) continue;
      p.inputs.push_back({"prod" + std::to_string(j), uniform(rng, 0.05, 3.0), ""});
      m.buffer_overrides.push_back({p.id, {}, "prod" + std::to_string(j), FlowDirection::pull,
                                    "plant" + std::to_string(j)});
    }
    for (std::size_t a = 0; a < aspects; ++a) {
      if (!coin(rng, 0.7)) continue;
      const std::string asp = "asp" + std::to_string(a);
      if (coin(rng, 0.3)) {
        p.inputs.push_back({asp, uniform(rng, 0.01, 4.0), ""});
        m.buffer_overrides.push_back({p.id, {}, asp, FlowDirection::pull, "earth"});
      } else {
        p.outputs.push_back({asp, uniform(rng, 0.001, 2.0), ""});
        m.buffer_overrides.push_back({p.id, {}, asp, FlowDirection::inject, "atmosphere"});
      }
    }
    m.processes.push_back(std::move(p));
  }
  // Shuffle the allocation order so the capability order is not topological.
  std::vector<std::size_t> order(processes);
  for (std::size_t i = 0; i < processes; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (auto i : order) m.allocations.push_back({"proc" + std::to_string(i), "plant" + std::to_string(i), {}, {}});
  for (std::size_t a = 0; a < aspects; ++a) m.aspects.push_back("asp" + std::to_string(a));
  return m;
}

/// Model with `processes` processes each allocated to each of `resources`
/// stationary resources.
inline ModelFile allocation_grid_model(std::size_t processes, std::size_t resources) {
  ModelFile m;
  m.operands.push_back({"x", "X", "u"});
  for (std::size_t r = 0; r < resources; ++r)
    m.resources.push_back({"r" + std::to_string(r), "R" + std::to_string(r), ResourceKind::transformation, {}});
  for (std::size_t p = 0; p < processes; ++p) {
    ProcessSpec spec{"p" + std::to_string(p), "P" + std::to_string(p), ProcessKind::transformation, {}, {}, "x"};
    spec.outputs.push_back({"x", 1.0 + static_cast<double>(p), ""});
    m.processes.push_back(std::move(spec));
    for (std::size_t r = 0; r < resources; ++r) m.allocations.push_back({"p" + std::to_string(p), "r" + std::to_string(r), {}, {}});
  }
  return m;
}

/// Mixed conversion/transportation model over `sites` depots: conversion at
/// each site, trucks moving goods between sites, emissions to the air.
inline ModelFile random_mixed_model(Rng& rng, std::size_t sites, std::size_t conversions, std::size_t routes) {
  ModelFile m;
  m.operands = {{"good", "Good", "t"}, {"fuel", "Fuel", "kg"}, {"co2", "CO2", "kg"}, {"nox", "NOx", "g"}};
  for (std::size_t s = 0; s < sites; ++s)
    m.resources.push_back({"site" + std::to_string(s), "Site " + std::to_string(s), ResourceKind::transformation,
                           "loc" + std::to_string(s)});
  m.resources.push_back({"air", "Air", ResourceKind::independent_buffer, {}});
  m.resources.push_back({"fleet", "Fleet", ResourceKind::transportation, {}});
  m.aspects = {"co2", "nox"};
  for (std::size_t c = 0; c < conversions; ++c) {
    ProcessSpec p{"make" + std::to_string(c), "Make " + std::to_string(c), ProcessKind::transformation, {}, {}, "good"};
    p.inputs.push_back({"fuel", uniform(rng, 0.1, 2.0), ""});
    p.outputs.push_back({"good", 1.0, ""});
    p.outputs.push_back({"co2", uniform(rng, 0.01, 1.0), ""});
    m.buffer_overrides.push_back({p.id, {}, "co2", FlowDirection::inject, "air"});
    m.processes.push_back(p);
    m.allocations.push_back({p.id, "site" + std::to_string(pick(rng, 0, sites - 1)), {}, {}});
  }
  for (std::size_t r = 0; r < routes; ++r) {
    const std::size_t from = pick(rng, 0, sites - 1);
    const std::size_t to = (from + 1 + pick(rng, 0, sites - 2)) % sites;
    ProcessSpec p{"haul" + std::to_string(r), "Haul " + std::to_string(r), ProcessKind::transportation, {}, {}, "good"};
    p.inputs.push_back({"good", 1.0, ""});
    p.outputs.push_back({"good", 1.0, ""});
    p.outputs.push_back({"co2", uniform(rng, 0.001, 0.5), ""});
    p.outputs.push_back({"nox", uniform(rng, 0.001, 0.5), ""});
    m.buffer_overrides.push_back({p.id, {}, "good", FlowDirection::pull, "site" + std::to_string(from)});
    m.buffer_overrides.push_back({p.id, {}, "good", FlowDirection::inject, "site" + std::to_string(to)});
    m.buffer_overrides.push_back({p.id, {}, "co2", FlowDirection::inject, "air"});
    m.buffer_overrides.push_back({p.id, {}, "nox", FlowDirection::inject, "air"});
    m.processes.push_back(p);
    m.allocations.push_back({p.id, "fleet", {}, {}});
  }
  return m;
}

}  // namespace lcanet::testing
