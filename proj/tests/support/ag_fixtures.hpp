#pragma once

// Random assume-guarantee instances over binary ports: M1 has one or two
// components, M2 has one, contracts are picked among random candidates.

#include <string>
#include <vector>

#include "safecomp/compose.hpp"
#include "support/compose_oracle.hpp"

namespace fixtures {

struct AgInstance {
  safecomp::System m1;
  safecomp::ComponentContract c1;
  safecomp::ComponentSide m2;
  safecomp::Property p;
  safecomp::System full;
};

inline std::vector<std::string> pick_subset(safecomp::Rng& rng, const std::vector<std::string>& pool,
                                            std::size_t max) {
  std::vector<std::string> out;
  for (const auto& x : pool)
    if (out.size() < max && rng.below(2)) out.push_back(x);
  return out;
}

inline std::vector<std::string> ports_of(const safecomp::System& s) {
  std::vector<std::string> out;
  for (const auto& [k, _] : safecomp::Product(s).domains()) out.push_back(k);
  return out;
}

inline bool premise_holds(const safecomp::System& sys, const std::optional<safecomp::Property>& assume,
                          const safecomp::Property& g) {
  safecomp::System s = sys;
  if (assume) s.components.push_back(safecomp::most_general_environment(*assume, safecomp::Product(sys).domains(), "A"));
  return safecomp::check_property(s, g).holds;
}

inline AgInstance random_ag_instance(std::uint64_t seed) {
  safecomp::Rng rng(seed);
  AgInstance inst;
  const bool two = rng.below(2);

  auto m2_inputs = pick_subset(rng, {"a0", "e0"}, 2);
  auto m2_outputs = std::vector<std::string>{"m0"};
  if (rng.below(2)) m2_outputs.push_back("m1");
  auto a_inputs = pick_subset(rng, {"m0", "e0", "b0"}, 2);
  if (a_inputs.empty()) a_inputs.push_back("m0");
  if (!two) std::erase(a_inputs, "b0");
  inst.m1.name = "M1";
  inst.m1.components.push_back(oracle::random_component(rng, "A", a_inputs, {"a0"}, 4, 0.15));
  if (two) {
    auto b_inputs = pick_subset(rng, {"a0", "m0"}, 2);
    inst.m1.components.push_back(oracle::random_component(rng, "B", b_inputs, {"b0"}, 4, 0.15));
  }
  inst.m2.system.name = "M2";
  inst.m2.system.components.push_back(oracle::random_component(rng, "C", m2_inputs, m2_outputs, 4, 0.15));

  const auto p1 = ports_of(inst.m1);
  const auto p2 = ports_of(inst.m2.system);

  inst.c1.name = "C1";
  if (rng.below(2)) inst.c1.assume = oracle::random_property(rng, p1);
  inst.c1.guarantee = oracle::random_property(rng, p1);
  for (int k = 0; k < 20 && !premise_holds(inst.m1, inst.c1.assume, inst.c1.guarantee); ++k)
    inst.c1.guarantee = oracle::random_property(rng, p1);

  inst.m2.contract.name = "C2";
  if (rng.below(2)) inst.m2.contract.assume = oracle::random_property(rng, p2);
  inst.m2.contract.guarantee = oracle::random_property(rng, p2);
  for (int k = 0; k < 20 && !premise_holds(inst.m2.system, inst.m2.contract.assume, inst.m2.contract.guarantee); ++k)
    inst.m2.contract.guarantee = oracle::random_property(rng, p2);

  inst.full.name = "M1||M2";
  inst.full.components = inst.m1.components;
  for (const auto& c : inst.m2.system.components) inst.full.components.push_back(c);
  const auto all = ports_of(inst.full);

  // Prefer a P that follows from the two contracts.
  inst.p = oracle::random_property(rng, all);
  for (int k = 0; k < 30; ++k) {
    if (safecomp::check_assume_guarantee(inst.m1, inst.c1, inst.m2, inst.p).premises[2].holds) break;
    inst.p = oracle::random_property(rng, all);
  }
  return inst;
}

} // namespace fixtures
