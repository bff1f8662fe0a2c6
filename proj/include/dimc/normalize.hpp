#pragma once

#include <set>
#include <string>

#include "dimc/model.hpp"

namespace dimc {

inline constexpr int kDefaultSelfLoopRate = 1;

inline std::string split_state_name(const std::string& state, const std::string& action) {
  return state + "__in_" + action;
}

inline std::string split_action_name(const std::string& state, const std::string& action) {
  return state + "__b_" + action;
}

// True when some local state has neither a delay nor only private actions,
// i.e. when normalize_nonstop would change the model.
inline bool needs_normalization(const DistributedImc& model) {
  for (const auto& m : model.modules()) {
    for (StateId s = 0; s < m.states.size(); ++s) {
      if (!m.out_delays[s].empty()) continue;
      if (m.out_actions[s].empty()) return true;
      for (auto t : m.out_actions[s])
        if (model.is_sync_action(m.transitions[t].label)) return true;
    }
  }
  return false;
}

// Makes every local state able to let time pass: dead states get a delay
// self-loop, and a state whose only way out is synchronisation gets one
// fresh private action per synchronisation action leading to an
// intermediate state with a delay self-loop that carries the original
// transitions. Target cubes are widened to the intermediates.
inline DistributedImc normalize_nonstop(const DistributedImc& model) {
  if (!needs_normalization(model)) return model;

  ModelSpec spec = to_spec(model);
  std::set<std::string> taken_actions;
  for (ActionId a = 0; a < model.num_actions(); ++a) taken_actions.insert(model.action_name(a));

  // split[j][state] = intermediate states created for it
  std::vector<std::map<std::string, std::vector<std::string>>> split(model.num_players());

  for (PlayerIndex j = 0; j < model.num_players(); ++j) {
    const auto& m = model.module(j);
    auto& ms = spec.modules[j];
    std::set<std::string> taken_states(ms.states.begin(), ms.states.end());

    for (StateId s = 0; s < m.states.size(); ++s) {
      if (!m.out_delays[s].empty()) continue;
      const std::string& name = m.states[s];
      if (m.out_actions[s].empty()) {
        ms.delays.push_back({name, Rational(kDefaultSelfLoopRate), name});
        continue;
      }
      std::set<std::string> sync_labels;
      for (auto t : m.out_actions[s])
        if (model.is_sync_action(m.transitions[t].label)) sync_labels.insert(model.action_name(m.transitions[t].label));
      for (const auto& a : sync_labels) {
        std::string in = split_state_name(name, a), b = split_action_name(name, a);
        if (!taken_states.insert(in).second)
          throw NameCollision("state '" + in + "' already exists in module '" + m.name + "'");
        if (!taken_actions.insert(b).second) throw NameCollision("action '" + b + "' already exists");
        ms.states.push_back(in);
        ms.actions.push_back(b);
        ms.transitions.push_back({name, b, in});
        ms.delays.push_back({in, Rational(kDefaultSelfLoopRate), in});
        for (auto& edge : ms.transitions)
          if (edge.from == name && edge.label == a) edge.from = in;
        split[j][name].push_back(in);
      }
    }
  }

  for (auto& cube : spec.target) {
    for (PlayerIndex j = 0; j < cube.size(); ++j) {
      if (!cube[j]) continue;
      std::vector<std::string> extra;
      for (const auto& s : *cube[j])
        if (auto it = split[j].find(s); it != split[j].end()) extra.insert(extra.end(), it->second.begin(), it->second.end());
      cube[j]->insert(cube[j]->end(), extra.begin(), extra.end());
    }
  }
  // The fresh private actions may close cycles through states whose
  // synchronisation action was already cyclic in that module, so the
  // acyclicity check of the input is not repeated here.
  return build_model(spec, false);
}

}  // namespace dimc
