#pragma once

#include <string>
#include <vector>

#include "dimc/model.hpp"

namespace dimc {

struct NonUrgencyReport {
  bool is_non_urgent = false;
  // Per player, sorted by state name. The position of a state in
  // sync_local_states is its index in the slot grid.
  std::vector<std::vector<StateId>> sync_local_states;
  std::vector<std::vector<StateId>> private_local_states;
  std::vector<std::optional<ActionId>> nothing_actions;
  std::vector<std::string> violations;

  bool is_sync(PlayerIndex j, StateId s) const {
    const auto& v = sync_local_states[j];
    return std::find(v.begin(), v.end(), s) != v.end();
  }
};

inline NonUrgencyReport check_non_urgent(const DistributedImc& model) {
  NonUrgencyReport report;
  const std::size_t n = model.num_players();
  report.sync_local_states.resize(n);
  report.private_local_states.resize(n);
  report.nothing_actions.resize(n);

  auto sym = [](PlayerIndex j) { return "∅_" + std::to_string(j + 1); };

  for (PlayerIndex j = 0; j < n; ++j) {
    const auto& m = model.module(j);
    report.nothing_actions[j] = m.nothing_action;

    std::vector<StateId> by_name(m.states.size());
    for (StateId s = 0; s < by_name.size(); ++s) by_name[s] = s;
    std::sort(by_name.begin(), by_name.end(), [&](StateId a, StateId b) { return m.states[a] < m.states[b]; });

    for (StateId s : by_name) {
      bool has_sync = false;
      bool has_nothing = false;
      std::vector<std::string> private_labels;
      for (auto t : m.out_actions[s]) {
        ActionId a = m.transitions[t].label;
        if (model.is_sync_action(a)) has_sync = true;
        else private_labels.push_back(model.action_name(a));
        if (m.nothing_action && a == *m.nothing_action) has_nothing = true;
      }
      const std::string where = "module '" + m.name + "' state '" + m.states[s] + "'";
      if (!has_sync) {
        report.private_local_states[j].push_back(s);
        continue;
      }
      report.sync_local_states[j].push_back(s);
      if (m.out_delays[s].size() != 1) {
        report.violations.push_back(where + ": synchronisation state has " + std::to_string(m.out_delays[s].size()) +
                                    " delay transitions, expected exactly one self-loop");
      } else if (m.delays[m.out_delays[s].front()].to != s) {
        report.violations.push_back(where + ": the delay transition of a synchronisation state must be a self-loop");
      }
      for (const auto& label : private_labels)
        report.violations.push_back(where + ": synchronisation state has private action '" + label + "'");
      if (!m.nothing_action) {
        report.violations.push_back(where + ": synchronisation state but module declares no nothing_action");
      } else if (!has_nothing) {
        report.violations.push_back(where + ": " + sym(j) + " ('" + model.action_name(*m.nothing_action) +
                                    "') is not available");
      }
    }

    if (!m.nothing_action) continue;
    ActionId nothing = *m.nothing_action;
    for (PlayerIndex k = 0; k < n; ++k) {
      if (k == j) continue;
      const auto& other = model.module(k);
      if (!other.has_action(nothing)) {
        report.violations.push_back(sym(j) + " ('" + model.action_name(nothing) + "') is missing from Act_" +
                                    std::to_string(k + 1) + " ('" + other.name + "')");
      }
      for (const auto& t : other.transitions) {
        if (t.label == nothing) {
          report.violations.push_back(sym(j) + " ('" + model.action_name(nothing) + "') appears in ↪_" +
                                      std::to_string(k + 1) + " ('" + other.name + "')");
          break;
        }
      }
    }
  }
  report.is_non_urgent = report.violations.empty();
  return report;
}

}  // namespace dimc
