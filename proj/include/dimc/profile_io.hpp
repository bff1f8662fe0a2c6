#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dimc/model_io.hpp"
#include "dimc/normalize.hpp"
#include "dimc/slot.hpp"
#include "dimc/strategy.hpp"

namespace dimc {

// Resolves a choice given by label (and optionally target state) in local
// state s. After normalization a synchronisation label may live behind the
// fresh private action `<s>__b_<label>`; that action is accepted instead.
inline LocalChoice resolve_choice(const DistributedImc& model, PlayerIndex j, StateId s, const std::string& label,
                                  const std::optional<std::string>& to) {
  const auto& m = model.module(j);
  auto attempt = [&](const std::string& name) -> std::optional<LocalChoice> {
    auto a = model.find_action(name);
    if (!a) return std::nullopt;
    std::optional<LocalChoice> found;
    for (auto t : m.out_actions[s]) {
      const auto& e = m.transitions[t];
      if (e.label != *a) continue;
      if (to && m.states[e.to] != *to) continue;
      if (found)
        throw SchemaError("choice '" + label + "' in state '" + m.states[s] + "' of module '" + m.name +
                          "' is ambiguous; add \"to\"");
      found = LocalChoice::of(t);
    }
    return found;
  };
  if (auto c = attempt(label)) return *c;
  if (auto a = model.find_action(label); a && model.is_sync_action(*a)) {
    // Split state: the synchronisation moved to the intermediate state.
    auto b = model.find_action(split_action_name(m.states[s], label));
    if (b)
      for (auto t : m.out_actions[s])
        if (m.transitions[t].label == *b) return LocalChoice::of(t);
  }
  throw UndefinedProfileEntry("module '" + m.name + "' has no transition '" + label + "'" +
                              (to ? " to '" + *to + "'" : std::string()) + " from state '" + m.states[s] + "'");
}

namespace detail {

inline ChoiceDistribution parse_entry(const DistributedImc& model, PlayerIndex j, StateId s, const Json& entry) {
  const auto& m = model.module(j);
  auto single = [&](const Json& e) -> LocalChoice {
    if (e.is_null()) {
      if (!m.out_actions[s].empty())
        throw UndefinedProfileEntry("⊥ is not available in state '" + m.states[s] + "' of module '" + m.name + "'");
      return LocalChoice::bottom();
    }
    if (e.is_string()) return resolve_choice(model, j, s, e.get<std::string>(), std::nullopt);
    if (e.is_object()) {
      std::optional<std::string> to;
      if (auto it = e.find("to"); it != e.end() && !it->is_null()) to = it->get<std::string>();
      auto lit = e.find("label");
      if (lit == e.end() || lit->is_null()) {
        if (to) throw SchemaError("profile entry with \"to\" but no \"label\"");
        if (!m.out_actions[s].empty())
          throw UndefinedProfileEntry("⊥ is not available in state '" + m.states[s] + "' of module '" + m.name + "'");
        return LocalChoice::bottom();
      }
      return resolve_choice(model, j, s, lit->get<std::string>(), to);
    }
    throw SchemaError("profile entry for state '" + m.states[s] + "' must be null, a label or an object");
  };
  if (entry.is_array()) {
    ChoiceDistribution dist;
    double total = 0.0;
    for (const auto& e : entry) {
      double p = to_double(detail::json_rational(detail::require(e, "p", "mixed profile entry"), "p"));
      if (p < 0) throw DistributionNotNormalized("negative probability in profile entry");
      dist.emplace_back(single(e), p);
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw DistributionNotNormalized("profile entry for state '" + m.states[s] + "' sums to " + std::to_string(total));
    return dist;
  }
  return {{single(entry), 1.0}};
}

}  // namespace detail

// Memoryless table from {"state": entry}; states without an entry play
// their only available choice, or are left undefined when there are several.
inline MemorylessStrategy memoryless_from_json(const DistributedImc& model, PlayerIndex j, const Json& table) {
  const auto& m = model.module(j);
  std::vector<ChoiceDistribution> dist(m.states.size());
  for (StateId s = 0; s < m.states.size(); ++s) {
    auto choices = available_choices(model, j, s);
    if (choices.size() == 1) dist[s] = {{choices.front(), 1.0}};
  }
  if (!table.is_null()) {
    if (!table.is_object()) throw SchemaError("memoryless table must be an object");
    for (auto it = table.begin(); it != table.end(); ++it) {
      auto s = m.find_state(it.key());
      if (!s) throw UnknownState("module '" + m.name + "' has no state '" + it.key() + "'");
      dist[*s] = detail::parse_entry(model, j, *s, it.value());
    }
  }
  return MemorylessStrategy(std::move(dist));
}

inline std::shared_ptr<const LocalStrategy> scripted_from_json(const DistributedImc& model, PlayerIndex j,
                                                               const Json& spec) {
  std::map<std::string, ScriptedStrategy::Entry> script;
  if (auto it = spec.find("script"); it != spec.end()) {
    if (!it->is_object()) throw SchemaError("script must be an object");
    for (auto e = it->begin(); e != it->end(); ++e) {
      const Json& v = e.value();
      std::string label = v.is_string() ? v.get<std::string>() : detail::require_string(v, "label", "script entry");
      auto a = model.find_action(label);
      if (!a) throw DanglingReference("script names unknown action '" + label + "'");
      ScriptedStrategy::Entry entry{*a, std::nullopt};
      if (v.is_object())
        if (auto to = v.find("to"); to != v.end()) {
          auto s = model.module(j).find_state(to->get<std::string>());
          if (!s) throw UnknownState("script names unknown state '" + to->get<std::string>() + "'");
          entry.to = *s;
        }
      script.emplace(e.key(), entry);
    }
  }
  Json table = spec.contains("table") ? spec.at("table") : Json(nullptr);
  return std::make_shared<ScriptedStrategy>(model, j, std::move(script), memoryless_from_json(model, j, table));
}

// Profile document: {"players": [{"kind": "memoryless"|"scripted"|"slot", ...}]}.
inline std::shared_ptr<LocalProfile> load_profile(const DistributedImc& model, const Json& doc,
                                                  const std::filesystem::path& base_dir = {}) {
  const Json& players = detail::require(doc, "players", "profile");
  if (!players.is_array() || players.size() != model.num_players())
    throw SchemaError("profile must list exactly " + std::to_string(model.num_players()) + " players");
  std::vector<std::shared_ptr<const LocalStrategy>> out;
  for (PlayerIndex j = 0; j < players.size(); ++j) {
    const Json& p = players[j];
    std::string kind = detail::require_string(p, "kind", "profile player " + std::to_string(j + 1));
    if (kind == "memoryless") {
      Json table = p.contains("table") ? p.at("table") : Json(nullptr);
      out.push_back(std::make_shared<MemorylessStrategy>(memoryless_from_json(model, j, table)));
    } else if (kind == "scripted") {
      out.push_back(scripted_from_json(model, j, p));
    } else if (kind == "slot") {
      std::filesystem::path file = detail::require_string(p, "policy", "slot strategy");
      if (file.is_relative()) file = base_dir / file;
      const Json& i = detail::require(p, "i", "slot strategy");
      if (!i.is_number_unsigned() || i.get<std::uint64_t>() == 0) throw SchemaError("slot strategy needs a positive integer 'i'");
      auto policy = std::make_shared<const SyncPolicy>(load_policy_file(model, file));
      auto schedule = std::make_shared<const SlotSchedule>(build_slot_schedule(model, i.get<std::uint64_t>()));
      out.push_back(std::make_shared<SlotStrategy>(model, j, schedule, policy));
    } else {
      throw SchemaError("unknown strategy kind '" + kind + "'");
    }
  }
  return std::make_shared<LocalProfile>(std::move(out));
}

inline std::shared_ptr<LocalProfile> load_profile_file(const DistributedImc& model, const std::filesystem::path& path) {
  return load_profile(model, detail::read_json_file(path), path.parent_path());
}

}  // namespace dimc
