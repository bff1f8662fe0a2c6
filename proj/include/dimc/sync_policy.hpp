#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "dimc/mdp_solve.hpp"
#include "dimc/model_io.hpp"
#include "dimc/non_urgent.hpp"
#include "dimc/semantics.hpp"
#include "dimc/sync_mdp.hpp"

namespace dimc {

// The decision of an MDP policy in one S' state, expressed on the model:
// the agreed local choices and the private-fragment strategies σ_1, σ_2 as
// full local tables (∅_j in synchronisation states).
struct PolicyEntry {
  MdpActionKind kind = MdpActionKind::Bottom;
  LocalChoice choice[2];
  std::vector<LocalChoice> sigma[2];
  double value = 0.0;
};

class SyncPolicy {
 public:
  SyncPolicy() = default;
  SyncPolicy(std::vector<GlobalState> states, std::vector<PolicyEntry> entries)
      : states_(std::move(states)), entries_(std::move(entries)) {
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);
  }

  const std::vector<GlobalState>& states() const { return states_; }
  const std::vector<PolicyEntry>& entries() const { return entries_; }
  const PolicyEntry& entry(std::size_t i) const { return entries_.at(i); }
  std::optional<std::size_t> find(const GlobalState& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  // Value at the initial state (index 0).
  double value() const { return entries_.empty() ? 0.0 : entries_.front().value; }

 private:
  std::vector<GlobalState> states_;
  std::vector<PolicyEntry> entries_;
  std::unordered_map<GlobalState, std::size_t, GlobalStateHash> index_;
};

inline SyncPolicy make_sync_policy(const DistributedImc& model, const SyncMdp<double>& mdp, const MdpPolicy& solved,
                                   const BuildOptions& options = {}) {
  auto report = check_non_urgent(model);
  PolicySpace space1(model, report, 0, options.policy_cap), space2(model, report, 1, options.policy_cap);
  std::vector<PolicyEntry> entries;
  for (std::size_t s = 0; s < mdp.states.size(); ++s) {
    const auto& a = mdp.actions[s][solved.choice[s]];
    PolicyEntry e;
    e.kind = a.kind;
    e.choice[0] = a.c1;
    e.choice[1] = a.c2;
    e.sigma[0] = space1.decode(a.sigma1);
    e.sigma[1] = space2.decode(a.sigma2);
    e.value = solved.value[s];
    entries.push_back(std::move(e));
  }
  return SyncPolicy(mdp.states, std::move(entries));
}

namespace detail {

inline Json choice_json(const DistributedImc& model, PlayerIndex j, LocalChoice c) {
  if (c.is_bottom()) return nullptr;
  const auto& m = model.module(j);
  const auto& t = m.transitions[c.index()];
  return Json{{"label", model.action_name(t.label)}, {"to", m.states[t.to]}};
}

inline LocalChoice choice_from_json(const DistributedImc& model, PlayerIndex j, StateId s, const Json& v) {
  const auto& m = model.module(j);
  if (v.is_null()) {
    if (!m.out_actions[s].empty())
      throw SchemaError("policy gives ⊥ in state '" + m.states[s] + "' which has action transitions");
    return LocalChoice::bottom();
  }
  std::string label = require_string(v, "label", "policy choice");
  std::string to = require_string(v, "to", "policy choice");
  for (auto t : m.out_actions[s]) {
    const auto& e = m.transitions[t];
    if (model.action_name(e.label) == label && m.states[e.to] == to) return LocalChoice::of(t);
  }
  throw DanglingReference("policy names transition " + m.states[s] + " -" + label + "-> " + to +
                          " which module '" + m.name + "' does not have");
}

inline const char* kind_name(MdpActionKind k) {
  switch (k) {
    case MdpActionKind::Sync:
      return "sync";
    case MdpActionKind::Initial:
      return "initial";
    case MdpActionKind::Bottom:
      return "bottom";
  }
  return "";
}

}  // namespace detail

// {"t1,c1": {"kind", "choice": [c1, c2] | null, "sigma1": {...}, "sigma2": {...}, "value"}}
// where sigma tables list every private local state of the player.
inline Json policy_to_json(const DistributedImc& model, const SyncPolicy& policy) {
  auto report = check_non_urgent(model);
  Json out = Json::object();
  for (std::size_t i = 0; i < policy.states().size(); ++i) {
    const auto& s = policy.states()[i];
    const auto& e = policy.entry(i);
    Json entry;
    entry["kind"] = detail::kind_name(e.kind);
    if (e.kind == MdpActionKind::Bottom) entry["choice"] = nullptr;
    else entry["choice"] = Json::array({detail::choice_json(model, 0, e.choice[0]), detail::choice_json(model, 1, e.choice[1])});
    for (PlayerIndex j = 0; j < 2; ++j) {
      Json sigma = Json::object();
      for (StateId p : report.private_local_states[j])
        sigma[model.module(j).states[p]] = detail::choice_json(model, j, e.sigma[j][p]);
      entry[j == 0 ? "sigma1" : "sigma2"] = std::move(sigma);
    }
    entry["value"] = e.value;
    out[model.state_name(s)] = std::move(entry);
  }
  return out;
}

// Reads the "policy" object of a solve report (or the report itself).
inline SyncPolicy policy_from_json(const DistributedImc& model, const Json& doc) {
  const Json& table = doc.contains("policy") ? doc.at("policy") : doc;
  if (!table.is_object()) throw SchemaError("policy must be an object keyed by synchronisation states");
  auto report = check_non_urgent(model);
  auto states = enumerate_sync_states(model, report);
  std::vector<PolicyEntry> entries(states.size());
  std::vector<bool> seen(states.size(), false);
  SyncPolicy lookup(states, std::vector<PolicyEntry>(states.size()));
  for (auto it = table.begin(); it != table.end(); ++it) {
    // Key: comma-joined local state names.
    GlobalState s;
    std::string key = it.key();
    std::size_t pos = 0;
    for (PlayerIndex j = 0; j < 2; ++j) {
      std::size_t comma = j == 0 ? key.find(',') : std::string::npos;
      std::string name = key.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      auto id = model.module(j).find_state(name);
      if (!id) throw UnknownState("policy state '" + key + "' names unknown local state '" + name + "'");
      s.push_back(*id);
      pos = comma + 1;
    }
    auto idx = lookup.find(s);
    if (!idx) throw SchemaError("policy state '" + key + "' is not a synchronisation state");
    const Json& v = it.value();
    PolicyEntry e;
    std::string kind = detail::require_string(v, "kind", "policy entry");
    if (kind == "sync") e.kind = MdpActionKind::Sync;
    else if (kind == "initial") e.kind = MdpActionKind::Initial;
    else if (kind == "bottom") e.kind = MdpActionKind::Bottom;
    else throw SchemaError("unknown policy entry kind '" + kind + "'");
    if (e.kind != MdpActionKind::Bottom) {
      const Json& c = detail::require(v, "choice", "policy entry");
      if (!c.is_array() || c.size() != 2) throw SchemaError("policy choice must list two local choices");
      for (PlayerIndex j = 0; j < 2; ++j) e.choice[j] = detail::choice_from_json(model, j, s[j], c[j]);
    }
    for (PlayerIndex j = 0; j < 2; ++j) {
      PolicySpace space(model, report, j, std::numeric_limits<std::uint64_t>::max());
      e.sigma[j] = space.decode(0);
      const Json& sigma = detail::require(v, j == 0 ? "sigma1" : "sigma2", "policy entry");
      for (auto p = sigma.begin(); p != sigma.end(); ++p) {
        auto st = model.module(j).find_state(p.key());
        if (!st) throw UnknownState("policy sigma names unknown state '" + p.key() + "'");
        e.sigma[j][*st] = detail::choice_from_json(model, j, *st, p.value());
      }
    }
    if (auto val = v.find("value"); val != v.end() && val->is_number()) e.value = val->get<double>();
    entries[*idx] = std::move(e);
    seen[*idx] = true;
  }
  for (std::size_t i = 0; i < states.size(); ++i)
    if (!seen[i]) throw SchemaError("policy lacks synchronisation state '" + model.state_name(states[i]) + "'");
  return SyncPolicy(std::move(states), std::move(entries));
}

inline SyncPolicy load_policy_file(const DistributedImc& model, const std::filesystem::path& path) {
  return policy_from_json(model, detail::read_json_file(path));
}

// Full-observation harness θ: in a synchronisation state the players commit
// to the policy's agreed choices; elsewhere each plays σ_j of the last
// synchronisation state visited, and ∅_j while waiting in a synchronisation
// local state.
class FullObservationProfile final : public StrategyProfile {
 public:
  FullObservationProfile(const DistributedImc& model, SyncPolicy policy)
      : model_(model), policy_(std::move(policy)), report_(check_non_urgent(model)) {
    require_two_player_non_urgent(model_, report_);
    for (PlayerIndex j = 0; j < 2; ++j) {
      const auto& m = model_.module(j);
      nothing_[j].assign(m.states.size(), LocalChoice::bottom());
      sync_[j].assign(m.states.size(), false);
      for (StateId s : report_.sync_local_states[j]) {
        sync_[j][s] = true;
        for (auto t : m.out_actions[s])
          if (m.transitions[t].label == *m.nothing_action) nothing_[j][s] = LocalChoice::of(t);
      }
    }
  }

  std::unique_ptr<ProfileSession> start() const override { return std::make_unique<Session>(*this); }

 private:
  class Session final : public ProfileSession {
   public:
    explicit Session(const FullObservationProfile& p) : p_(p) {}
    LocalChoice choose(PlayerIndex j, const PlayState& play, Rng&) override {
      const GlobalState& s = play.state();
      auto idx = p_.policy_.find(s);
      if (idx) last_ = *idx;
      const PolicyEntry& e = p_.policy_.entry(last_);
      StateId local = s[j];
      if (!p_.sync_[j][local]) return e.sigma[j][local];
      if (idx && e.kind == MdpActionKind::Sync) return e.choice[j];
      return p_.nothing_[j][local];
    }

   private:
    const FullObservationProfile& p_;
    std::size_t last_ = 0;
  };

  const DistributedImc& model_;
  SyncPolicy policy_;
  NonUrgencyReport report_;
  std::vector<LocalChoice> nothing_[2];
  std::vector<bool> sync_[2];
};

}  // namespace dimc
