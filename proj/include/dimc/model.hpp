#pragma once

#include <boost/container/small_vector.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dimc/errors.hpp"
#include "dimc/rational.hpp"

namespace dimc {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;
using PlayerIndex = std::size_t;  // 0-based in code; reports print index + 1

// One local state per module.
using GlobalState = boost::container::small_vector<StateId, 4>;

// A local choice is an outgoing action transition (by index into the
// module's transition list) or bottom when the state offers none.
struct LocalChoice {
  std::int32_t transition = -1;

  static constexpr LocalChoice bottom() noexcept { return {}; }
  static constexpr LocalChoice of(std::size_t index) noexcept {
    return LocalChoice{static_cast<std::int32_t>(index)};
  }
  constexpr bool is_bottom() const noexcept { return transition < 0; }
  constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(transition); }
  auto operator<=>(const LocalChoice&) const = default;
};

using GlobalChoice = boost::container::small_vector<LocalChoice, 4>;
using ActionSet = boost::container::small_vector<ActionId, 4>;

struct ActionTransition {
  StateId from;
  ActionId label;
  StateId to;
};

struct DelayTransition {
  StateId from;
  Rational rate;
  StateId to;
  double rate_value;  // cached conversion of `rate`
};

struct ImcModule {
  std::string name;
  std::vector<std::string> states;
  StateId initial = 0;
  std::vector<ActionId> actions;  // sorted alphabet Act_j
  std::optional<ActionId> nothing_action;
  std::vector<ActionTransition> transitions;
  std::vector<DelayTransition> delays;

  // Adjacency by source state; indices into `transitions` / `delays`.
  std::vector<std::vector<std::uint32_t>> out_actions;
  std::vector<std::vector<std::uint32_t>> out_delays;

  std::optional<StateId> find_state(std::string_view state_name) const {
    auto it = std::lower_bound(sorted_states_.begin(), sorted_states_.end(), state_name,
                               [](const auto& entry, std::string_view key) { return entry.first < key; });
    if (it == sorted_states_.end() || it->first != state_name) return std::nullopt;
    return it->second;
  }

  bool has_action(ActionId a) const { return std::binary_search(actions.begin(), actions.end(), a); }

  double exit_rate(StateId s) const {
    double total = 0.0;
    for (auto d : out_delays[s]) total += delays[d].rate_value;
    return total;
  }

  void index_states() {
    sorted_states_.clear();
    for (StateId s = 0; s < states.size(); ++s) sorted_states_.emplace_back(states[s], s);
    std::sort(sorted_states_.begin(), sorted_states_.end());
    out_actions.assign(states.size(), {});
    out_delays.assign(states.size(), {});
    for (std::uint32_t t = 0; t < transitions.size(); ++t) out_actions[transitions[t].from].push_back(t);
    for (std::uint32_t d = 0; d < delays.size(); ++d) out_delays[delays[d].from].push_back(d);
  }

 private:
  std::vector<std::pair<std::string, StateId>> sorted_states_;
};

// Target set as a finite union of cubes. A cube constrains every player's
// local state to a sorted set of states; std::nullopt leaves it unconstrained.
class TargetSet {
 public:
  using Part = std::optional<std::vector<StateId>>;
  using Cube = std::vector<Part>;

  TargetSet() = default;
  explicit TargetSet(std::vector<Cube> cubes) : cubes_(std::move(cubes)) {
    for (auto& cube : cubes_)
      for (auto& part : cube)
        if (part) {
          std::sort(part->begin(), part->end());
          part->erase(std::unique(part->begin(), part->end()), part->end());
        }
  }

  bool contains(const GlobalState& s) const {
    for (const auto& cube : cubes_) {
      bool inside = true;
      for (std::size_t j = 0; j < cube.size() && inside; ++j)
        if (cube[j] && !std::binary_search(cube[j]->begin(), cube[j]->end(), s[j])) inside = false;
      if (inside) return true;
    }
    return false;
  }

  bool empty() const {
    return std::all_of(cubes_.begin(), cubes_.end(), [](const Cube& c) {
      return std::any_of(c.begin(), c.end(), [](const Part& p) { return p && p->empty(); });
    });
  }

  const std::vector<Cube>& cubes() const { return cubes_; }

 private:
  std::vector<Cube> cubes_;
};

// Name-based description of a model. This is the form the JSON schema maps
// onto and the form model transformations edit.
struct ModuleSpec {
  struct Edge {
    std::string from, label, to;
  };
  struct Delay {
    std::string from;
    Rational rate;
    std::string to;
  };

  std::string name;
  std::vector<std::string> states;
  std::string initial;
  std::vector<std::string> actions;
  std::optional<std::string> nothing_action;
  std::vector<Edge> transitions;
  std::vector<Delay> delays;
};

struct ModelSpec {
  // Per cube and player: nullopt for "any state", otherwise the allowed names.
  using TargetCube = std::vector<std::optional<std::vector<std::string>>>;

  std::vector<ModuleSpec> modules;
  std::vector<TargetCube> target;
};

class DistributedImc {
 public:
  DistributedImc() = default;

  std::size_t num_players() const { return modules_.size(); }
  const ImcModule& module(PlayerIndex j) const { return modules_.at(j); }
  const std::vector<ImcModule>& modules() const { return modules_; }

  std::size_t num_actions() const { return action_names_.size(); }
  const std::string& action_name(ActionId a) const { return action_names_.at(a); }
  std::optional<ActionId> find_action(std::string_view action_name) const {
    auto it = std::lower_bound(action_names_.begin(), action_names_.end(), action_name);
    if (it == action_names_.end() || *it != action_name) return std::nullopt;
    return static_cast<ActionId>(it - action_names_.begin());
  }

  // Sync(a): sorted players whose alphabet contains a.
  const std::vector<PlayerIndex>& sync_set(ActionId a) const { return sync_sets_.at(a); }
  bool is_sync_action(ActionId a) const { return sync_sets_.at(a).size() >= 2; }
  bool is_private_action(ActionId a) const { return sync_sets_.at(a).size() == 1; }

  const TargetSet& target() const { return target_; }

  GlobalState initial_state() const {
    GlobalState s;
    for (const auto& m : modules_) s.push_back(m.initial);
    return s;
  }

  std::string state_name(const GlobalState& s) const {
    std::string out;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j) out += ',';
      out += modules_[j].states.at(s[j]);
    }
    return out;
  }

  std::string choice_name(PlayerIndex j, LocalChoice c) const {
    if (c.is_bottom()) return "⊥";
    const auto& t = modules_[j].transitions.at(c.index());
    return modules_[j].states[t.from] + "-" + action_names_[t.label] + "->" + modules_[j].states[t.to];
  }

  ActionId label_of(PlayerIndex j, LocalChoice c) const { return modules_[j].transitions.at(c.index()).label; }
  StateId target_of(PlayerIndex j, LocalChoice c) const { return modules_[j].transitions.at(c.index()).to; }

  // Upper bound on action steps inside one zero-time closure. Every
  // validated model fires finitely many actions between two delays; the
  // bound is generous so that exceeding it signals a model defect.
  std::size_t closure_budget() const { return closure_budget_; }

  friend DistributedImc build_model(const ModelSpec& spec, bool check_acyclicity);

 private:
  std::vector<ImcModule> modules_;
  std::vector<std::string> action_names_;
  std::vector<std::vector<PlayerIndex>> sync_sets_;
  TargetSet target_;
  std::size_t closure_budget_ = 0;
};

namespace detail {

// Tarjan SCC over the action-transition graph of one module.
inline std::vector<std::uint32_t> action_sccs(const ImcModule& m) {
  const std::size_t n = m.states.size();
  std::vector<std::int64_t> index(n, -1), low(n, 0);
  std::vector<std::uint32_t> comp(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> stack;
  std::int64_t counter = 0;
  std::uint32_t comps = 0;
  // Iterative DFS: (node, next edge position).
  std::vector<std::pair<std::uint32_t, std::size_t>> work;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    work.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!work.empty()) {
      auto& [v, pos] = work.back();
      if (pos < m.out_actions[v].size()) {
        std::uint32_t w = m.transitions[m.out_actions[v][pos++]].to;
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          work.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      } else {
        std::uint32_t done = v;
        work.pop_back();
        if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
        if (low[done] == index[done]) {
          std::uint32_t w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp[w] = comps;
          } while (w != done);
          ++comps;
        }
      }
    }
  }
  return comp;
}

// A cycle through edge `t` of module `m`, as a readable string.
inline std::string describe_cycle(const ImcModule& m, const std::vector<std::string>& actions, std::uint32_t t) {
  const auto& edge = m.transitions[t];
  // BFS from edge.to back to edge.from.
  std::vector<std::int64_t> via(m.states.size(), -1);
  std::vector<bool> seen(m.states.size(), false);
  std::vector<StateId> queue{edge.to};
  seen[edge.to] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    StateId v = queue[head];
    if (v == edge.from) break;
    for (auto e : m.out_actions[v]) {
      StateId w = m.transitions[e].to;
      if (!seen[w]) {
        seen[w] = true;
        via[w] = e;
        queue.push_back(w);
      }
    }
  }
  std::vector<std::uint32_t> path;
  for (StateId v = edge.from; v != edge.to && via[v] >= 0;) {
    path.push_back(static_cast<std::uint32_t>(via[v]));
    v = m.transitions[static_cast<std::size_t>(via[v])].from;
  }
  std::reverse(path.begin(), path.end());
  std::string out = m.states[edge.from] + " -" + actions[edge.label] + "-> " + m.states[edge.to];
  for (auto e : path) out += " -" + actions[m.transitions[e].label] + "-> " + m.states[m.transitions[e].to];
  return out;
}

}  // namespace detail

// Validates a name-based description and builds the indexed model.
// Throws SchemaError, DanglingReference, NonPositiveRate, AcyclicityViolation.
inline DistributedImc build_model(const ModelSpec& spec, bool check_acyclicity = true) {
  if (spec.modules.empty()) throw SchemaError("model has no modules");

  std::set<std::string> action_pool;
  for (const auto& m : spec.modules) {
    for (const auto& a : m.actions) {
      if (a.empty()) throw SchemaError("empty action name in module '" + m.name + "'");
      action_pool.insert(a);
    }
  }

  DistributedImc model;
  model.action_names_.assign(action_pool.begin(), action_pool.end());
  model.sync_sets_.assign(model.action_names_.size(), {});

  std::set<std::string> module_names;
  for (PlayerIndex j = 0; j < spec.modules.size(); ++j) {
    const auto& ms = spec.modules[j];
    if (ms.name.empty()) throw SchemaError("module " + std::to_string(j + 1) + " has no name");
    if (!module_names.insert(ms.name).second) throw SchemaError("duplicate module name '" + ms.name + "'");
    if (ms.states.empty()) throw SchemaError("module '" + ms.name + "' has no states");

    ImcModule m;
    m.name = ms.name;
    m.states = ms.states;
    {
      std::set<std::string> unique(ms.states.begin(), ms.states.end());
      if (unique.size() != ms.states.size()) throw SchemaError("duplicate state names in module '" + ms.name + "'");
    }
    m.index_states();
    auto state_ref = [&](const std::string& s, const char* role) {
      auto id = m.find_state(s);
      if (!id) throw DanglingReference("module '" + ms.name + "': unknown " + role + " state '" + s + "'");
      return *id;
    };
    m.initial = state_ref(ms.initial, "initial");

    for (const auto& a : ms.actions) m.actions.push_back(*model.find_action(a));
    std::sort(m.actions.begin(), m.actions.end());
    if (std::adjacent_find(m.actions.begin(), m.actions.end()) != m.actions.end())
      throw SchemaError("duplicate action in alphabet of module '" + ms.name + "'");
    for (auto a : m.actions) model.sync_sets_[a].push_back(j);

    if (ms.nothing_action) {
      auto a = model.find_action(*ms.nothing_action);
      if (!a || !m.has_action(*a))
        throw DanglingReference("module '" + ms.name + "': nothing_action '" + *ms.nothing_action +
                                "' is not in its alphabet");
      m.nothing_action = *a;
    }

    for (const auto& e : ms.transitions) {
      auto a = model.find_action(e.label);
      if (!a || !m.has_action(*a))
        throw DanglingReference("module '" + ms.name + "': action '" + e.label + "' is not in its alphabet");
      m.transitions.push_back({state_ref(e.from, "source"), *a, state_ref(e.to, "target")});
    }
    for (const auto& d : ms.delays) {
      if (d.rate <= 0)
        throw NonPositiveRate("module '" + ms.name + "': delay " + d.from + " -> " + d.to + " has rate " +
                              format_rational(d.rate));
      m.delays.push_back({state_ref(d.from, "source"), d.rate, state_ref(d.to, "target"), to_double(d.rate)});
    }
    m.index_states();
    model.modules_.push_back(std::move(m));
  }

  if (check_acyclicity) {
    std::vector<std::vector<std::uint32_t>> sccs;
    for (const auto& m : model.modules_) sccs.push_back(detail::action_sccs(m));
    for (ActionId a = 0; a < model.action_names_.size(); ++a) {
      bool witnessed = false;
      std::string cycle;
      for (PlayerIndex j : model.sync_sets_[a]) {
        const auto& m = model.modules_[j];
        bool cyclic = false;
        for (std::uint32_t t = 0; t < m.transitions.size() && !cyclic; ++t) {
          const auto& e = m.transitions[t];
          if (e.label == a && sccs[j][e.from] == sccs[j][e.to]) {
            cyclic = true;
            if (cycle.empty()) cycle = "module '" + m.name + "': " + detail::describe_cycle(m, model.action_names_, t);
          }
        }
        if (!cyclic) {
          witnessed = true;
          break;
        }
      }
      if (!witnessed)
        throw AcyclicityViolation("action '" + model.action_names_[a] + "' lies on a cycle in every module of Sync(" +
                                  model.action_names_[a] + "); " + cycle);
    }
  }

  std::vector<TargetSet::Cube> cubes;
  for (const auto& cube : spec.target) {
    if (cube.size() != model.modules_.size())
      throw SchemaError("target tuple has " + std::to_string(cube.size()) + " entries, expected " +
                        std::to_string(model.modules_.size()));
    TargetSet::Cube c;
    for (PlayerIndex j = 0; j < cube.size(); ++j) {
      if (!cube[j]) {
        c.emplace_back(std::nullopt);
        continue;
      }
      std::vector<StateId> ids;
      for (const auto& name : *cube[j]) {
        auto id = model.modules_[j].find_state(name);
        if (!id) throw DanglingReference("target refers to unknown state '" + name + "' of module '" +
                                         model.modules_[j].name + "'");
        ids.push_back(*id);
      }
      c.emplace_back(std::move(ids));
    }
    cubes.push_back(std::move(c));
  }
  model.target_ = TargetSet(std::move(cubes));

  std::size_t edges = 1;
  for (const auto& m : model.modules_) edges += m.transitions.size();
  model.closure_budget_ = std::min<std::size_t>(edges * edges + 16, 50'000'000);
  return model;
}

inline ModelSpec to_spec(const DistributedImc& model) {
  ModelSpec spec;
  for (const auto& m : model.modules()) {
    ModuleSpec ms;
    ms.name = m.name;
    ms.states = m.states;
    ms.initial = m.states[m.initial];
    for (auto a : m.actions) ms.actions.push_back(model.action_name(a));
    if (m.nothing_action) ms.nothing_action = model.action_name(*m.nothing_action);
    for (const auto& t : m.transitions)
      ms.transitions.push_back({m.states[t.from], model.action_name(t.label), m.states[t.to]});
    for (const auto& d : m.delays) ms.delays.push_back({m.states[d.from], d.rate, m.states[d.to]});
    spec.modules.push_back(std::move(ms));
  }
  for (const auto& cube : model.target().cubes()) {
    ModelSpec::TargetCube c;
    for (PlayerIndex j = 0; j < cube.size(); ++j) {
      if (!cube[j]) {
        c.emplace_back(std::nullopt);
        continue;
      }
      std::vector<std::string> names;
      for (auto s : *cube[j]) names.push_back(model.module(j).states[s]);
      c.emplace_back(std::move(names));
    }
    spec.target.push_back(std::move(c));
  }
  return spec;
}

// All outgoing action transitions of `state`, or {⊥} when there are none.
inline std::vector<LocalChoice> available_choices(const DistributedImc& model, PlayerIndex player, StateId state) {
  if (player >= model.num_players()) throw UnknownState("no player " + std::to_string(player + 1));
  const auto& m = model.module(player);
  if (state >= m.states.size())
    throw UnknownState("module '" + m.name + "' has no state #" + std::to_string(state));
  std::vector<LocalChoice> out;
  for (auto t : m.out_actions[state]) out.push_back(LocalChoice::of(t));
  if (out.empty()) out.push_back(LocalChoice::bottom());
  return out;
}

inline std::vector<LocalChoice> available_choices(const DistributedImc& model, PlayerIndex player,
                                                  std::string_view state) {
  if (player >= model.num_players()) throw UnknownState("no player " + std::to_string(player + 1));
  auto id = model.module(player).find_state(state);
  if (!id) throw UnknownState("module '" + model.module(player).name + "' has no state '" + std::string(state) + "'");
  return available_choices(model, player, *id);
}

inline bool choice_available(const DistributedImc& model, PlayerIndex player, StateId state, LocalChoice c) {
  const auto& m = model.module(player);
  if (c.is_bottom()) return m.out_actions[state].empty();
  return c.index() < m.transitions.size() && m.transitions[c.index()].from == state;
}

// En(c) = { a | every j in Sync(a) selected an a-labelled transition }, sorted.
inline ActionSet enabled_actions(const DistributedImc& model, const GlobalChoice& choice) {
  ActionSet enabled;
  for (PlayerIndex j = 0; j < choice.size(); ++j) {
    if (choice[j].is_bottom()) continue;
    ActionId a = model.label_of(j, choice[j]);
    if (std::find(enabled.begin(), enabled.end(), a) != enabled.end()) continue;
    bool all = true;
    for (PlayerIndex k : model.sync_set(a)) {
      if (choice[k].is_bottom() || model.label_of(k, choice[k]) != a) {
        all = false;
        break;
      }
    }
    if (all) enabled.insert(std::lower_bound(enabled.begin(), enabled.end(), a), a);
  }
  return enabled;
}

struct GlobalStateHash {
  std::size_t operator()(const GlobalState& s) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (auto v : s) {
      h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace dimc
