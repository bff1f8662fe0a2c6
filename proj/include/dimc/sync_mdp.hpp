#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dimc/linear.hpp"
#include "dimc/model.hpp"
#include "dimc/non_urgent.hpp"

namespace dimc {

inline constexpr std::uint64_t kDefaultPolicyCap = 1'000'000;

inline std::string describe_violations(const NonUrgencyReport& report) {
  std::string out;
  for (const auto& v : report.violations) out += "\n  " + v;
  return out;
}

inline void require_two_player_non_urgent(const DistributedImc& model, const NonUrgencyReport& report) {
  if (model.num_players() != 2)
    throw NotNonUrgent("synthesis is implemented for 2 players, model has " + std::to_string(model.num_players()));
  if (!report.is_non_urgent) throw NotNonUrgent("model is not non-urgent:" + describe_violations(report));
}

// Σ_j: pure memoryless strategies of player j that play ∅_j in every
// synchronisation state, enumerated in mixed radix over the private states
// (first private state varies fastest).
class PolicySpace {
 public:
  PolicySpace(const DistributedImc& model, const NonUrgencyReport& report, PlayerIndex j,
              std::uint64_t cap = kDefaultPolicyCap)
      : player_(j) {
    const auto& m = model.module(j);
    table_.assign(m.states.size(), LocalChoice::bottom());
    if (m.nothing_action) {
      for (StateId s : report.sync_local_states[j])
        for (auto t : m.out_actions[s])
          if (m.transitions[t].label == *m.nothing_action) {
            table_[s] = LocalChoice::of(t);
            break;
          }
    }
    bool saturated = false;
    count_ = 1;
    for (StateId s : report.private_local_states[j]) {
      auto choices = available_choices(model, j, s);
      if (choices.size() > 1) {
        private_states_.push_back(s);
        choices_.push_back(choices);
        if (count_ > std::numeric_limits<std::uint64_t>::max() / choices.size()) saturated = true;
        else count_ *= choices.size();
      } else {
        table_[s] = choices.front();
      }
    }
    if (saturated) count_ = std::numeric_limits<std::uint64_t>::max();
    if (saturated || count_ > cap)
      throw PolicySpaceTooLarge("player " + std::to_string(j + 1) + " has " +
                                    (saturated ? std::string("more than 2^64") : std::to_string(count_)) +
                                    " pure memoryless private strategies (cap " + std::to_string(cap) + ")",
                                count_, saturated);
  }

  PlayerIndex player() const { return player_; }
  std::uint64_t size() const { return count_; }
  // Private states with more than one available choice.
  const std::vector<StateId>& branching_states() const { return private_states_; }

  // Full local table (indexed by state) of strategy number `index`.
  std::vector<LocalChoice> decode(std::uint64_t index) const {
    std::vector<LocalChoice> table = table_;
    for (std::size_t i = 0; i < private_states_.size(); ++i) {
      const auto& options = choices_[i];
      table[private_states_[i]] = options[index % options.size()];
      index /= options.size();
    }
    return table;
  }

 private:
  PlayerIndex player_;
  std::vector<LocalChoice> table_;
  std::vector<StateId> private_states_;
  std::vector<std::vector<LocalChoice>> choices_;
  std::uint64_t count_ = 1;
};

inline PolicySpace enumerate_policy_space(const DistributedImc& model, PlayerIndex j,
                                          std::uint64_t cap = kDefaultPolicyCap) {
  auto report = check_non_urgent(model);
  if (!report.is_non_urgent) throw NotNonUrgent("model is not non-urgent:" + describe_violations(report));
  return PolicySpace(model, report, j, cap);
}

// S' = {initial} ∪ sync_1 × sync_2, initial first, the rest in lexicographic
// order of local state names.
inline std::vector<GlobalState> enumerate_sync_states(const DistributedImc& model, const NonUrgencyReport& report) {
  require_two_player_non_urgent(model, report);
  std::vector<GlobalState> out{model.initial_state()};
  for (StateId a : report.sync_local_states[0])
    for (StateId b : report.sync_local_states[1]) {
      GlobalState s{a, b};
      if (s != out.front()) out.push_back(s);
    }
  return out;
}

inline std::vector<GlobalState> enumerate_sync_states(const DistributedImc& model) {
  return enumerate_sync_states(model, check_non_urgent(model));
}

template <typename Scalar>
struct FragmentDistribution {
  std::vector<std::pair<std::size_t, Scalar>> to;  // (index into S', probability), sorted
  Scalar diverge{0};
};

namespace detail {

template <typename Scalar>
Scalar rate_of(const DelayTransition& d) {
  if constexpr (std::is_same_v<Scalar, Rational>) return d.rate;
  else return d.rate_value;
}

}  // namespace detail

// Embedded-chain analysis of the private fragment entered at `start` under
// the pure memoryless pair (σ_1, σ_2), given as full local tables.
template <typename Scalar>
class FragmentSolver {
 public:
  FragmentSolver(const DistributedImc& model, const std::vector<GlobalState>& sync_states)
      : model_(model), sync_states_(sync_states) {
    for (std::size_t i = 0; i < sync_states_.size(); ++i) sync_index_.emplace(sync_states_[i], i);
  }

  std::optional<std::size_t> sync_index(const GlobalState& s) const {
    auto it = sync_index_.find(s);
    if (it == sync_index_.end()) return std::nullopt;
    return it->second;
  }

  // Runs the zero-time closure of player j alone: private actions chosen by
  // σ_j fire until σ_j picks ⊥ or a synchronisation action.
  StateId close(PlayerIndex j, StateId s, const std::vector<LocalChoice>& sigma) const {
    const auto& m = model_.module(j);
    for (std::size_t guard = 0;; ++guard) {
      if (guard > m.states.size())
        throw ClosureBudgetExceeded("private actions of module '" + m.name + "' loop without time passing");
      LocalChoice c = sigma[s];
      if (c.is_bottom() || !model_.is_private_action(m.transitions[c.index()].label)) return s;
      s = m.transitions[c.index()].to;
    }
  }

  GlobalState close(GlobalState s, const std::vector<LocalChoice>& sigma1, const std::vector<LocalChoice>& sigma2) const {
    s[0] = close(0, s[0], sigma1);
    s[1] = close(1, s[1], sigma2);
    return s;
  }

  // With `leave_start`, a start state that is itself in S' (the private
  // initial state) is left rather than absorbed immediately.
  FragmentDistribution<Scalar> solve(const GlobalState& start, const std::vector<LocalChoice>& sigma1,
                                     const std::vector<LocalChoice>& sigma2, bool leave_start = false) const {
    const std::vector<LocalChoice>* sigma[2] = {&sigma1, &sigma2};
    GlobalState first = close(start, sigma1, sigma2);
    FragmentDistribution<Scalar> out;
    if (auto i = sync_index(first); i && !(leave_start && first == start)) {
      out.to.emplace_back(*i, Scalar(1));
      return out;
    }

    // Explore closed private states (and the left start state).
    std::unordered_map<GlobalState, std::size_t, GlobalStateHash> index;
    std::vector<GlobalState> states{first};
    index.emplace(first, 0);
    std::vector<std::vector<std::pair<GlobalState, Scalar>>> edges;
    for (std::size_t head = 0; head < states.size(); ++head) {
      GlobalState s = states[head];
      Scalar total{0};
      for (PlayerIndex j = 0; j < 2; ++j)
        for (auto d : model_.module(j).out_delays[s[j]]) total += detail::rate_of<Scalar>(model_.module(j).delays[d]);
      std::vector<std::pair<GlobalState, Scalar>> out_edges;
      if (total > 0) {
        for (PlayerIndex j = 0; j < 2; ++j) {
          const auto& m = model_.module(j);
          for (auto d : m.out_delays[s[j]]) {
            GlobalState next = s;
            next[j] = close(j, m.delays[d].to, *sigma[j]);
            out_edges.emplace_back(next, detail::rate_of<Scalar>(m.delays[d]) / total);
            if (!sync_index(next) && index.emplace(next, states.size()).second) states.push_back(next);
          }
        }
      }
      edges.push_back(std::move(out_edges));
    }

    // Backward reachability of S' inside the fragment; other states only
    // feed the DIVERGE sink.
    const std::size_t n = states.size();
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<bool> alive(n, false);
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& [next, p] : edges[i]) {
        if (sync_index(next)) {
          if (!alive[i]) {
            alive[i] = true;
            queue.push_back(i);
          }
        } else {
          preds[index.at(next)].push_back(i);
        }
      }
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (auto p : preds[queue[h]])
        if (!alive[p]) {
          alive[p] = true;
          queue.push_back(p);
        }
    if (!alive[0]) {
      out.diverge = Scalar(1);
      return out;
    }

    // Unknowns: alive states. Targets: S' states hit, then DIVERGE.
    std::vector<std::size_t> unknown(n, std::numeric_limits<std::size_t>::max());
    std::size_t unknowns = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (alive[i]) unknown[i] = unknowns++;
    std::map<std::size_t, std::size_t> column;  // S' index -> column
    for (std::size_t i = 0; i < n; ++i)
      if (alive[i])
        for (const auto& [next, p] : edges[i])
          if (auto k = sync_index(next)) column.emplace(*k, 0);
    std::size_t k = 0;
    for (auto& [sidx, col] : column) col = k++;
    const std::size_t diverge_col = k++;

    std::vector<SparseRow<Scalar>> q(unknowns), r(unknowns);
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      auto& qi = q[unknown[i]];
      auto& ri = r[unknown[i]];
      for (const auto& [next, p] : edges[i]) {
        if (auto sidx = sync_index(next)) ri.emplace_back(column.at(*sidx), p);
        else if (std::size_t t = index.at(next); alive[t]) qi.emplace_back(unknown[t], p);
        else ri.emplace_back(diverge_col, p);
      }
    }
    auto x = solve_absorption(q, r, k);
    const auto& row = x[unknown[0]];
    for (const auto& [sidx, col] : column)
      if (row[col] != Scalar(0)) out.to.emplace_back(sidx, row[col]);
    out.diverge = row[diverge_col];
    return out;
  }

 private:
  const DistributedImc& model_;
  const std::vector<GlobalState>& sync_states_;
  std::unordered_map<GlobalState, std::size_t, GlobalStateHash> sync_index_;
};

template <typename Scalar>
FragmentDistribution<Scalar> fragment_absorption(const DistributedImc& model, const GlobalState& start,
                                                 const std::vector<LocalChoice>& sigma1,
                                                 const std::vector<LocalChoice>& sigma2) {
  auto states = enumerate_sync_states(model);
  FragmentSolver<Scalar> solver(model, states);
  return solver.solve(start, sigma1, sigma2);
}

enum class MdpActionKind { Sync, Initial, Bottom };

template <typename Scalar>
struct MdpAction {
  using Kind = MdpActionKind;
  Kind kind = Kind::Bottom;
  LocalChoice c1, c2;               // Sync: the agreeing local choices
  std::uint64_t sigma1 = 0, sigma2 = 0;  // indices into Σ_1, Σ_2
  std::vector<std::pair<std::size_t, Scalar>> dist;
  Scalar diverge{0};
  std::uint64_t duplicates = 0;  // identical rows folded into this one
};

template <typename Scalar>
struct SyncMdp {
  std::vector<GlobalState> states;  // S'; index 0 is the initial state
  std::vector<bool> target;
  std::vector<std::vector<MdpAction<Scalar>>> actions;
  std::size_t defined_actions = 0;  // before deduplication

  std::size_t num_actions() const {
    std::size_t n = 0;
    for (const auto& a : actions) n += a.size();
    return n;
  }
};

struct BuildOptions {
  std::uint64_t policy_cap = kDefaultPolicyCap;
};

// M_G for a 2-player non-urgent model whose target consists of
// synchronisation states. A private initial state offers one action per
// (σ_1, σ_2), its fragment starting at the initial state itself.
template <typename Scalar>
SyncMdp<Scalar> build_mdp(const DistributedImc& model, const BuildOptions& options = {}) {
  auto report = check_non_urgent(model);
  require_two_player_non_urgent(model, report);
  SyncMdp<Scalar> mdp;
  mdp.states = enumerate_sync_states(model, report);

  // T ⊆ S': every target global state must be a synchronisation state.
  {
    std::vector<std::string> offending;
    const auto& m0 = model.module(0);
    const auto& m1 = model.module(1);
    const GlobalState init = model.initial_state();
    for (StateId a = 0; a < m0.states.size(); ++a)
      for (StateId b = 0; b < m1.states.size(); ++b) {
        GlobalState s{a, b};
        if (!model.target().contains(s)) continue;
        if (s == init || (report.is_sync(0, a) && report.is_sync(1, b))) continue;
        offending.push_back("(" + model.state_name(s) + ")");
      }
    if (!offending.empty()) {
      std::string list;
      for (std::size_t i = 0; i < offending.size() && i < 20; ++i) list += (i ? ", " : "") + offending[i];
      if (offending.size() > 20) list += ", ...";
      throw TargetNotSync("target contains private global states: " + list);
    }
  }

  PolicySpace sigma1(model, report, 0, options.policy_cap), sigma2(model, report, 1, options.policy_cap);
  std::vector<std::vector<LocalChoice>> tables1, tables2;
  for (std::uint64_t i = 0; i < sigma1.size(); ++i) tables1.push_back(sigma1.decode(i));
  for (std::uint64_t i = 0; i < sigma2.size(); ++i) tables2.push_back(sigma2.decode(i));

  FragmentSolver<Scalar> solver(model, mdp.states);
  std::map<std::tuple<GlobalState, std::uint64_t, std::uint64_t, bool>, FragmentDistribution<Scalar>> memo;
  auto fragment = [&](const GlobalState& start, std::uint64_t i1, std::uint64_t i2,
                      bool leave_start = false) -> const FragmentDistribution<Scalar>& {
    auto key = std::make_tuple(start, i1, i2, leave_start);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, solver.solve(start, tables1[i1], tables2[i2], leave_start)).first;
    return it->second;
  };

  const GlobalState init = model.initial_state();
  const bool init_private = !(report.is_sync(0, init[0]) && report.is_sync(1, init[1]));
  mdp.target.resize(mdp.states.size());
  mdp.actions.resize(mdp.states.size());
  for (std::size_t si = 0; si < mdp.states.size(); ++si) {
    const GlobalState& s = mdp.states[si];
    mdp.target[si] = model.target().contains(s);
    auto& acts = mdp.actions[si];
    auto add = [&](MdpAction<Scalar> act) {
      ++mdp.defined_actions;
      for (auto& existing : acts) {
        if (existing.dist == act.dist && existing.diverge == act.diverge) {
          ++existing.duplicates;
          return;
        }
      }
      acts.push_back(std::move(act));
    };
    if (si == 0 && init_private) {
      for (std::uint64_t i1 = 0; i1 < sigma1.size(); ++i1)
        for (std::uint64_t i2 = 0; i2 < sigma2.size(); ++i2) {
          const auto& f = fragment(s, i1, i2, true);
          MdpAction<Scalar> act;
          act.kind = MdpAction<Scalar>::Kind::Initial;
          act.c1 = tables1[i1][s[0]];
          act.c2 = tables2[i2][s[1]];
          act.sigma1 = i1;
          act.sigma2 = i2;
          act.dist = f.to;
          act.diverge = f.diverge;
          add(std::move(act));
        }
    } else {
      for (auto c1 : available_choices(model, 0, s[0])) {
        if (c1.is_bottom()) continue;
        for (auto c2 : available_choices(model, 1, s[1])) {
          if (c2.is_bottom()) continue;
          GlobalChoice c{c1, c2};
          auto en = enabled_actions(model, c);
          if (en.size() != 1) continue;
          // Both players take part in a synchronisation on the agreed label.
          ActionId a = en.front();
          GlobalState post = s;
          for (PlayerIndex j : model.sync_set(a)) post[j] = model.target_of(j, c[j]);
          for (std::uint64_t i1 = 0; i1 < sigma1.size(); ++i1)
            for (std::uint64_t i2 = 0; i2 < sigma2.size(); ++i2) {
              const auto& f = fragment(post, i1, i2);
              MdpAction<Scalar> act;
              act.kind = MdpAction<Scalar>::Kind::Sync;
              act.c1 = c1;
              act.c2 = c2;
              act.sigma1 = i1;
              act.sigma2 = i2;
              act.dist = f.to;
              act.diverge = f.diverge;
              add(std::move(act));
            }
        }
      }
    }
    if (acts.empty()) {
      MdpAction<Scalar> bottom;
      bottom.kind = MdpAction<Scalar>::Kind::Bottom;
      bottom.dist = {{si, Scalar(1)}};
      acts.push_back(std::move(bottom));
      ++mdp.defined_actions;
    }
  }
  return mdp;
}

inline SyncMdp<double> to_double_mdp(const SyncMdp<Rational>& exact) {
  SyncMdp<double> out;
  out.states = exact.states;
  out.target = exact.target;
  out.defined_actions = exact.defined_actions;
  out.actions.resize(exact.actions.size());
  for (std::size_t s = 0; s < exact.actions.size(); ++s)
    for (const auto& a : exact.actions[s]) {
      MdpAction<double> d;
      d.kind = a.kind;
      d.c1 = a.c1;
      d.c2 = a.c2;
      d.sigma1 = a.sigma1;
      d.sigma2 = a.sigma2;
      d.duplicates = a.duplicates;
      for (const auto& [t, p] : a.dist) d.dist.emplace_back(t, to_double(p));
      d.diverge = to_double(a.diverge);
      out.actions[s].push_back(std::move(d));
    }
  return out;
}

}  // namespace dimc
