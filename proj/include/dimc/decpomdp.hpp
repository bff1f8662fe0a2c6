#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dimc/estimate.hpp"
#include "dimc/model_io.hpp"
#include "dimc/rational.hpp"
#include "dimc/semantics.hpp"
#include "dimc/strategy.hpp"

namespace dimc {

// Discrete-time decentralised POMDP. Global actions and global observations
// are encoded in mixed radix, player 0 least significant.
struct DecPomdp {
  using Dist = std::vector<std::pair<std::size_t, Rational>>;

  std::vector<std::string> states;
  std::size_t initial = 0;
  std::vector<std::vector<std::string>> actions;       // per player
  std::vector<std::vector<std::string>> observations;  // per player
  std::vector<std::vector<Dist>> P;                     // [s][joint action] over successor states
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Dist> O;  // (s, joint, s') over joint observations
  std::vector<bool> target;

  std::size_t num_players() const { return actions.size(); }

  static std::size_t joint_size(const std::vector<std::vector<std::string>>& sets) {
    std::size_t n = 1;
    for (const auto& s : sets) n *= s.size();
    return n;
  }
  std::size_t num_joint_actions() const { return joint_size(actions); }
  std::size_t num_joint_observations() const { return joint_size(observations); }

  static std::vector<std::size_t> decode(std::size_t code, const std::vector<std::vector<std::string>>& sets) {
    std::vector<std::size_t> out;
    for (const auto& s : sets) {
      out.push_back(code % s.size());
      code /= s.size();
    }
    return out;
  }
  static std::size_t encode(const std::vector<std::size_t>& parts, const std::vector<std::vector<std::string>>& sets) {
    std::size_t code = 0;
    for (std::size_t j = sets.size(); j-- > 0;) code = code * sets[j].size() + parts[j];
    return code;
  }

  const Dist& observation(std::size_t s, std::size_t a, std::size_t s2) const { return O.at({s, a, s2}); }
};

namespace detail {

inline std::size_t index_of(const std::vector<std::string>& names, const std::string& name, const std::string& what) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DanglingReference("unknown " + what + " '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

inline std::vector<std::string> split_commas(const std::string& key) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    auto comma = key.find(',', pos);
    out.push_back(key.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline void check_normalized(const DecPomdp::Dist& dist, const std::string& where) {
  Rational sum = 0;
  for (const auto& [x, p] : dist) {
    if (p < 0) throw DistributionNotNormalized(where + " has a negative probability");
    sum += p;
  }
  if (abs(sum - 1) > Rational(1, 1'000'000'000))
    throw DistributionNotNormalized(where + " sums to " + format_rational(sum) + ", not 1");
}

}  // namespace detail

// {"states", "initial", "players", "actions", "observations", "P", "O", "target"};
// P and O entries without "a" (O entries also without "s" or "s2") apply to
// every value not covered by a more specific entry.
inline DecPomdp load_decpomdp(const Json& doc) {
  using detail::require;
  DecPomdp m;
  m.states = detail::string_list(require(doc, "states", "DEC-POMDP"), "DEC-POMDP states");
  if (m.states.empty()) throw SchemaError("DEC-POMDP needs at least one state");
  if (std::set<std::string>(m.states.begin(), m.states.end()).size() != m.states.size())
    throw SchemaError("DEC-POMDP state names must be distinct");
  m.initial = detail::index_of(m.states, detail::require_string(doc, "initial", "DEC-POMDP"), "state");
  const Json& players = require(doc, "players", "DEC-POMDP");
  if (!players.is_number_unsigned() || players.get<std::size_t>() == 0)
    throw SchemaError("DEC-POMDP 'players' must be a positive integer");
  const std::size_t n = players.get<std::size_t>();
  const Json& acts = require(doc, "actions", "DEC-POMDP");
  const Json& obs = require(doc, "observations", "DEC-POMDP");
  if (!acts.is_array() || acts.size() != n || !obs.is_array() || obs.size() != n)
    throw SchemaError("DEC-POMDP 'actions' and 'observations' need one list per player");
  std::set<std::string> all_actions;
  for (std::size_t j = 0; j < n; ++j) {
    m.actions.push_back(detail::string_list(acts[j], "actions of player " + std::to_string(j + 1)));
    m.observations.push_back(detail::string_list(obs[j], "observations of player " + std::to_string(j + 1)));
    if (m.actions[j].empty() || m.observations[j].empty())
      throw SchemaError("player " + std::to_string(j + 1) + " needs at least one action and one observation");
    if (std::set<std::string>(m.observations[j].begin(), m.observations[j].end()).size() != m.observations[j].size())
      throw SchemaError("observations of player " + std::to_string(j + 1) + " must be distinct");
    for (const auto& a : m.actions[j])
      if (!all_actions.insert(a).second)
        throw SchemaError("action '" + a + "' appears twice; action sets must be pairwise disjoint");
  }

  auto joint_of = [&](const Json& list, const std::vector<std::vector<std::string>>& sets, const std::string& what) {
    if (!list.is_array() || list.size() != n)
      throw SchemaError(what + " must list one entry per player");
    std::vector<std::size_t> parts;
    for (std::size_t j = 0; j < n; ++j) {
      if (!list[j].is_string()) throw SchemaError(what + " entries must be strings");
      parts.push_back(detail::index_of(sets[j], list[j].get<std::string>(), what));
    }
    return DecPomdp::encode(parts, sets);
  };
  auto read_dist = [&](const Json& dist, const std::string& where, auto&& key_index) {
    if (!dist.is_object()) throw SchemaError(where + " 'dist' must be an object");
    DecPomdp::Dist out;
    for (auto it = dist.begin(); it != dist.end(); ++it) {
      Rational p = detail::json_rational(it.value(), where);
      if (p != 0) out.emplace_back(key_index(it.key()), p);
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    detail::check_normalized(out, where);
    return out;
  };

  const std::size_t S = m.states.size(), A = m.num_joint_actions();
  m.P.assign(S, std::vector<DecPomdp::Dist>(A));
  std::vector<std::vector<int>> p_rank(S, std::vector<int>(A, -1));
  const Json& ps = require(doc, "P", "DEC-POMDP");
  if (!ps.is_array()) throw SchemaError("DEC-POMDP 'P' must be a list");
  for (const auto& e : ps) {
    std::size_t s = detail::index_of(m.states, detail::require_string(e, "s", "P entry"), "state");
    std::string where = "P entry for state '" + m.states[s] + "'";
    auto dist = read_dist(require(e, "dist", where), where,
                          [&](const std::string& k) { return detail::index_of(m.states, k, "state"); });
    int rank = e.contains("a") ? 1 : 0;
    std::vector<std::size_t> targets;
    if (rank) targets.push_back(joint_of(e.at("a"), m.actions, where + " action"));
    else for (std::size_t a = 0; a < A; ++a) targets.push_back(a);
    for (auto a : targets) {
      if (p_rank[s][a] == rank) throw SchemaError(where + " is given twice");
      if (p_rank[s][a] > rank) continue;
      p_rank[s][a] = rank;
      m.P[s][a] = dist;
    }
  }
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a)
      if (p_rank[s][a] < 0) throw SchemaError("P is undefined for state '" + m.states[s] + "'");

  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, int> o_rank;
  const Json& os = require(doc, "O", "DEC-POMDP");
  if (!os.is_array()) throw SchemaError("DEC-POMDP 'O' must be a list");
  for (const auto& e : os) {
    std::string where = "O entry";
    auto dist = read_dist(require(e, "dist", where), where, [&](const std::string& k) {
      auto parts = detail::split_commas(k);
      if (parts.size() != n) throw SchemaError("observation key '" + k + "' must name one observation per player");
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < n; ++j) idx.push_back(detail::index_of(m.observations[j], parts[j], "observation"));
      return DecPomdp::encode(idx, m.observations);
    });
    std::optional<std::size_t> s, a, s2;
    if (e.contains("s")) s = detail::index_of(m.states, detail::require_string(e, "s", where), "state");
    if (e.contains("a")) a = joint_of(e.at("a"), m.actions, where + " action");
    if (e.contains("s2")) s2 = detail::index_of(m.states, detail::require_string(e, "s2", where), "state");
    int rank = int(s.has_value()) + int(a.has_value()) + int(s2.has_value());
    for (std::size_t x = 0; x < S; ++x) {
      if (s && *s != x) continue;
      for (std::size_t y = 0; y < A; ++y) {
        if (a && *a != y) continue;
        for (std::size_t z = 0; z < S; ++z) {
          if (s2 && *s2 != z) continue;
          auto key = std::make_tuple(x, y, z);
          auto it = o_rank.find(key);
          if (it != o_rank.end() && it->second == rank && rank == 3) throw SchemaError(where + " is given twice");
          if (it != o_rank.end() && it->second >= rank) continue;
          o_rank[key] = rank;
          m.O[key] = dist;
        }
      }
    }
  }
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a)
      for (const auto& [s2, p] : m.P[s][a])
        if (!m.O.count({s, a, s2}))
          throw SchemaError("O is undefined for a transition from '" + m.states[s] + "' to '" + m.states[s2] + "'");

  m.target.assign(S, false);
  for (const auto& t : detail::string_list(require(doc, "target", "DEC-POMDP"), "DEC-POMDP target"))
    m.target[detail::index_of(m.states, t, "state")] = true;
  return m;
}

inline DecPomdp load_decpomdp_file(const std::filesystem::path& path) {
  return load_decpomdp(detail::read_json_file(path));
}

// Pure observation-based strategy of one player: exact observation
// sequences first, then the last observation ("" before any), then a
// default action.
struct DecPlayerStrategy {
  std::map<std::vector<std::size_t>, std::size_t> table;
  std::map<std::size_t, std::size_t> last;
  std::optional<std::size_t> initial;  // last-observation rule for the empty sequence
  std::optional<std::size_t> fallback;

  std::size_t act(const std::vector<std::size_t>& obs, std::size_t player) const {
    if (auto it = table.find(obs); it != table.end()) return it->second;
    if (obs.empty()) {
      if (initial) return *initial;
    } else if (auto it = last.find(obs.back()); it != last.end()) {
      return it->second;
    }
    if (fallback) return *fallback;
    throw UndefinedProfileEntry("DEC-POMDP strategy of player " + std::to_string(player + 1) +
                                " has no action for an observation sequence of length " + std::to_string(obs.size()));
  }
};

using DecStrategyProfile = std::vector<DecPlayerStrategy>;

// {"players": [{"table": {"o1,o2": a}, "last": {"o": a, "": a}, "default": a}]}
inline DecStrategyProfile load_dec_profile(const DecPomdp& m, const Json& doc) {
  const Json& players = detail::require(doc, "players", "DEC-POMDP profile");
  if (!players.is_array() || players.size() != m.num_players())
    throw SchemaError("DEC-POMDP profile must list exactly " + std::to_string(m.num_players()) + " players");
  DecStrategyProfile out(m.num_players());
  for (std::size_t j = 0; j < m.num_players(); ++j) {
    const Json& p = players[j];
    auto action = [&](const Json& v) {
      if (!v.is_string()) throw SchemaError("DEC-POMDP profile actions must be strings");
      return detail::index_of(m.actions[j], v.get<std::string>(), "action of player " + std::to_string(j + 1));
    };
    if (auto t = p.find("table"); t != p.end())
      for (auto it = t->begin(); it != t->end(); ++it) {
        std::vector<std::size_t> seq;
        if (!it.key().empty())
          for (const auto& o : detail::split_commas(it.key()))
            seq.push_back(detail::index_of(m.observations[j], o, "observation"));
        out[j].table[seq] = action(it.value());
      }
    if (auto l = p.find("last"); l != p.end())
      for (auto it = l->begin(); it != l->end(); ++it) {
        if (it.key().empty()) out[j].initial = action(it.value());
        else out[j].last[detail::index_of(m.observations[j], it.key(), "observation")] = action(it.value());
      }
    if (auto d = p.find("default"); d != p.end()) out[j].fallback = action(*d);
  }
  return out;
}

inline DecStrategyProfile load_dec_profile_file(const DecPomdp& m, const std::filesystem::path& path) {
  return load_dec_profile(m, detail::read_json_file(path));
}

namespace detail {

inline std::size_t sample_dist(const DecPomdp::Dist& dist, Rng& rng) {
  double u = rng.uniform(), acc = 0.0;
  for (const auto& [x, p] : dist) {
    acc += to_double(p);
    if (u < acc) return x;
  }
  return dist.back().first;
}

}  // namespace detail

// Reach probability of the target within `horizon` steps (states s_0..s_H).
inline ReachEstimate simulate_decpomdp(const DecPomdp& m, const DecStrategyProfile& profile, std::size_t horizon,
                                       std::size_t samples, std::uint64_t seed) {
  if (horizon == 0) throw SchemaError("horizon must be at least 1");
  if (samples == 0) throw SchemaError("samples must be at least 1");
  const std::size_t n = m.num_players();
  std::atomic<std::size_t> hits{0};
  parallel_chunks(samples, [&](unsigned, std::size_t begin, std::size_t end) {
    std::size_t h = 0;
    std::vector<std::vector<std::size_t>> obs(n);
    std::vector<std::size_t> act(n);
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = Rng::derive(seed, i, Stream::Delays);
      for (auto& o : obs) o.clear();
      std::size_t s = m.initial;
      bool hit = m.target[s];
      for (std::size_t step = 0; step < horizon && !hit; ++step) {
        for (std::size_t j = 0; j < n; ++j) act[j] = profile[j].act(obs[j], j);
        std::size_t a = DecPomdp::encode(act, m.actions);
        std::size_t s2 = detail::sample_dist(m.P[s][a], rng);
        auto o = DecPomdp::decode(detail::sample_dist(m.observation(s, a, s2), rng), m.observations);
        for (std::size_t j = 0; j < n; ++j) obs[j].push_back(o[j]);
        s = s2;
        hit = m.target[s];
      }
      h += hit;
    }
    hits += h;
  });
  return ReachEstimate::from_counts(hits, samples, 0);
}

// Names used by the reduction, kept in one place so the strategy
// translation and the target encoding agree with the construction.
struct ReductionNames {
  static std::string out_action(std::size_t j, const std::string& a) { return "out" + std::to_string(j + 1) + ":" + a; }
  static std::string in_action(std::size_t j, const std::string& o) { return "in" + std::to_string(j + 1) + ":" + o; }
  static std::string observed(const std::string& o) { return "obs:" + o; }
  static std::string round_start(const std::string& s) { return "[" + s + "]"; }
};

// Players 1..n keep their last observation, output their action and input
// the next observation through a round-robin delay cycle. The main module
// (last player) stores the DEC-POMDP state, inputs the actions one by one
// through round-robin cycles, draws successor and observations by a single
// delay race with rates cycle_rate·P·O, and outputs the observations one by
// one. Every generated state has a delay transition.
inline ModelSpec reduce_to_spec(const DecPomdp& m, const Rational& cycle_rate) {
  if (cycle_rate <= 0) throw NonPositiveRate("cycle rate must be positive");
  using N = ReductionNames;
  const std::size_t n = m.num_players();
  const Rational rate = cycle_rate;
  ModelSpec spec;
  for (std::size_t j = 0; j < n; ++j) {
    ModuleSpec p;
    p.name = "P" + std::to_string(j + 1);
    p.initial = "init";
    p.states.push_back("init");
    for (const auto& o : m.observations[j]) p.states.push_back(N::observed(o));
    p.states.push_back("in");
    const std::size_t L = m.observations[j].size();
    for (std::size_t k = 0; k < L; ++k) p.states.push_back("in#" + std::to_string(k + 1));
    for (const auto& a : m.actions[j]) p.actions.push_back(N::out_action(j, a));
    for (const auto& o : m.observations[j]) p.actions.push_back(N::in_action(j, o));
    std::vector<std::string> deciding{"init"};
    for (const auto& o : m.observations[j]) deciding.push_back(N::observed(o));
    for (const auto& s : deciding) {
      for (const auto& a : m.actions[j]) p.transitions.push_back({s, N::out_action(j, a), "in"});
      p.delays.push_back({s, rate, s});
    }
    p.delays.push_back({"in", rate, "in#1"});
    for (std::size_t k = 0; k < L; ++k) {
      std::string here = "in#" + std::to_string(k + 1);
      p.delays.push_back({here, rate, "in#" + std::to_string((k + 1) % L + 1)});
      p.transitions.push_back({here, N::in_action(j, m.observations[j][k]), N::observed(m.observations[j][k])});
    }
    spec.modules.push_back(std::move(p));
  }

  ModuleSpec main;
  main.name = "Main";
  main.initial = N::round_start(m.states[m.initial]);
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& a : m.actions[j]) main.actions.push_back(N::out_action(j, a));
    for (const auto& o : m.observations[j]) main.actions.push_back(N::in_action(j, o));
  }
  auto collected = [&](std::size_t s, const std::vector<std::size_t>& act, std::size_t count) {
    if (count == 0) return N::round_start(m.states[s]);
    std::string out = "[" + m.states[s] + "|";
    for (std::size_t k = 0; k < count; ++k) out += (k ? "," : "") + m.actions[k][act[k]];
    return out + "]";
  };
  auto output = [&](std::size_t s2, const std::vector<std::size_t>& o, std::size_t k) {
    std::string out = "out[" + m.states[s2] + "|";
    for (std::size_t j = 0; j < n; ++j) out += (j ? "," : "") + m.observations[j][o[j]];
    return out + "]@" + std::to_string(k + 1);
  };
  std::set<std::string> seen;
  auto add_state = [&](const std::string& name) {
    if (!seen.insert(name).second) throw NameCollision("reduction produced the state name '" + name + "' twice");
    main.states.push_back(name);
  };
  std::set<std::pair<std::size_t, std::size_t>> outputs;  // (s', joint observation)
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    // Input gadgets for every prefix of collected actions.
    std::vector<std::size_t> act(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t prefixes = 1;
      for (std::size_t j = 0; j < k; ++j) prefixes *= m.actions[j].size();
      for (std::size_t code = 0; code < prefixes; ++code) {
        std::size_t c = code;
        for (std::size_t j = 0; j < k; ++j) {
          act[j] = c % m.actions[j].size();
          c /= m.actions[j].size();
        }
        std::string entry = collected(s, act, k);
        add_state(entry);
        const std::size_t r = m.actions[k].size();
        main.delays.push_back({entry, rate, entry + "#1"});
        for (std::size_t x = 0; x < r; ++x) {
          std::string here = entry + "#" + std::to_string(x + 1);
          add_state(here);
          main.delays.push_back({here, rate, entry + "#" + std::to_string((x + 1) % r + 1)});
          act[k] = x;
          main.transitions.push_back({here, N::out_action(k, m.actions[k][x]), collected(s, act, k + 1)});
        }
      }
    }
    // Branching states: one delay per (s', o) with rate cycle_rate·P·O.
    for (std::size_t a = 0; a < m.num_joint_actions(); ++a) {
      auto parts = DecPomdp::decode(a, m.actions);
      std::string branch = collected(s, parts, n);
      add_state(branch);
      for (const auto& [s2, p] : m.P[s][a])
        for (const auto& [o, q] : m.observation(s, a, s2)) {
          main.delays.push_back({branch, Rational(cycle_rate * p * q), output(s2, DecPomdp::decode(o, m.observations), 0)});
          outputs.emplace(s2, o);
        }
    }
  }
  for (const auto& [s2, o] : outputs) {
    auto parts = DecPomdp::decode(o, m.observations);
    for (std::size_t k = 0; k < n; ++k) {
      std::string here = output(s2, parts, k);
      add_state(here);
      std::string next = k + 1 < n ? output(s2, parts, k + 1) : N::round_start(m.states[s2]);
      main.transitions.push_back({here, N::in_action(k, m.observations[k][parts[k]]), next});
      main.delays.push_back({here, rate, here});
    }
  }
  spec.modules.push_back(std::move(main));

  ModelSpec::TargetCube cube(n + 1);
  std::vector<std::string> goal;
  for (std::size_t s = 0; s < m.states.size(); ++s)
    if (m.target[s]) goal.push_back(N::round_start(m.states[s]));
  if (!goal.empty()) {
    cube[n] = goal;
    spec.target.push_back(std::move(cube));
  }
  return spec;
}

inline DistributedImc reduce_to_dimc(const DecPomdp& m, const Rational& cycle_rate = Rational(1)) {
  return build_model(reduce_to_spec(m, cycle_rate), true);
}

// Counts round starts of the main module, i.e. completed DEC-POMDP steps.
inline RoundLimit reduction_round_limit(const DistributedImc& imc, const DecPomdp& m, std::size_t horizon) {
  RoundLimit limit;
  limit.player = m.num_players();
  const auto& main = imc.module(limit.player);
  limit.marks.assign(main.states.size(), false);
  for (const auto& s : m.states) limit.marks[*main.find_state(ReductionNames::round_start(s))] = true;
  limit.limit = horizon;
  return limit;
}

// Player j of the reduced model plays the DEC-POMDP strategy on the sequence
// of observations it has input so far.
class TranslatedDecStrategy final : public LocalStrategy {
 public:
  TranslatedDecStrategy(const DistributedImc& imc, const DecPomdp& m, std::size_t j, DecPlayerStrategy strategy)
      : player_(j), strategy_(std::move(strategy)) {
    const auto& mod = imc.module(j);
    observation_of_.assign(imc.num_actions(), kNone);
    for (std::size_t o = 0; o < m.observations[j].size(); ++o)
      observation_of_[*imc.find_action(ReductionNames::in_action(j, m.observations[j][o]))] = o;
    out_.assign(mod.states.size(), std::vector<LocalChoice>(m.actions[j].size(), LocalChoice::bottom()));
    single_.assign(mod.states.size(), LocalChoice::bottom());
    deciding_.assign(mod.states.size(), false);
    for (StateId s = 0; s < mod.states.size(); ++s) {
      for (auto t : mod.out_actions[s]) {
        const auto& label = imc.action_name(mod.transitions[t].label);
        for (std::size_t a = 0; a < m.actions[j].size(); ++a)
          if (label == ReductionNames::out_action(j, m.actions[j][a])) {
            out_[s][a] = LocalChoice::of(t);
            deciding_[s] = true;
          }
        single_[s] = LocalChoice::of(t);
      }
    }
  }

  LocalChoice decide(const LocalHistory& h) const {
    const StateId s = h.state();
    if (!deciding_[s]) return single_[s];
    std::vector<std::size_t> obs;
    for (const auto& step : h.steps())
      if (step.label.is_action() && observation_of_[step.label.value] != kNone)
        obs.push_back(observation_of_[step.label.value]);
    return out_[s][strategy_.act(obs, player_)];
  }

  ChoiceDistribution distribution(const LocalHistory& h) const override { return {{decide(h), 1.0}}; }
  LocalChoice sample(const LocalHistory& h, Rng&) const override { return decide(h); }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t player_;
  DecPlayerStrategy strategy_;
  std::vector<std::size_t> observation_of_;
  std::vector<std::vector<LocalChoice>> out_;
  std::vector<LocalChoice> single_;
  std::vector<bool> deciding_;
};

inline std::shared_ptr<LocalProfile> translate_dec_profile(const DistributedImc& imc, const DecPomdp& m,
                                                           const DecStrategyProfile& profile) {
  std::vector<std::shared_ptr<const LocalStrategy>> players;
  for (std::size_t j = 0; j < m.num_players(); ++j)
    players.push_back(std::make_shared<TranslatedDecStrategy>(imc, m, j, profile[j]));
  // The main module has at most one action transition per state.
  const auto& main = imc.module(m.num_players());
  std::vector<LocalChoice> table(main.states.size(), LocalChoice::bottom());
  for (StateId s = 0; s < main.states.size(); ++s)
    if (!main.out_actions[s].empty()) table[s] = LocalChoice::of(main.out_actions[s].front());
  players.push_back(std::make_shared<MemorylessStrategy>(MemorylessStrategy::pure(table)));
  return std::make_shared<LocalProfile>(std::move(players));
}

struct ReductionCheck {
  ReachEstimate dec;
  ReachEstimate imc;
  bool pass = false;
};

inline ReductionCheck check_reduction_equivalence(const DecPomdp& m, const DecStrategyProfile& profile,
                                                  std::size_t horizon, std::size_t samples, std::uint64_t seed,
                                                  const Rational& cycle_rate = Rational(1)) {
  ReductionCheck out;
  out.dec = simulate_decpomdp(m, profile, horizon, samples, seed);
  auto imc = reduce_to_dimc(m, cycle_rate);
  auto translated = translate_dec_profile(imc, m, profile);
  auto rounds = reduction_round_limit(imc, m, horizon);
  Horizon unbounded{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  LexicographicScheduler scheduler;
  out.imc = estimate_reach(imc, *translated, scheduler, samples, unbounded, splitmix64(seed ^ 0x1d2c3b4a5968ULL), &rounds);
  out.pass = ci_overlap(out.dec, out.imc);
  return out;
}

}  // namespace dimc
