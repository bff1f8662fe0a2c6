#pragma once

#include <boost/container/small_vector.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dimc/history.hpp"
#include "dimc/model.hpp"
#include "dimc/rng.hpp"

namespace dimc {

using ChoiceDistribution = boost::container::small_vector<std::pair<LocalChoice, double>, 4>;

inline LocalChoice sample_choice(const ChoiceDistribution& dist, Rng& rng) {
  if (dist.size() == 1) return dist.front().first;
  double u = rng.uniform(), acc = 0.0;
  for (const auto& [c, p] : dist) {
    acc += p;
    if (u < acc) return c;
  }
  return dist.back().first;
}

// σ_j: maps a local history to a distribution over the choices available
// in its last local state.
class LocalStrategy {
 public:
  virtual ~LocalStrategy() = default;
  virtual ChoiceDistribution distribution(const LocalHistory& h) const = 0;
  virtual LocalChoice sample(const LocalHistory& h, Rng& rng) const { return sample_choice(distribution(h), rng); }
};

class PlayState;

// Per-play decision state of a strategy profile. A fresh session is started
// for every trajectory, so profiles themselves stay immutable.
class ProfileSession {
 public:
  virtual ~ProfileSession() = default;
  virtual LocalChoice choose(PlayerIndex j, const PlayState& play, Rng& rng) = 0;
};

class StrategyProfile {
 public:
  virtual ~StrategyProfile() = default;
  virtual std::unique_ptr<ProfileSession> start() const = 0;
  virtual bool needs_global_history() const { return false; }
};

// A profile of genuinely local strategies: each player sees only its own
// projection of the play.
class LocalProfile final : public StrategyProfile {
 public:
  explicit LocalProfile(std::vector<std::shared_ptr<const LocalStrategy>> players) : players_(std::move(players)) {}

  const LocalStrategy& player(PlayerIndex j) const { return *players_.at(j); }
  std::size_t size() const { return players_.size(); }

  std::unique_ptr<ProfileSession> start() const override;

 private:
  std::vector<std::shared_ptr<const LocalStrategy>> players_;
};

// Memoryless strategy: the decision depends on the current local state only.
class MemorylessStrategy final : public LocalStrategy {
 public:
  // table[s] is the distribution played in local state s.
  explicit MemorylessStrategy(std::vector<ChoiceDistribution> table) : table_(std::move(table)) {}

  static MemorylessStrategy pure(const std::vector<LocalChoice>& table) {
    std::vector<ChoiceDistribution> dist;
    for (auto c : table) dist.push_back({{c, 1.0}});
    return MemorylessStrategy(std::move(dist));
  }

  // An empty distribution marks a state the table leaves undefined.
  ChoiceDistribution distribution(const LocalHistory& h) const override { return entry(h.state()); }
  LocalChoice sample(const LocalHistory& h, Rng& rng) const override { return sample_choice(entry(h.state()), rng); }

  const std::vector<ChoiceDistribution>& table() const { return table_; }

 private:
  const ChoiceDistribution& entry(StateId s) const {
    const auto& d = table_.at(s);
    if (d.empty()) throw UndefinedProfileEntry("no choice defined for local state #" + std::to_string(s));
    return d;
  }

  std::vector<ChoiceDistribution> table_;
};

// Decisions keyed by the sequence of action labels the player has observed
// (comma-joined names); states without a scripted entry fall back to a
// memoryless table.
class ScriptedStrategy final : public LocalStrategy {
 public:
  struct Entry {
    ActionId label;
    std::optional<StateId> to;
  };

  ScriptedStrategy(const DistributedImc& model, PlayerIndex player, std::map<std::string, Entry> script,
                   MemorylessStrategy fallback)
      : model_(&model), player_(player), script_(std::move(script)), fallback_(std::move(fallback)) {}

  ChoiceDistribution distribution(const LocalHistory& h) const override {
    std::string key;
    for (std::size_t i = 1; i < h.size(); ++i) {
      if (!h[i].label.is_action()) continue;
      if (!key.empty()) key += ',';
      key += model_->action_name(h[i].label.value);
    }
    auto it = script_.find(key);
    if (it == script_.end()) return fallback_.distribution(h);
    const auto& m = model_->module(player_);
    for (auto t : m.out_actions[h.state()]) {
      const auto& edge = m.transitions[t];
      if (edge.label == it->second.label && (!it->second.to || *it->second.to == edge.to))
        return {{LocalChoice::of(t), 1.0}};
    }
    throw UndefinedProfileEntry("script entry '" + key + "' of player " + std::to_string(player_ + 1) +
                                " names action '" + model_->action_name(it->second.label) +
                                "', unavailable in state '" + m.states[h.state()] + "'");
  }

 private:
  const DistributedImc* model_;
  PlayerIndex player_;
  std::map<std::string, Entry> script_;
  MemorylessStrategy fallback_;
};

// δ: resolves the interleaving when several actions are enabled.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  // `enabled` is sorted and non-empty.
  virtual ActionId pick(const ActionSet& enabled, const PlayState& play, Rng& rng) const = 0;
};

class LexicographicScheduler final : public Scheduler {
 public:
  std::string name() const override { return "lexicographic"; }
  ActionId pick(const ActionSet& enabled, const PlayState&, Rng&) const override { return enabled.front(); }
};

class ReverseLexicographicScheduler final : public Scheduler {
 public:
  std::string name() const override { return "reverse-lexicographic"; }
  ActionId pick(const ActionSet& enabled, const PlayState&, Rng&) const override { return enabled.back(); }
};

class UniformRandomScheduler final : public Scheduler {
 public:
  std::string name() const override { return "uniform-random"; }
  ActionId pick(const ActionSet& enabled, const PlayState&, Rng& rng) const override {
    return enabled[rng.below(enabled.size())];
  }
};

inline std::vector<std::string> builtin_scheduler_names() {
  return {"lexicographic", "reverse-lexicographic", "uniform-random"};
}

inline std::shared_ptr<const Scheduler> make_scheduler(const std::string& name) {
  if (name == "lexicographic" || name == "lex") return std::make_shared<LexicographicScheduler>();
  if (name == "reverse-lexicographic" || name == "rev") return std::make_shared<ReverseLexicographicScheduler>();
  if (name == "uniform-random" || name == "uniform") return std::make_shared<UniformRandomScheduler>();
  throw SchemaError("unknown scheduler '" + name + "'");
}

}  // namespace dimc
