#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "dimc/history.hpp"
#include "dimc/model.hpp"
#include "dimc/rng.hpp"
#include "dimc/strategy.hpp"

namespace dimc {

struct Horizon {
  std::size_t max_steps = 10'000;
  double max_time = 10'000.0;
};

// Counts how often `player` enters one of the marked local states; a play
// stops unsuccessfully once `limit` entries happened without reaching T.
struct RoundLimit {
  PlayerIndex player = 0;
  std::vector<bool> marks;
  std::size_t limit = 0;
};

// Mutable state of one play: current global state and choices, clock,
// the players' local histories and, optionally, the global history.
class PlayState {
 public:
  const DistributedImc& model() const { return *model_; }
  const GlobalState& state() const { return state_; }
  const GlobalChoice& choice() const { return choice_; }
  double time() const { return time_; }
  std::size_t steps() const { return steps_; }
  std::size_t rounds() const { return rounds_; }
  const LocalHistory& local(PlayerIndex j) const { return locals_[j]; }
  const GlobalHistory& global() const { return global_; }
  bool recording() const { return record_; }

  // Starts a play in `initial`; every player makes its first choice.
  void begin(const DistributedImc& model, const GlobalState& initial, ProfileSession& session, Rng& strategy_rng,
             bool record, const RoundLimit* rounds = nullptr) {
    model_ = &model;
    record_ = record;
    round_limit_ = rounds;
    state_ = initial;
    time_ = 0.0;
    steps_ = 0;
    rounds_ = 0;
    const std::size_t n = model.num_players();
    choice_.assign(n, LocalChoice::bottom());
    locals_.resize(n);
    for (PlayerIndex j = 0; j < n; ++j) {
      locals_[j].reset(j);
      locals_[j].append({Label::none(), 0.0, state_[j], LocalChoice::bottom()}, false);
    }
    for (PlayerIndex j = 0; j < n; ++j) decide(j, session, strategy_rng);
    global_.clear();
    if (record_) global_.push_back({Label::none(), 0.0, state_, choice_});
  }

  // Fires action a: the players of Sync(a) move to their chosen targets and
  // choose anew; everybody else keeps the previous choice.
  void fire(ActionId a, ProfileSession& session, Rng& strategy_rng) {
    const auto& sync = model_->sync_set(a);
    const bool synchronisation = sync.size() >= 2;
    for (PlayerIndex j : sync) {
      StateId next = model_->target_of(j, choice_[j]);
      enter(j, next);
      locals_[j].append({Label::action(a), time_, next, LocalChoice::bottom()}, synchronisation);
    }
    for (PlayerIndex j : sync) decide(j, session, strategy_rng);
    ++steps_;
    if (record_) global_.push_back({Label::action(a), time_, state_, choice_});
  }

  // Player j's delay transition d fires after `delay` time units; only j
  // re-decides.
  void elapse(PlayerIndex j, const DelayTransition& d, double delay, ProfileSession& session, Rng& strategy_rng) {
    time_ += delay;
    enter(j, d.to);
    locals_[j].append({Label::delay(j), time_, d.to, LocalChoice::bottom()}, false);
    decide(j, session, strategy_rng);
    ++steps_;
    if (record_) global_.push_back({Label::delay(j), time_, state_, choice_});
  }

 private:
  void enter(PlayerIndex j, StateId next) {
    if (round_limit_ && j == round_limit_->player && round_limit_->marks[next]) ++rounds_;
    state_[j] = next;
  }

  void decide(PlayerIndex j, ProfileSession& session, Rng& rng) {
    LocalChoice c = session.choose(j, *this, rng);
    if (!choice_available(*model_, j, state_[j], c))
      throw UndefinedProfileEntry("strategy of player " + std::to_string(j + 1) + " chose an unavailable choice in '" +
                                  model_->module(j).states[state_[j]] + "'");
    choice_[j] = c;
    locals_[j].set_last_choice(c);
  }

  const DistributedImc* model_ = nullptr;
  const RoundLimit* round_limit_ = nullptr;
  GlobalState state_;
  GlobalChoice choice_;
  double time_ = 0.0;
  std::size_t steps_ = 0;
  std::size_t rounds_ = 0;
  bool record_ = false;
  std::vector<LocalHistory> locals_;
  GlobalHistory global_;
};

class LocalProfileSession final : public ProfileSession {
 public:
  explicit LocalProfileSession(const LocalProfile& profile) : profile_(profile) {}
  LocalChoice choose(PlayerIndex j, const PlayState& play, Rng& rng) override {
    return profile_.player(j).sample(play.local(j), rng);
  }

 private:
  const LocalProfile& profile_;
};

inline std::unique_ptr<ProfileSession> LocalProfile::start() const {
  return std::make_unique<LocalProfileSession>(*this);
}

// Fires enabled actions until none is left. Returns the fired actions in
// order when `fired` is given; the count otherwise.
inline std::size_t zero_time_closure(PlayState& play, ProfileSession& session, const Scheduler& scheduler,
                                     Rng& strategy_rng, Rng& scheduler_rng, std::vector<ActionId>* fired = nullptr,
                                     std::size_t max_steps = static_cast<std::size_t>(-1)) {
  const auto& model = play.model();
  const std::size_t budget = model.closure_budget();
  std::size_t count = 0;
  for (;;) {
    ActionSet enabled = enabled_actions(model, play.choice());
    if (enabled.empty()) break;
    if (count >= budget)
      throw ClosureBudgetExceeded("more than " + std::to_string(budget) + " actions fired without time passing");
    if (play.steps() >= max_steps) break;
    ActionId a = enabled.size() == 1 ? enabled.front() : scheduler.pick(enabled, play, scheduler_rng);
    play.fire(a, session, strategy_rng);
    if (fired) fired->push_back(a);
    ++count;
  }
  return count;
}

struct RaceOutcome {
  PlayerIndex winner;
  std::uint32_t delay_transition;
  double delay;
};

// Picks the winning delay transition with probability rate / E and draws
// the sojourn from Exponential(E), E the sum of all competing rates.
inline RaceOutcome sample_race(const DistributedImc& model, const GlobalState& state, Rng& rng) {
  double total = 0.0;
  for (PlayerIndex j = 0; j < state.size(); ++j) total += model.module(j).exit_rate(state[j]);
  if (!(total > 0.0))
    throw NoDelayTransition("no delay transition leaves '" + model.state_name(state) +
                            "' while no action is enabled; normalize the model first");
  double u = rng.uniform() * total, acc = 0.0;
  RaceOutcome out{0, 0, 0.0};
  bool found = false;
  for (PlayerIndex j = 0; j < state.size() && !found; ++j) {
    const auto& m = model.module(j);
    for (auto d : m.out_delays[state[j]]) {
      out = {j, d, 0.0};
      acc += m.delays[d].rate_value;
      if (u < acc) {
        found = true;
        break;
      }
    }
  }
  out.delay = rng.exponential(total);
  return out;
}

inline RaceOutcome sample_step(PlayState& play, ProfileSession& session, Rng& delay_rng, Rng& strategy_rng) {
  RaceOutcome r = sample_race(play.model(), play.state(), delay_rng);
  play.elapse(r.winner, play.model().module(r.winner).delays[r.delay_transition], r.delay, session, strategy_rng);
  return r;
}

// For every target cube and player, the local states from which the cube's
// allowed states are reachable in the module graph. A global state none of
// whose cubes is locally reachable can never reach T.
class TargetReachability {
 public:
  explicit TargetReachability(const DistributedImc& model) {
    const auto& cubes = model.target().cubes();
    reach_.resize(cubes.size());
    for (std::size_t c = 0; c < cubes.size(); ++c) {
      for (PlayerIndex j = 0; j < model.num_players(); ++j) {
        const auto& m = model.module(j);
        std::vector<bool> good(m.states.size(), !cubes[c][j].has_value());
        if (cubes[c][j]) {
          std::vector<std::vector<StateId>> preds(m.states.size());
          for (const auto& t : m.transitions) preds[t.to].push_back(t.from);
          for (const auto& d : m.delays) preds[d.to].push_back(d.from);
          std::vector<StateId> queue(cubes[c][j]->begin(), cubes[c][j]->end());
          for (auto s : queue) good[s] = true;
          for (std::size_t head = 0; head < queue.size(); ++head)
            for (auto p : preds[queue[head]])
              if (!good[p]) {
                good[p] = true;
                queue.push_back(p);
              }
        }
        reach_[c].push_back(std::move(good));
      }
    }
  }

  bool may_reach(const GlobalState& s) const {
    for (const auto& cube : reach_) {
      bool ok = true;
      for (std::size_t j = 0; j < s.size() && ok; ++j) ok = cube[j][s[j]];
      if (ok) return true;
    }
    return false;
  }

 private:
  std::vector<std::vector<std::vector<bool>>> reach_;
};

struct PlayOptions {
  Horizon horizon;
  bool record_history = false;
  bool prune = true;
  const RoundLimit* rounds = nullptr;
};

struct PlayResult {
  bool reached_target = false;
  bool truncated = false;
  std::size_t steps = 0;
  double time = 0.0;
};

// Reusable driver for plays of one (model, profile, scheduler) triple.
class Simulator {
 public:
  Simulator(const DistributedImc& model, const StrategyProfile& profile, const Scheduler& scheduler,
            PlayOptions options = {}, std::shared_ptr<const TargetReachability> reach = nullptr)
      : model_(model), profile_(profile), scheduler_(scheduler), options_(options), reach_(std::move(reach)) {
    if (options_.prune && !reach_) reach_ = std::make_shared<TargetReachability>(model_);
    options_.record_history = options_.record_history || profile_.needs_global_history();
  }

  // Trajectory `index` under `seed`; deterministic in (seed, index).
  PlayResult run(std::uint64_t seed, std::uint64_t index) {
    Rng delays = Rng::derive(seed, index, Stream::Delays);
    Rng strategies = Rng::derive(seed, index, Stream::Strategies);
    Rng scheduling = Rng::derive(seed, index, Stream::Scheduler);
    return run(delays, strategies, scheduling);
  }

  PlayResult run(Rng& delays, Rng& strategies, Rng& scheduling) {
    auto session = profile_.start();
    play_.begin(model_, model_.initial_state(), *session, strategies, options_.record_history, options_.rounds);
    PlayResult result;
    const auto& target = model_.target();
    for (;;) {
      zero_time_closure(play_, *session, scheduler_, strategies, scheduling, nullptr, options_.horizon.max_steps);
      if (play_.steps() >= options_.horizon.max_steps && !enabled_actions(model_, play_.choice()).empty()) {
        result.truncated = true;
        break;
      }
      if (target.contains(play_.state())) {
        result.reached_target = true;
        break;
      }
      if (options_.rounds && play_.rounds() >= options_.rounds->limit) break;
      if (reach_ && !reach_->may_reach(play_.state())) break;
      if (play_.steps() >= options_.horizon.max_steps) {
        result.truncated = true;
        break;
      }
      RaceOutcome r = sample_race(model_, play_.state(), delays);
      if (play_.time() + r.delay > options_.horizon.max_time) {
        result.truncated = true;
        break;
      }
      play_.elapse(r.winner, model_.module(r.winner).delays[r.delay_transition], r.delay, *session, strategies);
    }
    result.steps = play_.steps();
    result.time = play_.time();
    return result;
  }

  const PlayState& play() const { return play_; }

 private:
  const DistributedImc& model_;
  const StrategyProfile& profile_;
  const Scheduler& scheduler_;
  PlayOptions options_;
  std::shared_ptr<const TargetReachability> reach_;
  PlayState play_;
};

inline PlayResult sample_play(const DistributedImc& model, const StrategyProfile& profile, const Scheduler& scheduler,
                              const Horizon& horizon, std::uint64_t seed, std::uint64_t index = 0,
                              GlobalHistory* history = nullptr) {
  PlayOptions options;
  options.horizon = horizon;
  options.record_history = history != nullptr;
  Simulator sim(model, profile, scheduler, options);
  PlayResult r = sim.run(seed, index);
  if (history) *history = sim.play().global();
  return r;
}

}  // namespace dimc
