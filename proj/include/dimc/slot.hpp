#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "dimc/estimate.hpp"
#include "dimc/non_urgent.hpp"
#include "dimc/strategy.hpp"
#include "dimc/sync_policy.hpp"

namespace dimc {

struct SlotSchedule {
  std::uint64_t i = 1;
  double lambda_min = 1.0;
  std::uint64_t K_i = 1;
  std::size_t rows = 0;  // |S'_1|
  std::size_t cols = 0;  // 2·|S'_2|
  // Local synchronisation states in index order (lexicographic by name).
  std::vector<StateId> sync_states[2];

  double slot_length(std::uint64_t k) const { return static_cast<double>(K_i) + static_cast<double>(k) / lambda_min; }
  double phase_length(std::uint64_t k) const {
    return static_cast<double>(rows) * static_cast<double>(cols) * slot_length(k);
  }
};

// Smallest integer K ≥ 1 with e^{-λK} ≤ threshold.
inline std::uint64_t minimal_k(double lambda, double threshold) {
  double guess = std::ceil(std::log(1.0 / threshold) / lambda);
  std::uint64_t k = guess < 1.0 ? 1 : static_cast<std::uint64_t>(guess);
  while (k > 1 && std::exp(-lambda * static_cast<double>(k - 1)) <= threshold) --k;
  while (std::exp(-lambda * static_cast<double>(k)) > threshold) ++k;
  return k;
}

inline SlotSchedule build_slot_schedule(const DistributedImc& model, std::uint64_t i) {
  if (i == 0) throw SchemaError("accuracy index i must be at least 1");
  auto report = check_non_urgent(model);
  require_two_player_non_urgent(model, report);
  SlotSchedule out;
  out.i = i;
  double lambda = std::numeric_limits<double>::infinity();
  for (PlayerIndex j = 0; j < 2; ++j) {
    out.sync_states[j] = report.sync_local_states[j];
    const auto& m = model.module(j);
    for (StateId s : out.sync_states[j])
      for (auto d : m.out_delays[s]) lambda = std::min(lambda, m.delays[d].rate_value);
  }
  out.lambda_min = std::isfinite(lambda) ? lambda : 1.0;
  out.rows = out.sync_states[0].size();
  out.cols = 2 * out.sync_states[1].size();
  double threshold = 1.0 / (4.0 * static_cast<double>(i) * static_cast<double>(out.rows + out.cols / 2));
  out.K_i = minimal_k(out.lambda_min, threshold);
  return out;
}

struct SlotPosition {
  std::size_t row = 0;
  std::size_t col = 0;
  bool sync = true;
};

inline SlotPosition locate_slot(const SlotSchedule& schedule, std::uint64_t k, double t) {
  const double len = schedule.slot_length(k);
  const double rows = static_cast<double>(std::max<std::size_t>(schedule.rows, 1));
  const double cols = static_cast<double>(std::max<std::size_t>(schedule.cols, 1));
  SlotPosition p;
  p.row = static_cast<std::size_t>(std::fmod(std::floor(t / (cols * len)), rows));
  p.col = static_cast<std::size_t>(std::fmod(std::floor(t / len), cols));
  p.sync = p.col % 2 == 0;
  return p;
}

struct ErrorBound {
  std::vector<double> per_k;
  double total = 0.0;
};

// inco_{i,k} ≤ 1/(2·i·2^k) for k = 0..up_to_k; the full series sums to 1/i.
inline ErrorBound emulation_error_bound(const SlotSchedule& schedule, std::uint64_t up_to_k) {
  ErrorBound out;
  for (std::uint64_t k = 0; k <= up_to_k; ++k) {
    double b = std::ldexp(1.0 / (2.0 * static_cast<double>(schedule.i)), -static_cast<int>(std::min<std::uint64_t>(k, 2000)));
    out.per_k.push_back(b);
    out.total += b;
  }
  return out;
}

// σ^i_j: decides from the player's own state, clock and synchronisation count.
class SlotStrategy final : public LocalStrategy {
 public:
  SlotStrategy(const DistributedImc& model, PlayerIndex j, std::shared_ptr<const SlotSchedule> schedule,
               std::shared_ptr<const SyncPolicy> policy)
      : player_(j), schedule_(std::move(schedule)), policy_(std::move(policy)) {
    const auto& m = model.module(j);
    index_.assign(m.states.size(), kPrivate);
    nothing_.assign(m.states.size(), LocalChoice::bottom());
    const auto& own = schedule_->sync_states[j];
    for (std::size_t x = 0; x < own.size(); ++x) {
      index_[own[x]] = x;
      for (auto t : m.out_actions[own[x]])
        if (m.transitions[t].label == *m.nothing_action) nothing_[own[x]] = LocalChoice::of(t);
    }
    const auto& s1 = schedule_->sync_states[0];
    const auto& s2 = schedule_->sync_states[1];
    grid_.resize(s1.size() * s2.size());
    for (std::size_t r = 0; r < s1.size(); ++r)
      for (std::size_t c = 0; c < s2.size(); ++c) {
        auto idx = policy_->find(GlobalState{s1[r], s2[c]});
        if (!idx) throw SchemaError("policy lacks a synchronisation state of the slot grid");
        grid_[r * s2.size() + c] = &policy_->entry(*idx);
      }
  }

  LocalChoice decide(const LocalHistory& h) const {
    const StateId s = h.state();
    if (index_[s] != kPrivate) {
      SlotPosition p = locate_slot(*schedule_, h.sync_count(), h.time());
      std::size_t guess = player_ == 0 ? p.row : p.col / 2;
      if (p.sync && guess == index_[s]) {
        const PolicyEntry& e = at(p);
        if (e.kind == MdpActionKind::Sync) return e.choice[player_];
      }
      return nothing_[s];
    }
    // σ_j of the state guessed when the last synchronisation happened, under
    // the grid in force before it.
    const PolicyEntry* e = &policy_->entry(0);
    if (auto last = h.last_sync()) e = &at(locate_slot(*schedule_, h.sync_count() - 1, h[*last].time));
    return e->sigma[player_][s];
  }

  ChoiceDistribution distribution(const LocalHistory& h) const override { return {{decide(h), 1.0}}; }
  LocalChoice sample(const LocalHistory& h, Rng&) const override { return decide(h); }

 private:
  static constexpr std::size_t kPrivate = static_cast<std::size_t>(-1);

  const PolicyEntry& at(const SlotPosition& p) const {
    return *grid_[p.row * schedule_->sync_states[1].size() + p.col / 2];
  }

  PlayerIndex player_;
  std::shared_ptr<const SlotSchedule> schedule_;
  std::shared_ptr<const SyncPolicy> policy_;
  std::vector<std::size_t> index_;
  std::vector<LocalChoice> nothing_;
  std::vector<const PolicyEntry*> grid_;
};

struct EmulatedProfile {
  std::shared_ptr<const SlotSchedule> schedule;
  std::shared_ptr<const SyncPolicy> policy;
  std::shared_ptr<const SlotStrategy> players[2];
  std::shared_ptr<const LocalProfile> profile;
};

inline EmulatedProfile emulated_profile(const DistributedImc& model, const SyncPolicy& policy, std::uint64_t i) {
  EmulatedProfile out;
  out.schedule = std::make_shared<const SlotSchedule>(build_slot_schedule(model, i));
  out.policy = std::make_shared<const SyncPolicy>(policy);
  for (PlayerIndex j = 0; j < 2; ++j)
    out.players[j] = std::make_shared<const SlotStrategy>(model, j, out.schedule, out.policy);
  out.profile = std::make_shared<const LocalProfile>(
      std::vector<std::shared_ptr<const LocalStrategy>>{out.players[0], out.players[1]});
  return out;
}

struct EmulationRow {
  std::uint64_t i = 1;
  ReachEstimate estimate;
  double bound = 1.0;
  bool pass = false;
};

inline std::uint64_t emulation_seed(std::uint64_t seed, std::uint64_t i) { return splitmix64(seed ^ splitmix64(i)); }

inline std::vector<EmulationRow> evaluate_emulation(const DistributedImc& model, const SyncPolicy& policy,
                                                    const std::vector<std::uint64_t>& i_values, std::size_t samples,
                                                    std::uint64_t seed, const Horizon& horizon = {},
                                                    const Scheduler& scheduler = LexicographicScheduler()) {
  std::vector<EmulationRow> rows;
  const double v = policy.value();
  for (auto i : i_values) {
    auto emulated = emulated_profile(model, policy, i);
    EmulationRow row;
    row.i = i;
    row.estimate = estimate_reach(model, *emulated.profile, scheduler, samples, horizon, emulation_seed(seed, i));
    row.bound = 1.0 / static_cast<double>(i);
    row.pass = std::abs(v - row.estimate.probability) <= row.bound + 3.0 * row.estimate.std_error;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dimc
