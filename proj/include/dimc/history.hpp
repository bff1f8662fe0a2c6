#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dimc/model.hpp"

namespace dimc {

// Label of a history step: an action, the delay of a player, or nothing for
// the initial entry.
struct Label {
  enum class Kind : std::uint8_t { None, Action, Delay };

  Kind kind = Kind::None;
  std::uint32_t value = 0;

  static constexpr Label none() noexcept { return {}; }
  static constexpr Label action(ActionId a) noexcept { return {Kind::Action, a}; }
  static constexpr Label delay(PlayerIndex j) noexcept { return {Kind::Delay, static_cast<std::uint32_t>(j)}; }

  constexpr bool is_action() const noexcept { return kind == Kind::Action; }
  constexpr bool is_delay() const noexcept { return kind == Kind::Delay; }
  bool operator==(const Label&) const = default;
};

// j observes a step iff j ∈ Sync(label); Sync of a delay label is its player.
inline bool visible_to(const DistributedImc& model, Label label, PlayerIndex j) {
  switch (label.kind) {
    case Label::Kind::None:
      return true;
    case Label::Kind::Delay:
      return label.value == j;
    case Label::Kind::Action: {
      const auto& sync = model.sync_set(label.value);
      return std::binary_search(sync.begin(), sync.end(), j);
    }
  }
  return false;
}

inline std::string label_name(const DistributedImc& model, Label label) {
  switch (label.kind) {
    case Label::Kind::None:
      return "";
    case Label::Kind::Delay:
      return std::to_string(label.value + 1);
    case Label::Kind::Action:
      return model.action_name(label.value);
  }
  return "";
}

struct HistoryStep {
  Label label;
  double time = 0.0;
  GlobalState post_state;
  GlobalChoice post_choice;
};

using GlobalHistory = std::vector<HistoryStep>;

struct LocalStep {
  Label label;
  double time = 0.0;
  StateId state = 0;
  LocalChoice choice;
};

// A player's projection of a history. While a strategy is consulted, the
// choice of the last step is the one being decided and must not be read.
class LocalHistory {
 public:
  LocalHistory() = default;
  explicit LocalHistory(PlayerIndex player) : player_(player) {}

  PlayerIndex player() const { return player_; }
  const std::vector<LocalStep>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  const LocalStep& operator[](std::size_t i) const { return steps_[i]; }
  const LocalStep& last() const { return steps_.back(); }
  StateId state() const { return steps_.back().state; }
  double time() const { return steps_.back().time; }

  // Number of synchronisation-action steps (|Sync(a)| ≥ 2) seen so far.
  std::size_t sync_count() const { return sync_count_; }
  // Index of the most recent synchronisation step, if any.
  std::optional<std::size_t> last_sync() const { return last_sync_; }

  void reset(PlayerIndex player) {
    player_ = player;
    steps_.clear();
    sync_count_ = 0;
    last_sync_.reset();
  }

  void append(const LocalStep& step, bool synchronisation) {
    steps_.push_back(step);
    if (synchronisation) {
      ++sync_count_;
      last_sync_ = steps_.size() - 1;
    }
  }

  void set_last_choice(LocalChoice c) { steps_.back().choice = c; }

  // Drops steps after `count`, recomputing the synchronisation bookkeeping.
  void truncate(std::size_t count, const DistributedImc& model) {
    steps_.resize(count);
    sync_count_ = 0;
    last_sync_.reset();
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      if (steps_[i].label.is_action() && model.is_sync_action(steps_[i].label.value)) {
        ++sync_count_;
        last_sync_ = i;
      }
    }
  }

  bool operator==(const LocalHistory& other) const {
    if (player_ != other.player_ || steps_.size() != other.steps_.size()) return false;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      const auto& a = steps_[i];
      const auto& b = other.steps_[i];
      if (!(a.label == b.label) || a.time != b.time || a.state != b.state || a.choice != b.choice) return false;
    }
    return true;
  }

 private:
  PlayerIndex player_ = 0;
  std::vector<LocalStep> steps_;
  std::size_t sync_count_ = 0;
  std::optional<std::size_t> last_sync_;
};

inline LocalHistory local_projection(const DistributedImc& model, const GlobalHistory& history, PlayerIndex j) {
  LocalHistory out(j);
  for (const auto& step : history) {
    if (!visible_to(model, step.label, j)) continue;
    bool sync = step.label.is_action() && model.is_sync_action(step.label.value);
    out.append({step.label, step.time, step.post_state[j], step.post_choice[j]}, sync);
  }
  return out;
}

}  // namespace dimc
