#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace dimc;
using namespace dimc::testing;

namespace {

std::shared_ptr<LocalProfile> profile_for(const DistributedImc& m, const std::string& file) {
  return load_profile_file(m, source_path("models/" + file));
}

// Random pure memoryless profile.
std::shared_ptr<LocalProfile> random_pure_profile(const DistributedImc& m, std::mt19937_64& rng) {
  std::vector<std::shared_ptr<const LocalStrategy>> players;
  for (PlayerIndex j = 0; j < m.num_players(); ++j) {
    std::vector<LocalChoice> table;
    for (StateId s = 0; s < m.module(j).states.size(); ++s) {
      auto options = available_choices(m, j, s);
      table.push_back(options[rng() % options.size()]);
    }
    players.push_back(std::make_shared<MemorylessStrategy>(MemorylessStrategy::pure(table)));
  }
  return std::make_shared<LocalProfile>(std::move(players));
}

GlobalHistory record(const DistributedImc& m, const StrategyProfile& p, const Scheduler& sched, std::uint64_t seed,
                     std::uint64_t index = 0) {
  GlobalHistory h;
  sample_play(m, p, sched, Horizon{400, 1e6}, seed, index, &h);
  return h;
}

}  // namespace

TEST(Projection, HandBuiltHistory) {
  auto m = raw_model("app_att_urgent.json");
  ActionId login = *m.find_action("login");
  GlobalChoice none{LocalChoice::bottom(), LocalChoice::bottom()};
  GlobalHistory h{
      {Label::none(), 0.0, gstate(m, {"c0", "cbar1"}), none},
      {Label::delay(0), 0.42, gstate(m, {"t1", "cbar1"}), none},
      {Label::action(login), 0.42, gstate(m, {"t2", "cbar2"}), none},
      {Label::delay(1), 1.0, gstate(m, {"t2", "cbar1"}), none},
  };
  auto app = local_projection(m, h, 0);
  ASSERT_EQ(app.size(), 3u);
  EXPECT_EQ(app[1].state, sid(m, 0, "t1"));
  EXPECT_EQ(app[2].state, sid(m, 0, "t2"));
  EXPECT_DOUBLE_EQ(app.time(), 0.42);
  EXPECT_EQ(app.sync_count(), 1u);
  EXPECT_EQ(app.last_sync(), std::optional<std::size_t>(2));

  auto att = local_projection(m, h, 1);
  ASSERT_EQ(att.size(), 3u);
  EXPECT_EQ(att[1].label, Label::action(login));
  EXPECT_EQ(att.state(), sid(m, 1, "cbar1"));
  EXPECT_DOUBLE_EQ(att.time(), 1.0);
}

TEST(Closure, FiresHandshakeChainWithoutTime) {
  auto m = prepared("app_att_nonurgent.json");
  auto p = profile_for(m, "nonurgent_eager.profile.json");
  for (bool reverse : {false, true}) {
    std::unique_ptr<Scheduler> sched;
    if (reverse) sched = std::make_unique<ReverseLexicographicScheduler>();
    else sched = std::make_unique<LexicographicScheduler>();
    auto session = p->start();
    Rng rs(1), rsch(2);
    PlayState play;
    play.begin(m, gstate(m, {"t1", "cbar1"}), *session, rs, true);
    std::vector<ActionId> fired;
    zero_time_closure(play, *session, *sched, rs, rsch, &fired);
    ASSERT_EQ(fired.size(), 4u);
    EXPECT_EQ(m.action_name(fired[0]), "login");
    EXPECT_EQ(m.action_name(fired[1]), "lookup");
    EXPECT_EQ(m.action_name(fired[2]), reverse ? "hide_t" : "guess_t");
    EXPECT_EQ(play.state(), gstate(m, {"t4", "tbar4"}));
    EXPECT_EQ(play.time(), 0.0);
  }
}

TEST(Closure, IdentityWhenNothingEnabled) {
  auto m = prepared("app_att_nonurgent.json");
  auto p = profile_for(m, "nonurgent_eager.profile.json");
  auto session = p->start();
  Rng rs(1), rsch(2);
  PlayState play;
  play.begin(m, gstate(m, {"t1", "cbar2"}), *session, rs, false);
  EXPECT_EQ(zero_time_closure(play, *session, LexicographicScheduler(), rs, rsch), 0u);
  EXPECT_EQ(play.state(), gstate(m, {"t1", "cbar2"}));
}

TEST(Race, RatesOneAndThree) {
  Json mod{{"name", "A"}, {"states", {"s", "a", "b"}}, {"initial", "s"}, {"actions", Json::array()},
           {"delays", {{{"from", "s"}, {"rate", "1"}, {"to", "a"}}, {{"from", "s"}, {"rate", "3"}, {"to", "b"}}}}};
  auto m = load_model(Json{{"modules", {mod}}});
  const std::size_t n = 100'000;
  Rng rng(42);
  std::size_t to_b = 0;
  double total_delay = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = sample_race(m, GlobalState{0}, rng);
    to_b += m.module(0).delays[r.delay_transition].to == 2;
    total_delay += r.delay;
  }
  double freq = static_cast<double>(to_b) / n;
  EXPECT_NEAR(freq, 0.75, 3.0 * std::sqrt(0.75 * 0.25 / n));
  EXPECT_NEAR(total_delay / n, 0.25, 3.0 * 0.25 / std::sqrt(static_cast<double>(n)));
}

TEST(Race, WinnerAcrossPlayers) {
  Json a{{"name", "A"}, {"states", {"s"}}, {"initial", "s"}, {"actions", Json::array()},
         {"delays", {{{"from", "s"}, {"rate", "1"}, {"to", "s"}}}}};
  Json b{{"name", "B"}, {"states", {"u"}}, {"initial", "u"}, {"actions", Json::array()},
         {"delays", {{{"from", "u"}, {"rate", "2"}, {"to", "u"}}, {{"from", "u"}, {"rate", "1"}, {"to", "u"}}}}};
  auto m = load_model(Json{{"modules", {a, b}}});
  const std::size_t n = 100'000;
  Rng rng(3);
  std::size_t first = 0;
  for (std::size_t i = 0; i < n; ++i) first += sample_race(m, GlobalState{0, 0}, rng).winner == 0;
  EXPECT_NEAR(static_cast<double>(first) / n, 0.25, 3.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST(Race, NoDelayIsAnError) {
  Json a{{"name", "A"}, {"states", {"s"}}, {"initial", "s"}, {"actions", Json::array()}};
  auto m = load_model(Json{{"modules", {a}}});
  Rng rng(1);
  EXPECT_THROW(sample_race(m, GlobalState{0}, rng), NoDelayTransition);
}

TEST(Simulate, UrgentCommitProfileNearHalf) {
  auto m = prepared("app_att_urgent.json");
  auto p = profile_for(m, "urgent_commit_t.profile.json");
  auto e = estimate_reach(m, *p, LexicographicScheduler(), 20'000, Horizon{}, 7);
  EXPECT_NEAR(e.probability, 0.5, 3.0 * e.std_error + 1e-9);
  EXPECT_EQ(e.truncated, 0u);
}

TEST(Simulate, EmptyTargetNeverReached) {
  Json doc = model_json("app_att_urgent.json");
  doc["target"] = Json::array();
  auto m = normalize_nonstop(load_model(doc));
  auto p = profile_for(m, "urgent_commit_t.profile.json");
  auto e = estimate_reach(m, *p, LexicographicScheduler(), 1000, Horizon{}, 1);
  EXPECT_EQ(e.hits, 0u);
  EXPECT_EQ(e.probability, 0.0);
}

TEST(Simulate, InitialStateInTarget) {
  Json doc = model_json("four_modules.json");
  doc["target"] = Json::array({Json::array({"s0", "t0", "u0", "v0"})});
  auto m = normalize_nonstop(load_model(doc));
  auto p = profile_for(m, "four_modules.profile.json");
  auto r = sample_play(m, *p, LexicographicScheduler(), Horizon{}, 1);
  EXPECT_TRUE(r.reached_target);
  EXPECT_EQ(r.time, 0.0);
}

TEST(Simulate, StepHorizonTruncates) {
  auto m = prepared("app_att_urgent.json");
  auto p = profile_for(m, "urgent_commit_t.profile.json");
  auto e = estimate_reach(m, *p, LexicographicScheduler(), 200, Horizon{1, 1e9}, 1);
  EXPECT_EQ(e.hits, 0u);
  EXPECT_GT(e.truncated, 0u);
}

TEST(Simulate, DeterministicReplay) {
  auto m = prepared("app_att_urgent.json");
  auto p = profile_for(m, "urgent_commit_t.profile.json");
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto a = record(m, *p, UniformRandomScheduler(), 99, i);
    auto b = record(m, *p, UniformRandomScheduler(), 99, i);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].label, b[k].label);
      EXPECT_EQ(a[k].time, b[k].time);
      EXPECT_EQ(a[k].post_state, b[k].post_state);
    }
  }
  auto e1 = estimate_reach(m, *p, LexicographicScheduler(), 5000, Horizon{}, 123);
  auto e2 = estimate_reach(m, *p, LexicographicScheduler(), 5000, Horizon{}, 123);
  EXPECT_EQ(e1.hits, e2.hits);
  EXPECT_EQ(e1.truncated, e2.truncated);
}

TEST(Simulate, FourModulesUnderEveryScheduler) {
  auto m = prepared("four_modules.json");
  auto p = profile_for(m, "four_modules.profile.json");
  for (const auto& name : builtin_scheduler_names()) {
    auto e = estimate_reach(m, *p, *make_scheduler(name), 2000, Horizon{}, 5);
    EXPECT_EQ(e.hits, 2000u) << name;
  }
}

TEST(SimulateProperty, TimeMonotoneAndOnlySyncPlayersMove) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 100; ++round) {
    auto m = normalize_nonstop(build_model(random_model_spec(rng)));
    auto p = random_pure_profile(m, rng);
    for (std::uint64_t i = 0; i < 5; ++i) {
      auto h = record(m, *p, UniformRandomScheduler(), round, i);
      for (std::size_t k = 1; k < h.size(); ++k) {
        const auto& prev = h[k - 1];
        const auto& step = h[k];
        ASSERT_GE(step.time, prev.time);
        for (PlayerIndex j = 0; j < m.num_players(); ++j) {
          bool moves = visible_to(m, step.label, j);
          if (!moves) {
            EXPECT_EQ(step.post_state[j], prev.post_state[j]);
            EXPECT_EQ(step.post_choice[j], prev.post_choice[j]);
          } else if (step.label.is_action()) {
            EXPECT_EQ(step.time, prev.time);
            ASSERT_FALSE(prev.post_choice[j].is_bottom());
            EXPECT_EQ(m.label_of(j, prev.post_choice[j]), step.label.value);
            EXPECT_EQ(step.post_state[j], m.target_of(j, prev.post_choice[j]));
          }
        }
      }
    }
  }
}

TEST(SimulateProperty, NothingActionNeverFires) {
  auto m = prepared("app_att_nonurgent.json");
  auto p = profile_for(m, "nonurgent_eager.profile.json");
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto h = record(m, *p, UniformRandomScheduler(), 4, i);
    for (const auto& step : h) {
      if (!step.label.is_action()) continue;
      EXPECT_NE(step.label.value, *m.module(0).nothing_action);
      EXPECT_NE(step.label.value, *m.module(1).nothing_action);
    }
  }
}

TEST(SimulateProperty, ProjectionConsistency) {
  // The simulator's live local histories coincide with projections of the
  // recorded play, and every recorded decision is what the strategy returns
  // on the corresponding prefix.
  auto m = prepared("app_att_nonurgent.json");
  auto solved = decide_value_problem(m, Rational(1));
  auto policy = make_sync_policy(m, solved.mdp, solved.policy);
  auto emulated = emulated_profile(m, policy, 2);
  LexicographicScheduler lex;
  PlayOptions options;
  options.record_history = true;
  options.horizon = Horizon{300, 1e6};
  Simulator sim(m, *emulated.profile, lex, options);
  for (std::uint64_t i = 0; i < 100; ++i) {
    sim.run(8, i);
    const auto& global = sim.play().global();
    for (PlayerIndex j = 0; j < 2; ++j) {
      auto proj = local_projection(m, global, j);
      ASSERT_TRUE(proj == sim.play().local(j));
      LocalHistory prefix = proj;
      for (std::size_t k = proj.size(); k >= 1; --k) {
        prefix.truncate(k, m);
        EXPECT_EQ(emulated.players[j]->decide(prefix), proj[k - 1].choice);
      }
    }
  }
}

TEST(ClosureProperty, ConfluentUnderSchedulerSwap) {
  std::mt19937_64 rng(23);
  LexicographicScheduler lex;
  ReverseLexicographicScheduler rev;
  std::size_t multi = 0;
  auto check = [&](const DistributedImc& m) {
    auto p = random_pure_profile(m, rng);
    GlobalState start;
    for (PlayerIndex j = 0; j < m.num_players(); ++j) start.push_back(rng() % m.module(j).states.size());
    GlobalState final_state[2];
    GlobalChoice final_choice[2];
    std::size_t fired[2];
    for (int k = 0; k < 2; ++k) {
      auto session = p->start();
      Rng rs(1), rsch(2);
      PlayState play;
      play.begin(m, start, *session, rs, false);
      multi += enabled_actions(m, play.choice()).size() > 1;
      fired[k] = zero_time_closure(play, *session, k == 0 ? static_cast<const Scheduler&>(lex) : rev, rs, rsch);
      final_state[k] = play.state();
      final_choice[k] = play.choice();
    }
    EXPECT_EQ(final_state[0], final_state[1]);
    EXPECT_EQ(final_choice[0], final_choice[1]);
    EXPECT_EQ(fired[0], fired[1]);
  };
  auto nonurgent = prepared("app_att_nonurgent.json");
  auto four = prepared("four_modules.json");
  for (int round = 0; round < 500; ++round) {
    check(nonurgent);
    check(four);
    check(normalize_nonstop(build_model(random_model_spec(rng))));
  }
  EXPECT_GT(multi, 0u);
}
