#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace dimc;
using namespace dimc::testing;

namespace {

std::uint64_t scan_k(double lambda, double threshold) {
  for (std::uint64_t k = 1;; ++k)
    if (std::exp(-lambda * static_cast<double>(k)) <= threshold) return k;
}

// One synchronisation state per player, both with delay rate `rate`.
DistributedImc one_by_one(const std::string& rate) {
  Json p1{{"name", "P1"}, {"states", {"s", "p"}}, {"initial", "s"}, {"actions", {"x", "n1", "n2"}},
          {"nothing_action", "n1"},
          {"transitions", {{{"from", "s"}, {"label", "x"}, {"to", "p"}}, {{"from", "s"}, {"label", "n1"}, {"to", "s"}}}},
          {"delays", {{{"from", "s"}, {"rate", rate}, {"to", "s"}}, {{"from", "p"}, {"rate", "1"}, {"to", "s"}}}}};
  Json p2{{"name", "P2"}, {"states", {"u"}}, {"initial", "u"}, {"actions", {"x", "n1", "n2"}},
          {"nothing_action", "n2"},
          {"transitions", {{{"from", "u"}, {"label", "x"}, {"to", "u"}}, {{"from", "u"}, {"label", "n2"}, {"to", "u"}}}},
          {"delays", {{{"from", "u"}, {"rate", rate}, {"to", "u"}}}}};
  return normalize_nonstop(load_model(Json{{"modules", {p1, p2}}, {"target", Json::array({Json::array({"s", "u"})})}}));
}

BigInt floor_div(const Rational& a, const Rational& b) {
  Rational q = a / b;
  return numerator(q) / denominator(q);
}

struct Fixture {
  DistributedImc model = prepared("app_att_nonurgent.json");
  SyncPolicy policy;
  EmulatedProfile emulated;

  explicit Fixture(std::uint64_t i = 2) {
    auto d = decide_value_problem(model, Rational(1));
    policy = make_sync_policy(model, d.mdp, d.policy);
    emulated = emulated_profile(model, policy, i);
  }

  // A local history of player j ending in `state` at time t after `syncs`
  // synchronisations, the last one at time `sync_time`.
  LocalHistory history(PlayerIndex j, StateId start, StateId state, double t, std::size_t syncs,
                       double sync_time) const {
    LocalHistory h(j);
    h.append({Label::none(), 0.0, start, LocalChoice::bottom()}, false);
    ActionId login = *model.find_action("login");
    for (std::size_t k = 0; k < syncs; ++k) h.append({Label::action(login), sync_time, state, LocalChoice::bottom()}, true);
    if (syncs == 0 || t != sync_time) h.append({Label::delay(j), t, state, LocalChoice::bottom()}, false);
    return h;
  }

  const PolicyEntry& entry(StateId s1, StateId s2) const { return policy.entry(*policy.find(GlobalState{s1, s2})); }
};

}  // namespace

TEST(SlotK, ScanExamples) {
  EXPECT_EQ(build_slot_schedule(one_by_one("1"), 1).K_i, 3u);
  EXPECT_EQ(build_slot_schedule(one_by_one("2"), 1).K_i, 2u);
  EXPECT_EQ(build_slot_schedule(one_by_one("1"), 2).K_i, 3u);
  auto s = build_slot_schedule(one_by_one("1/2"), 1);
  EXPECT_EQ(s.lambda_min, 0.5);
  EXPECT_EQ(s.K_i, scan_k(0.5, 1.0 / 8.0));
  EXPECT_EQ(s.rows, 1u);
  EXPECT_EQ(s.cols, 2u);
  EXPECT_THROW(build_slot_schedule(one_by_one("1"), 0), SchemaError);
}

TEST(SlotK, NonUrgentExampleGrid) {
  auto m = prepared("app_att_nonurgent.json");
  auto s = build_slot_schedule(m, 1);
  EXPECT_EQ(s.rows, 6u);
  EXPECT_EQ(s.cols, 8u);
  EXPECT_EQ(s.lambda_min, 1.0);
  EXPECT_EQ(s.K_i, scan_k(1.0, 1.0 / (4.0 * 10.0)));
}

TEST(SlotKProperty, AgreesWithScan) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lam(0.01, 20.0);
  for (int round = 0; round < 5000; ++round) {
    double lambda = lam(rng);
    std::uint64_t i = 1 + rng() % 1000;
    std::uint64_t sizes = 2 + rng() % 40;
    double threshold = 1.0 / (4.0 * static_cast<double>(i) * static_cast<double>(sizes));
    ASSERT_EQ(minimal_k(lambda, threshold), scan_k(lambda, threshold)) << lambda << " " << threshold;
  }
  for (double lambda : {1e-3, 0.1, 1.0, 50.0, 1000.0}) EXPECT_EQ(minimal_k(lambda, 0.5), scan_k(lambda, 0.5));
}

TEST(LocateSlot, Examples) {
  SlotSchedule s;
  s.rows = 3;
  s.cols = 4;
  s.K_i = 1;
  s.lambda_min = 1.0;
  auto p = locate_slot(s, 0, 0.0);
  EXPECT_EQ(p.row, 0u);
  EXPECT_EQ(p.col, 0u);
  EXPECT_TRUE(p.sync);
  p = locate_slot(s, 0, 5.5);
  EXPECT_EQ(p.row, 1u);
  EXPECT_EQ(p.col, 1u);
  EXPECT_FALSE(p.sync);
  p = locate_slot(s, 0, 13.0);
  EXPECT_EQ(p.row, 0u);
  EXPECT_EQ(p.col, 1u);
  p = locate_slot(s, 2, 6.5);  // slot length 3
  EXPECT_EQ(p.col, 2u);
  EXPECT_EQ(p.row, 0u);
  EXPECT_TRUE(p.sync);
  p = locate_slot(s, 0, 1.0);
  EXPECT_EQ(p.col, 1u);
}

TEST(LocateSlotProperty, FormulaOracleOnRandomPoints) {
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> time(0.0, 5000.0);
  const double lambdas[] = {0.5, 1.0, 2.0, 4.0};
  for (int n = 0; n < 1000; ++n) {
    SlotSchedule s;
    s.rows = 1 + rng() % 7;
    s.cols = 2 * (1 + rng() % 5);
    s.K_i = 1 + rng() % 9;
    s.lambda_min = lambdas[rng() % 4];
    std::uint64_t k = rng() % 50;
    double t = time(rng);
    Rational len = Rational(s.K_i) + Rational(k) / Rational(s.lambda_min);
    Rational tr(t);
    BigInt col = floor_div(tr, len) % BigInt(s.cols);
    BigInt row = floor_div(tr, len * Rational(s.cols)) % BigInt(s.rows);
    auto p = locate_slot(s, k, t);
    ASSERT_EQ(BigInt(p.col), col) << "t=" << t << " k=" << k;
    ASSERT_EQ(BigInt(p.row), row) << "t=" << t << " k=" << k;
    ASSERT_EQ(p.sync, col % 2 == 0);
  }
}

TEST(SlotLength, MonotoneInK) {
  SlotSchedule s;
  s.rows = 2;
  s.cols = 4;
  s.K_i = 3;
  s.lambda_min = 0.7;
  for (std::uint64_t k = 0; k < 100; ++k) {
    EXPECT_LT(s.slot_length(k), s.slot_length(k + 1));
    EXPECT_DOUBLE_EQ(s.phase_length(k), 8.0 * s.slot_length(k));
  }
}

TEST(ErrorBound, Values) {
  SlotSchedule s;
  s.i = 4;
  EXPECT_DOUBLE_EQ(emulation_error_bound(s, 0).per_k[0], 0.125);
  s.i = 10;
  EXPECT_DOUBLE_EQ(emulation_error_bound(s, 3).per_k[3], 0.00625);
  for (std::uint64_t i : {1u, 2u, 7u}) {
    s.i = i;
    auto b = emulation_error_bound(s, 80);
    EXPECT_LE(b.total, 1.0 / static_cast<double>(i));
    EXPECT_NEAR(b.total, 1.0 / static_cast<double>(i), 1e-12);
  }
}

TEST(SlotStrategy, CorrectGuessCommitsPolicyChoice) {
  Fixture f;
  const auto& sched = *f.emulated.schedule;
  std::mt19937_64 rng(5);
  std::size_t commits = 0;
  for (std::size_t r = 0; r < sched.rows; ++r)
    for (std::size_t c = 0; c < sched.cols / 2; ++c) {
      StateId s1 = sched.sync_states[0][r], s2 = sched.sync_states[1][c];
      const auto& e = f.entry(s1, s2);
      for (int trial = 0; trial < 5; ++trial) {
        std::size_t k = rng() % 4;
        double len = sched.slot_length(k);
        double phase = static_cast<double>(rng() % 3);
        double t = (phase * sched.rows * sched.cols + r * sched.cols + 2 * c + 0.5) * len;
        for (PlayerIndex j = 0; j < 2; ++j) {
          StateId own = j == 0 ? s1 : s2;
          auto h = f.history(j, own, own, t, k, k ? t * 0.5 : 0.0);
          LocalChoice got = f.emulated.players[j]->decide(h);
          if (e.kind == MdpActionKind::Sync) {
            EXPECT_EQ(got, e.choice[j]);
            ++commits;
          } else {
            EXPECT_EQ(f.model.label_of(j, got), *f.model.module(j).nothing_action);
          }
          // One slot later the column is odd: nobody commits.
          auto idle = f.history(j, own, own, t + len, k, k ? t * 0.5 : 0.0);
          EXPECT_EQ(f.model.label_of(j, f.emulated.players[j]->decide(idle)), *f.model.module(j).nothing_action);
        }
      }
    }
  EXPECT_GT(commits, 0u);
}

TEST(SlotStrategy, WrongGuessPlaysNothing) {
  Fixture f;
  const auto& sched = *f.emulated.schedule;
  // Row 0 is announced, player 1 sits in the state of row 1.
  StateId other = sched.sync_states[0][1];
  auto h = f.history(0, other, other, 0.5, 0, 0.0);
  EXPECT_EQ(f.model.label_of(0, f.emulated.players[0]->decide(h)), *f.model.module(0).nothing_action);
}

TEST(SlotStrategy, PrivateStateUsesGuessAtLastSync) {
  Fixture f;
  const auto& sched = *f.emulated.schedule;
  StateId cbar3 = sid(f.model, 1, "cbar3");
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> time(0.0, 2000.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t syncs = 1 + rng() % 3;
    double t0 = time(rng);
    auto h = f.history(1, sid(f.model, 1, "cbar1"), cbar3, t0, syncs, t0);
    // Oracle: the grid position under the count in force before the last
    // synchronisation.
    double len = sched.slot_length(syncs - 1);
    auto col = static_cast<std::size_t>(std::fmod(std::floor(t0 / len), static_cast<double>(sched.cols)));
    auto row = static_cast<std::size_t>(std::fmod(std::floor(t0 / (len * sched.cols)), static_cast<double>(sched.rows)));
    const auto& e = f.entry(sched.sync_states[0][row], sched.sync_states[1][col / 2]);
    EXPECT_EQ(f.emulated.players[1]->decide(h), e.sigma[1][cbar3]);
  }
  // Before any synchronisation the initial state's entry applies.
  StateId c0 = sid(f.model, 0, "c0");
  auto h = f.history(0, c0, c0, 0.0, 0, 0.0);
  EXPECT_EQ(f.emulated.players[0]->decide(h), f.policy.entry(0).sigma[0][c0]);
}

TEST(SlotStrategy, DependsOnLocalProjectionOnly) {
  Fixture f;
  LexicographicScheduler lex;
  for (std::uint64_t i = 0; i < 50; ++i) {
    GlobalHistory h;
    sample_play(f.model, *f.emulated.profile, lex, Horizon{200, 1e6}, 12, i, &h);
    // Interleave invisible steps of the other player.
    GlobalHistory padded;
    for (const auto& step : h) {
      padded.push_back(step);
      HistoryStep noise = step;
      noise.label = Label::delay(1);
      padded.push_back(noise);
    }
    auto a = local_projection(f.model, h, 0);
    auto b = local_projection(f.model, padded, 0);
    ASSERT_TRUE(a == b);
    EXPECT_EQ(f.emulated.players[0]->decide(a), f.emulated.players[0]->decide(b));
  }
}

TEST(SlotStrategy, PolicyMustCoverGrid) {
  auto m = prepared("app_att_nonurgent.json");
  auto schedule = std::make_shared<const SlotSchedule>(build_slot_schedule(m, 1));
  auto partial = std::make_shared<const SyncPolicy>(std::vector<GlobalState>{m.initial_state()},
                                                    std::vector<PolicyEntry>(1));
  EXPECT_THROW(SlotStrategy(m, 0, schedule, partial), SchemaError);
}

TEST(Emulation, DeterministicRows) {
  Fixture f;
  auto a = evaluate_emulation(f.model, f.policy, {1, 2}, 2000, 9);
  auto b = evaluate_emulation(f.model, f.policy, {1, 2}, 2000, 9);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].estimate.hits, b[k].estimate.hits);
    EXPECT_TRUE(a[k].pass);
    EXPECT_DOUBLE_EQ(a[k].bound, 1.0 / static_cast<double>(a[k].i));
  }
}

TEST(Emulation, InitialStateInTarget) {
  Json doc = model_json("app_att_nonurgent.json");
  doc["target"].push_back({"c0", "cbar1"});
  auto m = normalize_nonstop(load_model(doc));
  auto d = decide_value_problem(m, Rational(1));
  auto policy = make_sync_policy(m, d.mdp, d.policy);
  for (const auto& row : evaluate_emulation(m, policy, {1, 4}, 500, 1)) EXPECT_EQ(row.estimate.probability, 1.0);
}

TEST(Emulation, ApproachesValueOnRelay) {
  auto m = prepared("relay.json");
  auto d = decide_value_problem(m, Rational(1, 2));
  auto policy = make_sync_policy(m, d.mdp, d.policy);
  for (const auto& row : evaluate_emulation(m, policy, {1, 4, 16}, 4000, 2))
    EXPECT_TRUE(row.pass) << row.i << " " << row.estimate.probability;
}
