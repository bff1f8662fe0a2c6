#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace dimc;
using namespace dimc::testing;

namespace {

DecPomdp bundled(const std::string& name) { return load_decpomdp_file(source_path("models/decpomdp/" + name + ".json")); }

DecStrategyProfile bundled_profile(const DecPomdp& m, const std::string& name) {
  return load_dec_profile_file(m, source_path("models/decpomdp/" + name + ".profile.json"));
}

// One player, one action, one observation; the goal is hit with 1/2 per step.
Json coin_doc() {
  return Json::parse(R"({
    "states": ["s", "goal"], "initial": "s", "players": 1,
    "actions": [["go"]], "observations": [["o"]],
    "P": [{"s": "s", "dist": {"s": "1/2", "goal": "1/2"}}, {"s": "goal", "dist": {"goal": 1}}],
    "O": [{"dist": {"o": 1}}],
    "target": ["goal"]})");
}

DecStrategyProfile coin_profile(const DecPomdp& m) { return load_dec_profile(m, Json::parse(R"({"players": [{"default": "go"}]})")); }

}  // namespace

TEST(DecLoad, BundledModels) {
  auto g = bundled("geometric");
  EXPECT_EQ(g.num_players(), 2u);
  EXPECT_EQ(g.num_joint_actions(), 1u);
  EXPECT_TRUE(g.target[1]);
  auto n = bundled("noisy_signal");
  EXPECT_EQ(n.num_joint_actions(), 4u);
  // Joint actions are mixed radix with player 1 least significant.
  EXPECT_EQ(DecPomdp::encode({1, 0}, n.actions), 1u);
  EXPECT_EQ(DecPomdp::decode(2, n.actions), (std::vector<std::size_t>{0, 1}));
}

TEST(DecLoad, Errors) {
  Json bad = coin_doc();
  bad["P"][0]["dist"]["s"] = "2/5";
  EXPECT_THROW(load_decpomdp(bad), DistributionNotNormalized);

  Json overlap = Json::parse(R"({
    "states": ["s"], "initial": "s", "players": 2,
    "actions": [["a"], ["a"]], "observations": [["o"], ["p"]],
    "P": [{"s": "s", "dist": {"s": 1}}], "O": [{"dist": {"o,p": 1}}], "target": []})");
  EXPECT_THROW(load_decpomdp(overlap), SchemaError);

  Json missing = coin_doc();
  missing["P"].erase(1);
  EXPECT_THROW(load_decpomdp(missing), SchemaError);

  Json twice = coin_doc();
  twice["P"].push_back(twice["P"][1]);
  EXPECT_THROW(load_decpomdp(twice), SchemaError);

  Json no_obs = coin_doc();
  no_obs["O"] = Json::array();
  EXPECT_THROW(load_decpomdp(no_obs), SchemaError);

  Json unknown = coin_doc();
  unknown["target"] = {"nowhere"};
  EXPECT_THROW(load_decpomdp(unknown), Error);
}

TEST(DecProfile, LookupOrder) {
  auto m = bundled("noisy_signal");
  auto p = load_dec_profile(m, Json::parse(R"({"players": [
      {"table": {"l,r": "right"}, "last": {"": "left", "r": "right"}, "default": "left"},
      {"last": {"hint_r": "go"}}]})"));
  EXPECT_EQ(p[0].act({}, 0), 0u);
  EXPECT_EQ(p[0].act({0, 1}, 0), 1u);  // exact sequence
  EXPECT_EQ(p[0].act({1}, 0), 1u);     // last observation
  EXPECT_EQ(p[0].act({2}, 0), 0u);     // default
  EXPECT_EQ(p[1].act({1}, 1), 1u);
  EXPECT_THROW(p[1].act({}, 1), UndefinedProfileEntry);
}

TEST(DecSimulate, ClosedFormValues) {
  auto coin = bundled("coin_match");
  EXPECT_EQ(simulate_decpomdp(coin, bundled_profile(coin, "coin_match"), 1, 2000, 1).probability, 1.0);

  auto g = bundled("geometric");
  auto e = simulate_decpomdp(g, bundled_profile(g, "geometric"), 5, 100'000, 2);
  EXPECT_NEAR(e.probability, 1.0 - std::pow(0.7, 5), 3.0 * e.std_error);

  auto n = bundled("noisy_signal");
  auto f = simulate_decpomdp(n, bundled_profile(n, "noisy_signal"), 2, 100'000, 3);
  EXPECT_NEAR(f.probability, 0.6, 3.0 * f.std_error);

  auto c = load_decpomdp(coin_doc());
  auto h = simulate_decpomdp(c, coin_profile(c), 3, 100'000, 4);
  EXPECT_NEAR(h.probability, 0.875, 3.0 * h.std_error);
  EXPECT_THROW(simulate_decpomdp(c, coin_profile(c), 0, 10, 4), SchemaError);
}

TEST(DecSimulate, InitialTargetAndUnreachableTarget) {
  Json doc = coin_doc();
  doc["initial"] = "goal";
  auto m = load_decpomdp(doc);
  EXPECT_EQ(simulate_decpomdp(m, coin_profile(m), 1, 100, 1).probability, 1.0);

  Json stuck = coin_doc();
  stuck["P"][0]["dist"] = {{"s", 1}};
  auto s = load_decpomdp(stuck);
  auto check = check_reduction_equivalence(s, coin_profile(s), 4, 500, 1);
  EXPECT_EQ(check.dec.hits, 0u);
  EXPECT_EQ(check.imc.hits, 0u);
  EXPECT_TRUE(check.pass);
}

TEST(Reduction, OnePlayerShape) {
  auto m = load_decpomdp(coin_doc());
  auto imc = reduce_to_dimc(m);
  ASSERT_EQ(imc.num_players(), 2u);
  const auto& p = imc.module(0);
  EXPECT_EQ(p.states.size(), 4u);  // init, obs:o, in, in#1
  const auto& main = imc.module(1);
  // Per state: entry, one cycle state, one branch; two output states.
  EXPECT_EQ(main.states.size(), 2u * 3u + 2u);
  auto branch = sid(imc, 1, "[s|go]");
  ASSERT_EQ(main.out_delays[branch].size(), 2u);
  for (auto d : main.out_delays[branch]) EXPECT_EQ(main.delays[d].rate, Rational(1, 2));
}

TEST(Reduction, StructureOfBundledModels) {
  for (auto name : {"coin_match", "geometric", "noisy_signal"}) {
    auto m = bundled(name);
    auto imc = reduce_to_dimc(m);
    const std::size_t n = m.num_players();
    ASSERT_EQ(imc.num_players(), n + 1) << name;
    const auto& main = imc.module(n);
    for (PlayerIndex j = 0; j <= n; ++j) {
      const auto& mod = imc.module(j);
      for (StateId s = 0; s < mod.states.size(); ++s) EXPECT_FALSE(mod.out_delays[s].empty()) << mod.states[s];
      if (j < n) EXPECT_EQ(mod.states.size(), 2 + 2 * m.observations[j].size());
    }
    for (StateId s = 0; s < main.states.size(); ++s) EXPECT_LE(main.out_actions[s].size(), 1u) << main.states[s];

    // Polynomial size: entries and cycles of the input gadgets, branch
    // states, and at most n output states per (s', observation).
    std::size_t gadget = 0, prefixes = 1;
    for (std::size_t k = 0; k < n; ++k) {
      gadget += prefixes * (1 + m.actions[k].size());
      prefixes *= m.actions[k].size();
    }
    std::size_t obs = DecPomdp::joint_size(m.observations);
    std::size_t bound = m.states.size() * (gadget + m.num_joint_actions()) + m.states.size() * obs * n;
    EXPECT_LE(main.states.size(), bound) << name;
    EXPECT_GE(main.states.size(), m.states.size() * (gadget + m.num_joint_actions())) << name;

    // Target: exactly the round starts of target states.
    for (StateId s = 0; s < main.states.size(); ++s) {
      GlobalState g(n + 1, 0);
      g[n] = s;
      bool expect = false;
      for (std::size_t x = 0; x < m.states.size(); ++x)
        expect = expect || (m.target[x] && main.states[s] == ReductionNames::round_start(m.states[x]));
      EXPECT_EQ(imc.target().contains(g), expect) << main.states[s];
    }
  }
}

TEST(Reduction, InputGadgetCycles) {
  auto m = bundled("noisy_signal");
  auto imc = reduce_to_dimc(m);
  const auto& main = imc.module(2);
  // Collecting player 1's action in state L: a cycle over its two actions.
  const std::size_t r = m.actions[0].size();
  for (std::size_t x = 0; x < r; ++x) {
    StateId here = sid(imc, 2, "[L]#" + std::to_string(x + 1));
    ASSERT_EQ(main.out_delays[here].size(), 1u);
    EXPECT_EQ(main.states[main.delays[main.out_delays[here][0]].to], "[L]#" + std::to_string((x + 1) % r + 1));
    ASSERT_EQ(main.out_actions[here].size(), 1u);
    const auto& t = main.transitions[main.out_actions[here][0]];
    EXPECT_EQ(imc.action_name(t.label), ReductionNames::out_action(0, m.actions[0][x]));
    EXPECT_EQ(main.states[t.to], "[L|" + m.actions[0][x] + "]");
  }
}

TEST(Reduction, RatesAreFaithful) {
  for (const Rational& rate : {Rational(1), Rational(5, 2)}) {
    auto m = bundled("noisy_signal");
    auto imc = reduce_to_dimc(m, rate);
    const auto& main = imc.module(2);
    for (std::size_t s = 0; s < m.states.size(); ++s)
      for (std::size_t a = 0; a < m.num_joint_actions(); ++a) {
        auto parts = DecPomdp::decode(a, m.actions);
        std::string name = "[" + m.states[s] + "|" + m.actions[0][parts[0]] + "," + m.actions[1][parts[1]] + "]";
        StateId branch = sid(imc, 2, name);
        Rational total = 0;
        for (auto d : main.out_delays[branch]) total += main.delays[d].rate;
        EXPECT_EQ(total, rate) << name;
        // Each successor/observation pair carries P·O of the total.
        for (const auto& [s2, p] : m.P[s][a])
          for (const auto& [o, q] : m.observation(s, a, s2)) {
            auto op = DecPomdp::decode(o, m.observations);
            std::string out = "out[" + m.states[s2] + "|" + m.observations[0][op[0]] + "," + m.observations[1][op[1]] + "]@1";
            Rational got = 0;
            for (auto d : main.out_delays[branch])
              if (main.states[main.delays[d].to] == out) got += main.delays[d].rate;
            EXPECT_EQ(got / total, p * q) << name << " -> " << out;
          }
      }
  }
  EXPECT_THROW(reduce_to_dimc(bundled("geometric"), Rational(0)), NonPositiveRate);
}

TEST(Reduction, CycleRateDoesNotChangeOutcomes) {
  // Scaling every rate by 2 leaves each race winner unchanged draw for draw.
  auto m = bundled("noisy_signal");
  auto profile = bundled_profile(m, "noisy_signal");
  auto a = check_reduction_equivalence(m, profile, 2, 5000, 6, Rational(1));
  auto b = check_reduction_equivalence(m, profile, 2, 5000, 6, Rational(2));
  EXPECT_EQ(a.imc.hits, b.imc.hits);
  auto c = check_reduction_equivalence(m, profile, 2, 5000, 6, Rational(1, 3));
  EXPECT_TRUE(ci_overlap(a.imc, c.imc));
}

TEST(Reduction, EquivalenceOnBundledModels) {
  const std::pair<const char*, std::size_t> cases[] = {{"coin_match", 1}, {"geometric", 5}, {"noisy_signal", 2}};
  for (const auto& [name, horizon] : cases) {
    auto m = bundled(name);
    auto check = check_reduction_equivalence(m, bundled_profile(m, name), horizon, 20'000, 11);
    EXPECT_TRUE(check.pass) << name << " " << check.dec.probability << " vs " << check.imc.probability;
  }
  auto c = load_decpomdp(coin_doc());
  auto check = check_reduction_equivalence(c, coin_profile(c), 3, 20'000, 12);
  EXPECT_TRUE(check.pass) << check.dec.probability << " vs " << check.imc.probability;
}

TEST(Reduction, TranslatedStrategyReadsObservations) {
  auto m = bundled("noisy_signal");
  auto imc = reduce_to_dimc(m);
  auto profile = bundled_profile(m, "noisy_signal");
  TranslatedDecStrategy p2(imc, m, 1, profile[1]);
  ActionId hint_r = *imc.find_action(ReductionNames::in_action(1, "hint_r"));
  LocalHistory h(1);
  h.append({Label::none(), 0.0, sid(imc, 1, "init"), LocalChoice::bottom()}, false);
  EXPECT_EQ(imc.action_name(imc.label_of(1, p2.decide(h))), ReductionNames::out_action(1, "wait"));
  h.append({Label::action(hint_r), 1.0, sid(imc, 1, "obs:hint_r"), LocalChoice::bottom()}, true);
  EXPECT_EQ(imc.action_name(imc.label_of(1, p2.decide(h))), ReductionNames::out_action(1, "go"));
}
