#pragma once

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dimc/decpomdp.hpp"
#include "dimc/estimate.hpp"
#include "dimc/mdp_solve.hpp"
#include "dimc/model_io.hpp"
#include "dimc/non_urgent.hpp"
#include "dimc/normalize.hpp"
#include "dimc/profile_io.hpp"
#include "dimc/slot.hpp"
#include "dimc/sync_policy.hpp"

namespace dimc {

inline constexpr const char* kToolVersion = "dimc 1.0.0";

namespace cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string error_type(const std::string& what) {
  auto colon = what.find(':');
  return colon == std::string::npos ? "Error" : what.substr(0, colon);
}

inline Json estimate_json(const ReachEstimate& e) {
  return Json{{"p", e.probability},     {"stderr", e.std_error}, {"ci99", {e.ci_low, e.ci_high}},
              {"samples", e.samples},   {"hits", e.hits},        {"truncated", e.truncated}};
}

inline std::vector<std::string> state_names(const DistributedImc& model, PlayerIndex j,
                                            const std::vector<StateId>& ids) {
  std::vector<std::string> out;
  for (auto s : ids) out.push_back(model.module(j).states[s]);
  return out;
}

inline Json non_urgency_json(const DistributedImc& model, const NonUrgencyReport& r) {
  Json players = Json::array();
  for (PlayerIndex j = 0; j < model.num_players(); ++j) {
    Json p;
    p["player"] = j + 1;
    p["module"] = model.module(j).name;
    p["sync_local_states"] = state_names(model, j, r.sync_local_states[j]);
    p["private_local_states"] = state_names(model, j, r.private_local_states[j]);
    p["nothing_action"] = r.nothing_actions[j] ? Json(model.action_name(*r.nothing_actions[j])) : Json(nullptr);
    players.push_back(std::move(p));
  }
  return Json{{"is_non_urgent", r.is_non_urgent}, {"players", players}, {"violations", r.violations}};
}

inline Horizon horizon_of(std::size_t steps, double time) {
  if (steps == 0 || !(time > 0)) throw UsageError("horizon must be positive");
  return {steps, time};
}

inline DistributedImc prepared_model(const std::string& path) { return normalize_nonstop(load_model_file(path)); }

struct Options {
  std::string model, profile, policy, input, output, report_path, csv, scheduler = "lexicographic", p;
  std::vector<std::string> schedulers;
  std::vector<std::uint64_t> i_values;
  std::size_t samples = 10'000;
  std::uint64_t seed = 0;
  std::size_t horizon_steps = Horizon{}.max_steps;
  double horizon_time = Horizon{}.max_time;
  std::size_t rounds = 1;
  double epsilon = kDefaultEpsilon;
  std::uint64_t policy_cap = kDefaultPolicyCap;
  std::string cycle_rate = "1";
  bool exact = false, oracle = false, deterministic = false, require_non_urgent = false;
};

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Distributed interactive Markov chains: validate, simulate, solve, emulate", "dimc"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--deterministic", o.deterministic, "Suppress timestamps; randomized commands need --seed");
  app.add_option("-o,--report", o.report_path, "Write the JSON report to FILE instead of standard output");

  auto seed_opt = [&](CLI::App* sub) { return sub->add_option("--seed", o.seed, "Random seed"); };
  auto horizon_opts = [&](CLI::App* sub) {
    sub->add_option("--horizon-steps", o.horizon_steps, "Maximal number of steps per play");
    sub->add_option("--horizon-time", o.horizon_time, "Maximal time per play");
  };

  auto* validate = app.add_subcommand("validate", "Load a model and report its structure and non-urgency");
  validate->add_option("--model", o.model, "Model file")->required();
  validate->add_flag("--require-non-urgent", o.require_non_urgent, "Exit with status 1 unless the model is non-urgent");

  auto* simulate = app.add_subcommand("simulate", "Estimate the reach probability of a strategy profile");
  simulate->add_option("--model", o.model, "Model file")->required();
  simulate->add_option("--profile", o.profile, "Profile file")->required();
  simulate->add_option("--scheduler", o.scheduler, "lexicographic | reverse-lexicographic | uniform-random");
  simulate->add_option("--samples", o.samples, "Number of plays");
  CLI::Option* sim_seed = seed_opt(simulate);
  horizon_opts(simulate);

  auto* solve = app.add_subcommand("solve", "Solve the value problem of a 2-player non-urgent model");
  solve->add_option("--model", o.model, "Model file")->required();
  solve->add_option("--p", o.p, "Threshold (rational p/q or decimal)")->required();
  solve->add_option("--epsilon", o.epsilon, "Value-iteration tolerance")->check(CLI::PositiveNumber);
  solve->add_flag("--exact", o.exact, "Verify the policy with exact rational arithmetic");
  solve->add_flag("--oracle", o.oracle, "Cross-check against brute-force policy enumeration");
  solve->add_option("--policy-cap", o.policy_cap, "Maximal number of private strategies per player");

  auto* emulate = app.add_subcommand("emulate", "Evaluate the slot emulation of a solved policy");
  emulate->add_option("--model", o.model, "Model file")->required();
  emulate->add_option("--policy", o.policy, "Policy file (a solve report)")->required();
  emulate->add_option("--i", o.i_values, "Accuracy indices")->required()->delimiter(',')->check(CLI::PositiveNumber);
  emulate->add_option("--samples", o.samples, "Plays per accuracy index");
  emulate->add_option("--scheduler", o.scheduler, "Scheduler");
  emulate->add_option("--csv", o.csv, "Also write i,estimate,stderr,bound,pass to FILE");
  CLI::Option* emu_seed = seed_opt(emulate);
  horizon_opts(emulate);

  auto* compile = app.add_subcommand("compile-decpomdp", "Reduce a DEC-POMDP to a distributed IMC");
  compile->add_option("--in", o.input, "DEC-POMDP file")->required();
  compile->add_option("--out", o.output, "Model file to write")->required();
  compile->add_option("--cycle-rate", o.cycle_rate, "Rate of the round-robin cycles");

  auto* check = app.add_subcommand("check-reduction", "Compare a DEC-POMDP with its reduction by simulation");
  check->add_option("--in", o.input, "DEC-POMDP file")->required();
  check->add_option("--profile", o.profile, "DEC-POMDP profile file")->required();
  check->add_option("--horizon", o.rounds, "Number of DEC-POMDP steps")->required()->check(CLI::PositiveNumber);
  check->add_option("--samples", o.samples, "Plays per side");
  check->add_option("--cycle-rate", o.cycle_rate, "Rate of the round-robin cycles");
  CLI::Option* check_seed = seed_opt(check);

  auto* sched = app.add_subcommand("sched-test", "Compare reach estimates under several schedulers");
  sched->add_option("--model", o.model, "Model file")->required();
  sched->add_option("--profile", o.profile, "Profile file")->required();
  sched->add_option("--schedulers", o.schedulers, "Schedulers to compare")->delimiter(',');
  sched->add_option("--samples", o.samples, "Plays per scheduler");
  CLI::Option* sched_seed = seed_opt(sched);
  horizon_opts(sched);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  Json report;
  report["tool_version"] = kToolVersion;
  report["command"] = command;
  auto started = std::chrono::steady_clock::now();
  int status = 0;

  auto finish = [&]() {
    if (!o.deterministic) {
      std::time_t now = std::time(nullptr);
      std::ostringstream ts;
      ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
      report["timestamp"] = ts.str();
      report["elapsed_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    std::string text = report.dump(2) + "\n";
    if (o.report_path.empty()) {
      out << text;
    } else {
      std::ofstream f(o.report_path);
      if (!f) {
        err << "cannot write report to " << o.report_path << "\n";
        return 1;
      }
      f << text;
    }
    return status;
  };

  try {
    if (o.deterministic) {
      std::pair<CLI::App*, CLI::Option*> seeds[] = {
          {simulate, sim_seed}, {emulate, emu_seed}, {check, check_seed}, {sched, sched_seed}};
      for (auto [owner, seed] : seeds)
        if (owner == sub && seed->count() == 0)
          throw UsageError("--deterministic requires an explicit --seed for '" + command + "'");
    }
    Json config;
    auto echo_horizon = [&] {
      config["horizon_steps"] = o.horizon_steps;
      config["horizon_time"] = o.horizon_time;
    };

    if (command == "validate") {
      config["model"] = o.model;
      report["config"] = config;
      auto raw = load_model_file(o.model);
      auto model = normalize_nonstop(raw);
      Json modules = Json::array();
      for (PlayerIndex j = 0; j < model.num_players(); ++j) {
        const auto& m = model.module(j);
        modules.push_back({{"name", m.name},
                           {"states", m.states.size()},
                           {"action_transitions", m.transitions.size()},
                           {"delay_transitions", m.delays.size()}});
      }
      Json sync = Json::object();
      for (ActionId a = 0; a < model.num_actions(); ++a) {
        Json players = Json::array();
        for (auto j : model.sync_set(a)) players.push_back(j + 1);
        sync[model.action_name(a)] = players;
      }
      report["valid"] = true;
      report["players"] = model.num_players();
      report["modules"] = modules;
      report["sync_sets"] = sync;
      report["normalized"] = needs_normalization(raw);
      auto nu = check_non_urgent(raw);
      report["non_urgency"] = non_urgency_json(raw, nu);
      report["is_non_urgent"] = nu.is_non_urgent;
      if (o.require_non_urgent && !nu.is_non_urgent) status = 1;
    } else if (command == "simulate") {
      config = {{"model", o.model}, {"profile", o.profile}, {"scheduler", o.scheduler},
                {"samples", o.samples}, {"seed", o.seed}};
      echo_horizon();
      report["config"] = config;
      auto model = prepared_model(o.model);
      auto profile = load_profile_file(model, o.profile);
      auto scheduler = make_scheduler(o.scheduler);
      if (o.samples == 0) throw UsageError("--samples must be at least 1");
      auto e = estimate_reach(model, *profile, *scheduler, o.samples, horizon_of(o.horizon_steps, o.horizon_time), o.seed);
      Json fields = estimate_json(e);
      for (auto& [k, v] : fields.items()) report[k] = v;
    } else if (command == "solve") {
      config = {{"model", o.model}, {"p", o.p}, {"epsilon", o.epsilon}, {"exact", o.exact},
                {"oracle", o.oracle}, {"policy_cap", o.policy_cap}};
      report["config"] = config;
      Rational p;
      try {
        p = parse_rational(o.p);
      } catch (const Error& e) {
        throw UsageError(std::string("--p: ") + e.what());
      }
      if (p < 0 || p > 1) throw UsageError("--p must lie in [0, 1]");
      auto model = prepared_model(o.model);
      BuildOptions options{o.policy_cap};
      SyncMdp<double> mdp;
      std::optional<SyncMdp<Rational>> exact_mdp;
      if (o.exact) {
        exact_mdp = build_mdp<Rational>(model, options);
        mdp = to_double_mdp(*exact_mdp);
      } else {
        mdp = build_mdp<double>(model, options);
      }
      auto policy = solve_max_reach(mdp, o.epsilon);
      double value = policy.value[0];
      report["value"] = value;
      report["verdict"] = verdict_name(decide(value, p, o.epsilon));
      report["mdp_states"] = mdp.states.size();
      report["mdp_actions"] = mdp.num_actions();
      report["mdp_actions_before_dedup"] = mdp.defined_actions;
      report["iterations"] = policy.iterations;
      report["improvements"] = policy.improvements;
      if (exact_mdp) {
        auto check = verify_exact(*exact_mdp, policy.choice);
        report["exact"] = {{"value", format_rational(check.value[0])},
                           {"value_double", to_double(check.value[0])},
                           {"optimal", check.optimal}};
        if (!check.optimal) {
          report["exact"]["witness"] = check.witness;
          status = 1;
        }
      }
      if (o.oracle) {
        auto oracle = oracle_policy_enum(mdp);
        bool agrees = std::abs(oracle.value - value) <= 10 * o.epsilon;
        report["oracle"] = {{"value", oracle.value}, {"policies", oracle.policies}, {"agrees", agrees}};
        if (!agrees) status = 1;
      }
      report["policy"] = policy_to_json(model, make_sync_policy(model, mdp, policy, options));
    } else if (command == "emulate") {
      config = {{"model", o.model}, {"policy", o.policy}, {"i", o.i_values}, {"samples", o.samples},
                {"seed", o.seed}, {"scheduler", o.scheduler}};
      echo_horizon();
      report["config"] = config;
      if (o.samples == 0) throw UsageError("--samples must be at least 1");
      auto model = prepared_model(o.model);
      auto policy = load_policy_file(model, o.policy);
      auto scheduler = make_scheduler(o.scheduler);
      auto rows = evaluate_emulation(model, policy, o.i_values, o.samples, o.seed,
                                     horizon_of(o.horizon_steps, o.horizon_time), *scheduler);
      report["v"] = policy.value();
      Json table = Json::array(), schedules = Json::array();
      bool all = true;
      for (const auto& r : rows) {
        table.push_back({{"i", r.i},
                         {"estimate", r.estimate.probability},
                         {"stderr", r.estimate.std_error},
                         {"bound", r.bound},
                         {"pass", r.pass},
                         {"truncated", r.estimate.truncated}});
        auto s = build_slot_schedule(model, r.i);
        schedules.push_back({{"i", s.i},
                             {"lambda_min", s.lambda_min},
                             {"K_i", s.K_i},
                             {"rows", s.rows},
                             {"cols", s.cols},
                             {"sync_states1", state_names(model, 0, s.sync_states[0])},
                             {"sync_states2", state_names(model, 1, s.sync_states[1])}});
        all = all && r.pass;
      }
      report["rows"] = table;
      report["schedules"] = schedules;
      report["pass"] = all;
      if (!o.csv.empty()) {
        std::ofstream f(o.csv);
        if (!f) throw UsageError("cannot write " + o.csv);
        f << "i,estimate,stderr,bound,pass\n" << std::setprecision(17);
        for (const auto& r : rows)
          f << r.i << ',' << r.estimate.probability << ',' << r.estimate.std_error << ',' << r.bound << ','
            << (r.pass ? "true" : "false") << '\n';
      }
      if (!all) status = 1;
    } else if (command == "compile-decpomdp") {
      config = {{"in", o.input}, {"out", o.output}, {"cycle_rate", o.cycle_rate}};
      report["config"] = config;
      auto dec = load_decpomdp_file(o.input);
      auto imc = reduce_to_dimc(dec, parse_rational(o.cycle_rate));
      std::ofstream f(o.output);
      if (!f) throw UsageError("cannot write " + o.output);
      f << serialize_model(imc).dump(2) << "\n";
      Json modules = Json::array();
      std::size_t states = 0, transitions = 0;
      for (PlayerIndex j = 0; j < imc.num_players(); ++j) {
        const auto& m = imc.module(j);
        modules.push_back({{"name", m.name}, {"states", m.states.size()}});
        states += m.states.size();
        transitions += m.transitions.size() + m.delays.size();
      }
      report["modules"] = modules;
      report["states"] = states;
      report["transitions"] = transitions;
    } else if (command == "check-reduction") {
      config = {{"in", o.input}, {"profile", o.profile}, {"horizon", o.rounds}, {"samples", o.samples},
                {"seed", o.seed}, {"cycle_rate", o.cycle_rate}};
      report["config"] = config;
      if (o.samples == 0) throw UsageError("--samples must be at least 1");
      auto dec = load_decpomdp_file(o.input);
      auto profile = load_dec_profile_file(dec, o.profile);
      auto r = check_reduction_equivalence(dec, profile, o.rounds, o.samples, o.seed, parse_rational(o.cycle_rate));
      report["p_dec"] = estimate_json(r.dec);
      report["p_imc"] = estimate_json(r.imc);
      report["pass"] = r.pass;
      if (!r.pass) status = 1;
    } else if (command == "sched-test") {
      if (o.schedulers.empty()) o.schedulers = builtin_scheduler_names();
      config = {{"model", o.model}, {"profile", o.profile}, {"schedulers", o.schedulers},
                {"samples", o.samples}, {"seed", o.seed}};
      echo_horizon();
      report["config"] = config;
      if (o.samples == 0) throw UsageError("--samples must be at least 1");
      auto model = prepared_model(o.model);
      auto profile = load_profile_file(model, o.profile);
      auto r = scheduler_invariance_report(model, *profile, o.schedulers, o.samples,
                                           horizon_of(o.horizon_steps, o.horizon_time), o.seed);
      Json estimates = Json::array(), overlaps = Json::array();
      for (std::size_t a = 0; a < r.schedulers.size(); ++a) {
        Json e = estimate_json(r.estimates[a]);
        e["scheduler"] = r.schedulers[a];
        estimates.push_back(std::move(e));
        for (std::size_t b = a + 1; b < r.schedulers.size(); ++b)
          overlaps.push_back({{"a", r.schedulers[a]}, {"b", r.schedulers[b]}, {"overlap", bool(r.overlaps[a][b])}});
      }
      report["estimates"] = estimates;
      report["overlaps"] = overlaps;
      report["verdict"] = r.pass ? "PASS" : "FAIL";
      report["pass"] = r.pass;
      if (!r.pass) status = 1;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << sub->help();
    return 2;
  } catch (const Error& e) {
    report["error"] = {{"type", error_type(e.what())}, {"message", e.what()}};
    err << e.what() << "\n";
    status = 1;
  } catch (const std::exception& e) {
    report["error"] = {{"type", "Error"}, {"message", e.what()}};
    err << e.what() << "\n";
    status = 1;
  }
  if (!report.contains("config")) report["config"] = Json::object();
  return finish();
}

}  // namespace cli
}  // namespace dimc
