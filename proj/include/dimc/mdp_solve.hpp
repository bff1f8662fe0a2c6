#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dimc/linear.hpp"
#include "dimc/sync_mdp.hpp"

namespace dimc {

inline constexpr double kDefaultEpsilon = 1e-9;

struct MdpPolicy {
  std::vector<std::size_t> choice;  // per S' state, index into its action list
  std::vector<double> value;        // per S' state
  std::size_t iterations = 0;       // value-iteration sweeps
  std::size_t improvements = 0;     // policy switches after extraction
};

namespace detail {

template <typename Scalar>
Scalar action_value(const MdpAction<Scalar>& a, const std::vector<Scalar>& v) {
  Scalar sum{0};
  for (const auto& [t, p] : a.dist) sum += p * v[t];
  return sum;
}

// States from which the target is reachable with positive probability under
// the fixed policy.
template <typename Scalar>
std::vector<bool> policy_can_reach(const SyncMdp<Scalar>& mdp, const std::vector<std::size_t>& policy) {
  const std::size_t n = mdp.states.size();
  std::vector<std::vector<std::size_t>> preds(n);
  for (std::size_t s = 0; s < n; ++s)
    for (const auto& [t, p] : mdp.actions[s][policy[s]].dist)
      if (p != Scalar(0)) preds[t].push_back(s);
  std::vector<bool> good(n, false);
  std::vector<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s)
    if (mdp.target[s]) {
      good[s] = true;
      queue.push_back(s);
    }
  for (std::size_t h = 0; h < queue.size(); ++h)
    for (auto p : preds[queue[h]])
      if (!good[p]) {
        good[p] = true;
        queue.push_back(p);
      }
  return good;
}

}  // namespace detail

// Reachability probability of T from every S' state under a pure memoryless
// MDP policy, by one linear solve.
template <typename Scalar>
std::vector<Scalar> evaluate_policy(const SyncMdp<Scalar>& mdp, const std::vector<std::size_t>& policy) {
  const std::size_t n = mdp.states.size();
  auto good = detail::policy_can_reach(mdp, policy);
  std::vector<std::size_t> unknown(n, std::numeric_limits<std::size_t>::max());
  std::size_t count = 0;
  for (std::size_t s = 0; s < n; ++s)
    if (good[s] && !mdp.target[s]) unknown[s] = count++;
  std::vector<SparseRow<Scalar>> q(count), r(count);
  for (std::size_t s = 0; s < n; ++s) {
    if (unknown[s] == std::numeric_limits<std::size_t>::max()) continue;
    for (const auto& [t, p] : mdp.actions[s][policy[s]].dist) {
      if (mdp.target[t]) r[unknown[s]].emplace_back(0, p);
      else if (good[t]) q[unknown[s]].emplace_back(unknown[t], p);
    }
  }
  std::vector<Scalar> value(n, Scalar(0));
  if (count > 0) {
    auto x = solve_absorption(q, r, 1);
    for (std::size_t s = 0; s < n; ++s)
      if (unknown[s] != std::numeric_limits<std::size_t>::max()) value[s] = x[unknown[s]][0];
  }
  for (std::size_t s = 0; s < n; ++s)
    if (mdp.target[s]) value[s] = Scalar(1);
  return value;
}

// Value iteration from V_0 = 1_T (in place, so each sweep uses the freshest
// values), followed by extraction of a policy that realizes the values and
// strict-improvement policy iteration on exact policy evaluations. The
// reported values are those of the returned policy.
inline MdpPolicy solve_max_reach(const SyncMdp<double>& mdp, double epsilon = kDefaultEpsilon) {
  if (!(epsilon > 0)) throw SchemaError("epsilon must be positive");
  const std::size_t n = mdp.states.size();
  std::vector<double> v(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    if (mdp.target[s]) v[s] = 1.0;

  MdpPolicy result;
  for (;;) {
    ++result.iterations;
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      if (mdp.target[s]) continue;
      double best = 0.0;
      for (const auto& a : mdp.actions[s]) best = std::max(best, detail::action_value(a, v));
      change = std::max(change, best - v[s]);
      v[s] = best;
    }
    if (change < epsilon) break;
  }

  // Optimal action sets up to a tolerance, then an attractor walk from the
  // target: a state takes the smallest optimal action that moves it closer.
  const double tol = std::max(1e3 * epsilon, 1e-9);
  std::vector<std::vector<std::size_t>> optimal(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t i = 0; i < mdp.actions[s].size(); ++i)
      if (detail::action_value(mdp.actions[s][i], v) >= v[s] - tol) optimal[s].push_back(i);

  std::vector<std::size_t> policy(n, std::numeric_limits<std::size_t>::max());
  std::vector<bool> assigned(n, false);
  for (std::size_t s = 0; s < n; ++s)
    if (mdp.target[s]) {
      assigned[s] = true;
      policy[s] = 0;
    }
  for (bool grew = true; grew;) {
    grew = false;
    std::vector<bool> next = assigned;
    for (std::size_t s = 0; s < n; ++s) {
      if (assigned[s]) continue;
      for (auto i : optimal[s]) {
        const auto& a = mdp.actions[s][i];
        if (std::any_of(a.dist.begin(), a.dist.end(), [&](const auto& e) { return e.second > 0 && assigned[e.first]; })) {
          policy[s] = i;
          next[s] = true;
          grew = true;
          break;
        }
      }
    }
    assigned = std::move(next);
  }
  for (std::size_t s = 0; s < n; ++s)
    if (!assigned[s]) policy[s] = optimal[s].empty() ? 0 : optimal[s].front();

  // Policy iteration with strict improvements; terminates in a policy whose
  // value is a pre-fixpoint of the Bellman operator, hence optimal.
  std::vector<double> value = evaluate_policy(mdp, policy);
  for (std::size_t round = 0; round < 10 * n + 10; ++round) {
    bool changed = false;
    for (std::size_t s = 0; s < n; ++s) {
      if (mdp.target[s]) continue;
      for (std::size_t i = 0; i < mdp.actions[s].size(); ++i) {
        if (detail::action_value(mdp.actions[s][i], value) > value[s] + 1e-12) {
          policy[s] = i;
          changed = true;
          ++result.improvements;
          break;
        }
      }
    }
    if (!changed) break;
    value = evaluate_policy(mdp, policy);
  }
  result.choice = std::move(policy);
  result.value = std::move(value);
  return result;
}

struct ExactCheck {
  std::vector<Rational> value;  // exact value of the policy per S' state
  bool optimal = false;         // Bellman check on the exact values
  std::string witness;          // first violating (state, action) when not optimal
};

// Exact value of the policy and the check F(v) ≤ v of the Bellman operator;
// a policy whose value passes is optimal since the optimum is the least
// pre-fixpoint of F.
inline ExactCheck verify_exact(const SyncMdp<Rational>& mdp, const std::vector<std::size_t>& policy) {
  ExactCheck out;
  out.value = evaluate_policy(mdp, policy);
  out.optimal = true;
  for (std::size_t s = 0; s < mdp.states.size() && out.optimal; ++s) {
    if (mdp.target[s]) continue;
    for (std::size_t i = 0; i < mdp.actions[s].size(); ++i) {
      if (detail::action_value(mdp.actions[s][i], out.value) > out.value[s]) {
        out.optimal = false;
        out.witness = "state " + std::to_string(s) + " action " + std::to_string(i);
        break;
      }
    }
  }
  return out;
}

inline constexpr std::uint64_t kDefaultOracleCap = 1'000'000;

struct OracleResult {
  double value = 0.0;                 // best value at the initial state
  std::vector<std::size_t> policy;    // a maximizing policy
  std::uint64_t policies = 0;         // number of policies evaluated
};

// Brute force: every pure memoryless policy is evaluated by a linear solve.
inline OracleResult oracle_policy_enum(const SyncMdp<double>& mdp, std::uint64_t cap = kDefaultOracleCap) {
  const std::size_t n = mdp.states.size();
  std::uint64_t total = 1;
  for (std::size_t s = 0; s < n; ++s) {
    std::uint64_t k = mdp.actions[s].size();
    if (total > cap / k) throw OracleTooLarge("more than " + std::to_string(cap) + " pure memoryless policies");
    total *= k;
  }
  OracleResult best;
  best.value = -1.0;
  std::vector<std::size_t> policy(n, 0);
  for (std::uint64_t count = 0; count < total; ++count) {
    auto value = evaluate_policy(mdp, policy);
    if (value[0] > best.value) {
      best.value = value[0];
      best.policy = policy;
    }
    for (std::size_t s = 0; s < n; ++s) {
      if (++policy[s] < mdp.actions[s].size()) break;
      policy[s] = 0;
    }
  }
  best.policies = total;
  return best;
}

enum class Verdict { Yes, No, Boundary };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Yes:
      return "YES";
    case Verdict::No:
      return "NO";
    case Verdict::Boundary:
      return "BOUNDARY";
  }
  return "";
}

// Three-way comparison with an ε band around p. At p = 0 and p = 1 one side
// of the band cannot occur (values lie in [0, 1]), so the band is one-sided.
inline Verdict decide(double value, const Rational& p, double epsilon) {
  if (p == 0) return Verdict::Yes;
  if (p == 1) return value >= 1.0 - epsilon ? Verdict::Yes : Verdict::No;
  double threshold = to_double(p);
  if (value >= threshold + epsilon) return Verdict::Yes;
  if (value <= threshold - epsilon) return Verdict::No;
  return Verdict::Boundary;
}

struct ValueDecision {
  Verdict verdict;
  double value;
  MdpPolicy policy;
  SyncMdp<double> mdp;
};

inline ValueDecision decide_value_problem(const DistributedImc& model, const Rational& p,
                                          double epsilon = kDefaultEpsilon, const BuildOptions& options = {}) {
  if (p < 0 || p > 1) throw SchemaError("p must lie in [0, 1]");
  auto mdp = build_mdp<double>(model, options);
  auto policy = solve_max_reach(mdp, epsilon);
  double value = policy.value[0];
  return {decide(value, p, epsilon), value, std::move(policy), std::move(mdp)};
}

}  // namespace dimc
