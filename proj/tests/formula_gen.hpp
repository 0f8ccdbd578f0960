// Random formula generator for round-trip tests. Emits only shapes the
// printer can reproduce verbatim after a parse (e.g. embedded state
// formulas inside path contexts stay primary).
#pragma once

#include <random>
#include <string>
#include <vector>

#include "cfcheck/logic.hpp"

namespace formula_gen {

struct Gen {
  cfcheck::Rng rng;
  explicit Gen(std::uint64_t seed) : rng(cfcheck::make_rng(seed, 0)) {}

  int pick(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(rng);
  }
  double prob() {
    return std::uniform_int_distribution<int>(0, 100)(rng) / 100.0;
  }
  std::string atom_name() {
    static const char* names[] = {"a", "b", "unsafe", "target", "ok"};
    return names[pick(5)];
  }
  std::string policy_name() {
    static const char* names[] = {"opt", "random", "p1"};
    return names[pick(3)];
  }
  cfcheck::Cmp cmp() {
    static const cfcheck::Cmp all[] = {cfcheck::Cmp::Lt, cfcheck::Cmp::Le,
                                       cfcheck::Cmp::Gt, cfcheck::Cmp::Ge,
                                       cfcheck::Cmp::Query};
    return all[pick(5)];
  }
  std::pair<int, int> interval() {
    const int a = pick(6);
    return {a, a + pick(5)};
  }
  cfcheck::InterventionSpec ispec(bool allow_multi) {
    cfcheck::InterventionSpec spec;
    const int n = pick(allow_multi ? 3 : 2);  // 0 = empty
    for (int i = 0; i < n; ++i) spec.policy_names.push_back(policy_name());
    return spec;
  }

  cfcheck::StatePtr prob_or_reward(int depth) {
    if (pick(2) == 0) {
      const cfcheck::Cmp c = cmp();
      return cfcheck::mk_prob(c, c == cfcheck::Cmp::Query ? 0.0 : prob(),
                              path(depth));
    }
    const cfcheck::Cmp c = cmp();
    auto [lo, hi] = interval();
    return cfcheck::mk_reward(c, c == cfcheck::Cmp::Query ? 0.0 : prob(), lo,
                              hi);
  }

  cfcheck::StatePtr state(int depth) {
    if (depth <= 0) {
      return pick(2) ? cfcheck::mk_atom(atom_name()) : cfcheck::mk_true();
    }
    switch (pick(10)) {
      case 0: return cfcheck::mk_true();
      case 1: return cfcheck::mk_atom(atom_name());
      case 2: return cfcheck::mk_not(state(depth - 1));
      case 3: return cfcheck::mk_and(state(depth - 1), state(depth - 1));
      case 4: return cfcheck::mk_or(state(depth - 1), state(depth - 1));
      case 5: return cfcheck::mk_implies(state(depth - 1), state(depth - 1));
      case 6:
      case 7: return prob_or_reward(depth - 1);
      case 8: {
        const int t = pick(7) - 3;
        return cfcheck::mk_cf(ispec(true), t, prob_or_reward(depth - 1));
      }
      default: {
        const int t = pick(7) - 3;
        // The printed Delta separator is ambiguous for a multi-replacement
        // second list; the parser resolves it as a single trailing group.
        cfcheck::InterventionSpec i0;
        if (pick(2)) i0.policy_names.push_back(policy_name());
        return cfcheck::mk_delta(ispec(true), i0, t,
                                 prob_or_reward(depth - 1));
      }
    }
  }

  // Path-level formulas embed only primary state nodes so that printing the
  // embed without parentheses re-parses to the same tree.
  cfcheck::PathPtr embed(int depth) {
    switch (pick(4)) {
      case 0: return cfcheck::mk_embed(cfcheck::mk_true());
      case 1:
      case 2: return cfcheck::mk_embed(cfcheck::mk_atom(atom_name()));
      default: return cfcheck::mk_embed(prob_or_reward(depth - 1));
    }
  }

  cfcheck::PathPtr path(int depth) {
    if (depth <= 0) return cfcheck::mk_embed(cfcheck::mk_atom(atom_name()));
    switch (pick(9)) {
      case 0: return embed(depth);
      case 1: return cfcheck::mk_pnot(path(depth - 1));
      case 2: return cfcheck::mk_pand(path(depth - 1), path(depth - 1));
      case 3: return cfcheck::mk_por(path(depth - 1), path(depth - 1));
      case 4: return cfcheck::mk_pimplies(path(depth - 1), path(depth - 1));
      case 5: {
        auto [lo, hi] = interval();
        return cfcheck::mk_until(path(depth - 1), lo, hi, path(depth - 1));
      }
      case 6: {
        auto [lo, hi] = interval();
        return cfcheck::mk_finally(lo, hi, path(depth - 1));
      }
      case 7: {
        auto [lo, hi] = interval();
        return cfcheck::mk_globally(lo, hi, path(depth - 1));
      }
      default: return cfcheck::mk_next(path(depth - 1));
    }
  }
};

}  // namespace formula_gen
