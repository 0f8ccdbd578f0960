#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "cfcheck/gumbel.hpp"
#include "oracles.hpp"

using namespace cfcheck;

namespace {

// Two-action, k-state chain: action 0 follows `p`, action 1 follows `q`.
// Policy "obs" plays action 0 everywhere, "alt" plays action 1.
Mdp two_row_mdp(const std::vector<double>& p, const std::vector<double>& q) {
  Mdp mdp;
  const int k = static_cast<int>(p.size());
  for (int s = 0; s < k; ++s) mdp.states.push_back("s" + std::to_string(s));
  mdp.actions = {"obs", "alt"};
  mdp.resize_tables();
  for (int s = 0; s < k; ++s) {
    mdp.trans[s][0] = {true, p};
    mdp.trans[s][1] = {true, q};
  }
  mdp.init[0] = 1.0;
  return mdp;
}

double total_variation(const std::map<std::vector<int>, long>& a,
                       const std::map<std::vector<int>, long>& b, long n) {
  std::map<std::vector<int>, double> diff;
  for (const auto& [key, count] : a) diff[key] += count;
  for (const auto& [key, count] : b) diff[key] -= count;
  double tv = 0.0;
  for (const auto& [key, d] : diff) tv += std::abs(d);
  return tv / (2.0 * static_cast<double>(n));
}

std::vector<int> states_of(const Path& tau) {
  std::vector<int> out;
  for (const Step& s : tau.steps()) out.push_back(s.state);
  return out;
}

}  // namespace

TEST_CASE("gumbel argmax reproduces the categorical distribution") {
  const std::vector<double> p{0.5, 0.2, 0.0, 0.3};
  Rng rng = make_rng(11, 0);
  const long n = 100000;
  std::vector<long> counts(p.size(), 0);
  for (long i = 0; i < n; ++i)
    ++counts[gumbel_argmax(p, sample_prior_gumbels(p.size(), rng))];
  CHECK(counts[2] == 0);  // zero-probability outcome never wins
  CHECK(oracles::chi_square_fits(counts, p, 0.001));
}

TEST_CASE("prior SCM paths match the categorical simulator in distribution") {
  Rng mdp_rng = make_rng(5, 0);
  const Mdp mdp = oracles::random_mdp(3, 2, mdp_rng);
  Policy pi;
  pi.table = {0, 1, 0};
  const ScmConfig scm{std::make_shared<Mdp>(mdp), pi, 3};
  const long n = 100000;
  Rng rng_scm = make_rng(21, 0);
  Rng rng_sim = make_rng(22, 0);
  std::map<std::vector<int>, long> scm_counts, sim_counts;
  for (long i = 0; i < n; ++i) {
    ++scm_counts[states_of(sample_scm_path(scm, rng_scm, 0))];
    ++sim_counts[states_of(simulate_path(mdp, pi, 0, 3, rng_sim))];
  }
  CHECK(total_variation(scm_counts, sim_counts, n) < 0.02);
}

TEST_CASE("abduction posterior reproduces the observation") {
  const std::vector<double> p{0.3, 0.3, 0.4};
  const Mdp mdp = two_row_mdp(p, p);
  Rng rng = make_rng(33, 0);
  for (AbductionMethod method :
       {AbductionMethod::Rejection, AbductionMethod::Exact}) {
    for (StateId obs = 0; obs < 3; ++obs)
      for (int i = 0; i < 200; ++i)
        CHECK(gumbel_argmax(p, abduct_step(mdp, 0, 0, obs, method, rng)) ==
              obs);
  }
}

TEST_CASE("abduction rejects zero-probability observations") {
  const Mdp mdp = two_row_mdp({1.0, 0.0}, {1.0, 0.0});
  Rng rng = make_rng(1, 0);
  CHECK_THROWS_AS(abduct_step_rejection(mdp, 0, 0, 1, rng), TraceError);
  CHECK_THROWS_AS(abduct_step_exact(mdp, 0, 0, 1, rng), TraceError);
}

TEST_CASE("rejection and exact posteriors agree downstream") {
  // Counterfactual outcome distribution under an alternative row.
  const std::vector<double> p{0.5, 0.3, 0.2};
  const std::vector<double> q{0.1, 0.2, 0.7};
  const Mdp mdp = two_row_mdp(p, q);
  const long n = 20000;
  for (StateId obs = 0; obs < 3; ++obs) {
    Rng rng_r = make_rng(100 + obs, 0);
    Rng rng_e = make_rng(200 + obs, 0);
    std::map<std::vector<int>, long> rej, exa;
    for (long i = 0; i < n; ++i) {
      ++rej[{gumbel_argmax(
          q, abduct_step(mdp, 0, 0, obs, AbductionMethod::Rejection, rng_r))}];
      ++exa[{gumbel_argmax(
          q, abduct_step(mdp, 0, 0, obs, AbductionMethod::Exact, rng_e))}];
    }
    CHECK(total_variation(rej, exa, n) < 0.02);
  }
}

TEST_CASE("counterfactual stability: dominant ratio keeps the outcome") {
  // q0/p0 = 1.8 >= q1/p1 = 0.2: the counterfactual can never flip away
  // from the observed outcome 0.
  const Mdp mdp = two_row_mdp({0.5, 0.5}, {0.9, 0.1});
  Rng rng = make_rng(77, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto g = abduct_step_exact(mdp, 0, 0, 0, rng);
    CHECK(gumbel_argmax(mdp.row(0, 1).p, g) == 0);
  }
}

TEST_CASE("consistency check pinpoints the offending step") {
  const Mdp mdp = two_row_mdp({0.5, 0.5}, {1.0, 0.0});
  Policy obs;
  obs.table = {0, 0};
  const ScmConfig scm{std::make_shared<Mdp>(mdp), obs, 3};

  const Path wrong_action({{0, 0}, {1, 1}, {0, 0}});
  try {
    check_consistency(scm, wrong_action);
    FAIL("expected TraceError");
  } catch (const TraceError& e) {
    CHECK(e.position == 2);
  }

  Mdp gapped = mdp;
  gapped.trans[1][0] = {true, {1.0, 0.0}};
  const ScmConfig scm2{std::make_shared<Mdp>(gapped), obs, 3};
  const Path impossible({{0, 0}, {1, 0}, {1, 0}});
  try {
    check_consistency(scm2, impossible);
    FAIL("expected TraceError");
  } catch (const TraceError& e) {
    CHECK(e.position == 2);
  }
}

TEST_CASE("counterfactual model bookkeeping: offsets and clipping") {
  const GridConfig cfg;
  auto mdp = std::make_shared<Mdp>(build_gridworld(cfg));
  const Policy pi = gridworld_risky_policy(cfg);
  const ScmConfig scm{mdp, pi, 11};
  Rng rng = make_rng(3, 0);
  const Path tau = simulate_path(*mdp, pi, std::nullopt, 5, rng);

  // t = 0: start at the last state, nothing abducted.
  auto cf = build_counterfactual_model(scm, tau, 0, {}, 11);
  CHECK(cf.start_pos == 5);
  CHECK(cf.start == tau.state_at(0));
  CHECK(cf.posterior_steps == 0);

  // t = 1: one step in the past, one posterior transition.
  cf = build_counterfactual_model(scm, tau, 1, {}, 11);
  CHECK(cf.start_pos == 4);
  CHECK(cf.posterior_steps == 1);

  // t = -1: the beginning of the path, all transitions posterior.
  cf = build_counterfactual_model(scm, tau, -1, {}, 11);
  CHECK(cf.start_pos == 1);
  CHECK(cf.start == tau.state_at(1));
  CHECK(cf.posterior_steps == 4);

  // Out-of-range offsets clip into (-|tau|, |tau|).
  CHECK(build_counterfactual_model(scm, tau, 99, {}, 11).start_pos == 1);
  CHECK(build_counterfactual_model(scm, tau, -99, {}, 11).start_pos == 4);
}

TEST_CASE("null intervention in the past replays the observation") {
  const GridConfig cfg;
  auto mdp = std::make_shared<Mdp>(build_gridworld(cfg));
  const Policy pi = gridworld_risky_policy(cfg);
  const ScmConfig scm{mdp, pi, 8};
  Rng rng = make_rng(9, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const Path tau = simulate_path(*mdp, pi, std::nullopt, 6, rng);
    const auto cf = build_counterfactual_model(scm, tau, -1, {}, 8);
    const Path rollout = sample_counterfactual_path(cf, AbductionMethod::Exact,
                                                    rng);
    REQUIRE(rollout.length() == 8);
    for (int i = 1; i <= tau.length(); ++i) CHECK(rollout.at(i) == tau.at(i));
  }
}

TEST_CASE("nominal counterfactual at t=0 matches the prior SCM") {
  // With nothing abducted and no intervention, rollouts from tau[0] follow
  // the nominal SCM distribution.
  Rng mdp_rng = make_rng(6, 0);
  const Mdp raw = oracles::random_mdp(3, 2, mdp_rng);
  auto mdp = std::make_shared<Mdp>(raw);
  Policy pi;
  pi.table = {1, 0, 1};
  const ScmConfig scm{mdp, pi, 3};
  const Path tau({{0, pi(0)}});
  const auto cf = build_counterfactual_model(scm, tau, 0, {}, 3);
  const long n = 50000;
  Rng rng_cf = make_rng(41, 0);
  Rng rng_prior = make_rng(42, 0);
  std::map<std::vector<int>, long> cf_counts, prior_counts;
  for (long i = 0; i < n; ++i) {
    ++cf_counts[states_of(
        sample_counterfactual_path(cf, AbductionMethod::Exact, rng_cf))];
    ++prior_counts[states_of(sample_scm_path(scm, rng_prior, 0))];
  }
  CHECK(total_variation(cf_counts, prior_counts, n) < 0.02);
}

TEST_CASE("context-driven unrolling is deterministic") {
  const GridConfig cfg;
  auto mdp = std::make_shared<Mdp>(build_gridworld(cfg));
  const ScmConfig scm{mdp, gridworld_safe_policy(cfg), 6};
  Rng rng = make_rng(13, 0);
  GumbelContext ctx;
  for (int k = 0; k < 5; ++k)
    ctx.g.push_back(sample_prior_gumbels(mdp->states.size(), rng));
  const Path a = sample_scm_path(scm, ctx, std::nullopt);
  const Path b = sample_scm_path(scm, ctx, std::nullopt);
  CHECK(a == b);
  GumbelContext tiny;
  tiny.g.resize(2);
  CHECK_THROWS_AS(sample_scm_path(scm, tiny, std::nullopt), Error);
}

TEST_CASE("abduct_path produces one noise vector per transition") {
  const GridConfig cfg;
  auto mdp = std::make_shared<Mdp>(build_gridworld(cfg));
  const Policy pi = gridworld_risky_policy(cfg);
  const ScmConfig scm{mdp, pi, 10};
  Rng rng = make_rng(2, 0);
  const Path tau = simulate_path(*mdp, pi, std::nullopt, 10, rng);
  const auto contexts = abduct_path(scm, tau, 20, AbductionMethod::Exact, rng);
  REQUIRE(contexts.size() == 20);
  for (const GumbelContext& ctx : contexts) {
    REQUIRE(ctx.steps() == 9);
    for (int k = 0; k < 9; ++k) {
      REQUIRE(ctx.g[k].size() == 16);
      // Every context must replay the observed transition.
      CHECK(gumbel_argmax(mdp->row(tau.state_at(k + 1), tau.action_at(k + 1)).p,
                          ctx.g[k]) == tau.state_at(k + 2));
    }
  }
}
