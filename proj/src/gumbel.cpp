#include "cfcheck/gumbel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfcheck {

namespace {
constexpr long kRejectionCap = 1000000;
}

double sample_standard_gumbel(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double eps = std::numeric_limits<double>::epsilon();
  const double u = std::clamp(unif(rng), eps, 1.0 - eps);
  return -std::log(-std::log(u));
}

std::vector<double> sample_prior_gumbels(std::size_t k, Rng& rng) {
  std::vector<double> g(k);
  for (double& x : g) x = sample_standard_gumbel(rng);
  return g;
}

StateId gumbel_argmax(const std::vector<double>& probs,
                      const std::vector<double>& g) {
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (probs[s] <= 0.0) continue;
    const double value = std::log(probs[s]) + g[s];
    if (value > best_value) {
      best_value = value;
      best = static_cast<int>(s);
    }
  }
  if (best < 0) throw Error("gumbel_argmax: distribution has no support");
  return best;
}

namespace {

StateId point_mass_state(const std::vector<double>& init) {
  for (std::size_t s = 0; s < init.size(); ++s)
    if (init[s] > 0.0) {
      if (init[s] < 1.0 - 1e-9)
        throw Error("context-driven sampling needs an explicit start state "
                    "or a point-mass init");
      return static_cast<int>(s);
    }
  throw Error("init distribution has no support");
}

}  // namespace

Path sample_scm_path(const ScmConfig& cfg, const GumbelContext& context,
                     std::optional<StateId> start) {
  if (context.steps() < cfg.horizon - 1)
    throw Error("context shorter than the unrolling horizon");
  const Mdp& mdp = *cfg.mdp;
  StateId s = start ? *start : point_mass_state(mdp.init);
  Path path;
  for (int k = 0; k < cfg.horizon; ++k) {
    const ActionId a = cfg.policy(s);
    path.push_back({s, a});
    if (k + 1 == cfg.horizon) break;
    const TransRow& row = mdp.row(s, a);
    if (!row.defined)
      throw Error("undefined transition row at (" + mdp.states[s] + "," +
                  mdp.actions[a] + ")");
    s = gumbel_argmax(row.p, context.g[k]);
  }
  return path;
}

Path sample_scm_path(const ScmConfig& cfg, Rng& rng,
                     std::optional<StateId> start) {
  GumbelContext context;
  context.g.reserve(cfg.horizon > 0 ? cfg.horizon - 1 : 0);
  for (int k = 0; k + 1 < cfg.horizon; ++k)
    context.g.push_back(sample_prior_gumbels(cfg.mdp->states.size(), rng));
  return sample_scm_path(cfg, context, start);
}

std::vector<double> abduct_step_rejection(const Mdp& mdp, StateId s,
                                          ActionId a, StateId s_next,
                                          Rng& rng) {
  const TransRow& row = mdp.row(s, a);
  if (!row.defined || row.p[s_next] <= 0.0)
    throw TraceError("observed transition has zero probability", 0);
  for (long attempt = 0; attempt < kRejectionCap; ++attempt) {
    std::vector<double> g = sample_prior_gumbels(row.p.size(), rng);
    if (gumbel_argmax(row.p, g) == s_next) return g;
  }
  throw Error("rejection sampling cap reached");
}

std::vector<double> abduct_step_exact(const Mdp& mdp, StateId s, ActionId a,
                                      StateId s_next, Rng& rng) {
  const TransRow& row = mdp.row(s, a);
  if (!row.defined || row.p[s_next] <= 0.0)
    throw TraceError("observed transition has zero probability", 0);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> g(row.p.size());
  // Top perturbed value: Gumbel at the log normalizer, which is 0 here.
  const double m = sample_standard_gumbel(rng);
  for (std::size_t j = 0; j < row.p.size(); ++j) {
    if (row.p[j] <= 0.0) {
      g[j] = sample_standard_gumbel(rng);  // off support: prior
    } else if (static_cast<StateId>(j) == s_next) {
      g[j] = m - std::log(row.p[j]);
    } else {
      // Gumbel(log p_j) truncated above at m, shifted back to noise space.
      const double lp = std::log(row.p[j]);
      const double v = lp - std::log(std::exp(lp - m) + expo(rng));
      g[j] = v - lp;
    }
  }
  return g;
}

std::vector<double> abduct_step(const Mdp& mdp, StateId s, ActionId a,
                                StateId s_next, AbductionMethod method,
                                Rng& rng) {
  return method == AbductionMethod::Rejection
             ? abduct_step_rejection(mdp, s, a, s_next, rng)
             : abduct_step_exact(mdp, s, a, s_next, rng);
}

void check_consistency(const ScmConfig& cfg, const Path& tau) {
  const Mdp& mdp = *cfg.mdp;
  for (int i = 1; i <= tau.length(); ++i) {
    const Step& step = tau.at(i);
    if (step.state < 0 || step.state >= mdp.num_states() ||
        step.action < 0 || step.action >= mdp.num_actions())
      throw TraceError("trace step outside the model at position " +
                           std::to_string(i), i);
    if (cfg.policy(step.state) != step.action)
      throw TraceError("action disagrees with the policy at position " +
                           std::to_string(i), i);
    if (i < tau.length()) {
      const TransRow& row = mdp.row(step.state, step.action);
      if (!row.defined || row.p[tau.state_at(i + 1)] <= 0.0)
        throw TraceError("zero-probability transition at position " +
                             std::to_string(i), i);
    }
  }
}

std::vector<GumbelContext> abduct_path(const ScmConfig& cfg, const Path& tau,
                                       int n, AbductionMethod method,
                                       Rng& rng) {
  if (n < 1) throw Error("abduct_path: n must be positive");
  check_consistency(cfg, tau);
  const Mdp& mdp = *cfg.mdp;
  std::vector<GumbelContext> contexts(n);
  for (GumbelContext& ctx : contexts) {
    ctx.g.reserve(tau.length() - 1);
    for (int i = 1; i < tau.length(); ++i)
      ctx.g.push_back(abduct_step(mdp, tau.state_at(i), tau.action_at(i),
                                  tau.state_at(i + 1), method, rng));
  }
  return contexts;
}

CounterfactualModel build_counterfactual_model(const ScmConfig& cfg,
                                               const Path& tau, int offset,
                                               Intervention intervention,
                                               int horizon) {
  if (tau.empty()) throw TraceError("empty observed path", 0);
  if (horizon < 1) throw Error("counterfactual model: horizon must be positive");
  check_consistency(cfg, tau);
  const int n = tau.length();
  const int t = std::clamp(offset, -n + 1, n - 1);

  CounterfactualModel cf;
  cf.base = cfg;
  cf.observed = tau;
  cf.offset = t;
  cf.intervention = std::move(intervention);
  cf.horizon = horizon;
  // tau[-t]: t-th state before the end for t >= 0, |t|-th from the start
  // for t < 0.
  cf.start_pos = t >= 0 ? n - t : -t;
  cf.start = tau.state_at(cf.start_pos);
  cf.posterior_steps = std::min(n - cf.start_pos, horizon - 1);
  return cf;
}

GumbelContext draw_posterior_context(const CounterfactualModel& cf,
                                     AbductionMethod method, Rng& rng) {
  const Mdp& mdp = *cf.base.mdp;
  GumbelContext ctx;
  ctx.g.reserve(cf.posterior_steps);
  for (int k = 0; k < cf.posterior_steps; ++k) {
    const int pos = cf.start_pos + k;  // observed transition pos -> pos+1
    ctx.g.push_back(abduct_step(mdp, cf.observed.state_at(pos),
                                cf.observed.action_at(pos),
                                cf.observed.state_at(pos + 1), method, rng));
  }
  return ctx;
}

GumbelContext extend_with_prior(const CounterfactualModel& cf,
                                GumbelContext context, Rng& rng) {
  const std::size_t k = cf.base.mdp->states.size();
  while (context.steps() < cf.horizon - 1)
    context.g.push_back(sample_prior_gumbels(k, rng));
  return context;
}

Path rollout_counterfactual(const CounterfactualModel& cf,
                            const GumbelContext& context) {
  ScmConfig rollout_cfg{cf.base.mdp, cf.rollout_policy(), cf.horizon};
  return sample_scm_path(rollout_cfg, context, cf.start);
}

Path sample_counterfactual_path(const CounterfactualModel& cf,
                                AbductionMethod method, Rng& rng) {
  GumbelContext ctx = draw_posterior_context(cf, method, rng);
  ctx = extend_with_prior(cf, std::move(ctx), rng);
  return rollout_counterfactual(cf, ctx);
}

}  // namespace cfcheck
