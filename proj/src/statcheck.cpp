#include "cfcheck/statcheck.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace cfcheck {

std::string ci_method_name(CiMethod m) {
  switch (m) {
    case CiMethod::Wald: return "wald";
    case CiMethod::ClopperPearson: return "clopper-pearson";
    case CiMethod::TInterval: return "t";
    case CiMethod::PairedT: return "paired-t";
    case CiMethod::TwoSample: return "two-sample";
  }
  return "?";
}

Intervention resolve_intervention(const InterventionSpec& spec,
                                  const PolicyRegistry& registry) {
  Intervention out;
  out.replacements.reserve(spec.policy_names.size());
  for (const std::string& name : spec.policy_names) {
    auto it = registry.find(name);
    if (it == registry.end()) throw Error("unknown policy '" + name + "'");
    out.replacements.push_back(it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Intervals

namespace {
double normal_quantile(double q) {
  return boost::math::quantile(boost::math::normal_distribution<>(0.0, 1.0), q);
}
double t_quantile(double q, long dof) {
  return boost::math::quantile(
      boost::math::students_t_distribution<>(static_cast<double>(dof)), q);
}
}  // namespace

Estimate binomial_estimate(long successes, long n, double alpha, bool wald) {
  if (n <= 0) throw Error("binomial estimate needs n > 0");
  Estimate est;
  est.n = n;
  est.mean = static_cast<double>(successes) / static_cast<double>(n);
  if (wald) {
    est.method = CiMethod::Wald;
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double half =
        z * std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(n));
    est.ci_low = std::max(0.0, est.mean - half);
    est.ci_high = std::min(1.0, est.mean + half);
  } else {
    est.method = CiMethod::ClopperPearson;
    const double s = static_cast<double>(successes);
    const double nn = static_cast<double>(n);
    est.ci_low =
        successes == 0
            ? 0.0
            : boost::math::quantile(
                  boost::math::beta_distribution<>(s, nn - s + 1.0),
                  alpha / 2.0);
    est.ci_high =
        successes == n
            ? 1.0
            : boost::math::quantile(
                  boost::math::beta_distribution<>(s + 1.0, nn - s),
                  1.0 - alpha / 2.0);
  }
  return est;
}

Estimate mean_estimate(double sum, double sumsq, long n, double alpha,
                       CiMethod method) {
  if (n <= 0) throw Error("mean estimate needs n > 0");
  Estimate est;
  est.n = n;
  est.method = method;
  est.mean = sum / static_cast<double>(n);
  if (n < 2) {
    est.ci_low = est.ci_high = est.mean;
    return est;
  }
  const double var = std::max(
      0.0, (sumsq - static_cast<double>(n) * est.mean * est.mean) /
               static_cast<double>(n - 1));
  if (var == 0.0) {
    // Degenerate sample: every draw equal, the interval collapses.
    est.ci_low = est.ci_high = est.mean;
    return est;
  }
  const double half = t_quantile(1.0 - alpha / 2.0, n - 1) *
                      std::sqrt(var / static_cast<double>(n));
  est.ci_low = est.mean - half;
  est.ci_high = est.mean + half;
  return est;
}

Verdict check_threshold(const Estimate& est, Cmp cmp, double threshold) {
  Verdict v;
  v.estimate = est;
  if (cmp == Cmp::Query) {
    v.quantitative = true;
    return v;
  }
  switch (cmp) {
    case Cmp::Lt:
      if (est.ci_high < threshold) v.truth = Truth::True;
      else if (est.ci_low >= threshold) v.truth = Truth::False;
      break;
    case Cmp::Le:
      if (est.ci_high <= threshold) v.truth = Truth::True;
      else if (est.ci_low > threshold) v.truth = Truth::False;
      break;
    case Cmp::Gt:
      if (est.ci_low > threshold) v.truth = Truth::True;
      else if (est.ci_high <= threshold) v.truth = Truth::False;
      break;
    case Cmp::Ge:
      if (est.ci_low >= threshold) v.truth = Truth::True;
      else if (est.ci_high < threshold) v.truth = Truth::False;
      break;
    case Cmp::Query:
      break;
  }
  return v;
}

long chernoff_sample_size(double theta, double gamma) {
  if (theta <= 0.0 || gamma <= 0.0 || gamma >= 1.0)
    throw Error("chernoff bound needs theta > 0 and gamma in (0,1)");
  return static_cast<long>(
      std::ceil(std::log(2.0 / gamma) / (2.0 * theta * theta)));
}

// ---------------------------------------------------------------------------
// SPRT

bool sprt_decide(const std::function<bool(Rng&)>& sampler, double p,
                 double delta, double alpha, double beta, long cap,
                 std::uint64_t seed) {
  const double p0 = std::min(1.0, p + delta);  // H0: prob >= p0
  const double p1 = std::max(0.0, p - delta);  // H1: prob <= p1
  if (p1 <= 0.0 || p0 >= 1.0 || p1 >= p0)
    throw Error("sprt needs 0 < p-delta < p+delta < 1");
  const double accept_h1 = std::log((1.0 - beta) / alpha);
  const double accept_h0 = std::log(beta / (1.0 - alpha));
  const double l_succ = std::log(p1 / p0);
  const double l_fail = std::log((1.0 - p1) / (1.0 - p0));
  Rng rng = make_rng(seed, 0);
  double llr = 0.0;
  for (long i = 0; i < cap; ++i) {
    llr += sampler(rng) ? l_succ : l_fail;
    if (llr >= accept_h1) return false;
    if (llr <= accept_h0) return true;
  }
  throw Error("sprt undecided after " + std::to_string(cap) + " samples");
}

// ---------------------------------------------------------------------------
// Monte-Carlo cores

namespace {

bool collapse_verdict(const Verdict& v, Cmp cmp, double threshold) {
  if (v.truth == Truth::True) return true;
  if (v.truth == Truth::False) return false;
  switch (cmp) {
    case Cmp::Lt: return v.estimate.mean < threshold;
    case Cmp::Le: return v.estimate.mean <= threshold;
    case Cmp::Gt: return v.estimate.mean > threshold;
    case Cmp::Ge: return v.estimate.mean >= threshold;
    case Cmp::Query:
      throw Error("quantitative query nested inside a path formula");
  }
  return false;
}

/// Boolean decision for a state formula in a nested (path) context; undecided
/// probabilistic nodes collapse to their point estimate.
bool decide_state(const ScmConfig& scm, const Path& prefix,
                  const StateFormula& f, const CheckParams& params,
                  const PolicyRegistry& registry) {
  using K = StateFormula::Kind;
  switch (f.kind) {
    case K::True:
    case K::Atom:
    case K::Not:
    case K::And:
    case K::Or:
    case K::Implies: {
      // Boolean structure may still hide probabilistic leaves; recurse here
      // instead of delegating to the propositional evaluator.
      if (f.kind == K::True) return true;
      if (f.kind == K::Atom)
        return scm.mdp->has_label(prefix.state_at(0), f.atom);
      if (f.kind == K::Not)
        return !decide_state(scm, prefix, *f.lhs, params, registry);
      const bool l = decide_state(scm, prefix, *f.lhs, params, registry);
      if (f.kind == K::And)
        return l && decide_state(scm, prefix, *f.rhs, params, registry);
      if (f.kind == K::Or)
        return l || decide_state(scm, prefix, *f.rhs, params, registry);
      return !l || decide_state(scm, prefix, *f.rhs, params, registry);
    }
    default: {
      auto node = std::make_shared<StateFormula>(f);
      const Cmp cmp = (f.kind == K::Cf || f.kind == K::Delta) ? f.inner->cmp
                                                              : f.cmp;
      const double thr = (f.kind == K::Cf || f.kind == K::Delta)
                             ? f.inner->threshold
                             : f.threshold;
      Verdict v = check_state_formula(scm, prefix, node, params, registry);
      return collapse_verdict(v, cmp, thr);
    }
  }
}

StateOracle make_oracle(const ScmConfig& scm, const CheckParams& params,
                        const PolicyRegistry& registry) {
  // Nested estimates run on a derived stream so they never consume draws
  // from the outer Monte-Carlo loop.
  CheckParams nested = params;
  nested.seed = mix_seed(params.seed, 0x6e657374u);
  return [&scm, nested, &registry](const Path& prefix,
                                   const StateFormula& f) {
    return decide_state(scm, prefix, f, nested, registry);
  };
}

// Reward accumulated over offsets [lo, hi] from the evaluation point
// (position 1), i.e. positions 1+lo .. 1+hi of the rollout.
double reward_sum(const Mdp& mdp, const Path& tau, int lo, int hi) {
  double sum = 0.0;
  for (int t = lo; t <= hi; ++t) {
    const Step& step = tau.at(1 + t);
    sum += mdp.reward[step.state][step.action];
  }
  return sum;
}

long rollouts_per_context(long n, int m) {
  return (n + m - 1) / static_cast<long>(m);
}

}  // namespace

Estimate eval_cf_prob(const ScmConfig& scm, const Path& tau,
                      const Intervention& intervention, int offset,
                      const PathPtr& phi, const CheckParams& params,
                      const PolicyRegistry& registry) {
  if (scm.horizon < formula_horizon(phi) + 1)
    throw HorizonError("scm horizon too short for the path formula");
  const CounterfactualModel cf =
      build_counterfactual_model(scm, tau, offset, intervention, scm.horizon);
  const StateOracle oracle = make_oracle(scm, params, registry);
  const long r = rollouts_per_context(params.n, params.m);
  long successes = 0;
  long total = 0;
  for (int i = 0; i < params.m; ++i) {
    Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(i) + 1);
    const GumbelContext posterior =
        draw_posterior_context(cf, params.method, rng);
    for (long j = 0; j < r; ++j) {
      GumbelContext full = extend_with_prior(cf, posterior, rng);
      const Path rollout = rollout_counterfactual(cf, full);
      successes += eval_path_formula(oracle, rollout, 1, phi) ? 1 : 0;
      ++total;
    }
  }
  return binomial_estimate(successes, total, params.alpha, params.wald);
}

Estimate eval_cf_reward(const ScmConfig& scm, const Path& tau,
                        const Intervention& intervention, int offset, int lo,
                        int hi, const CheckParams& params) {
  if (scm.horizon < hi + 1)
    throw HorizonError("scm horizon too short for the reward interval");
  const CounterfactualModel cf =
      build_counterfactual_model(scm, tau, offset, intervention, scm.horizon);
  const long r = rollouts_per_context(params.n, params.m);
  double sum = 0.0, sumsq = 0.0;
  long total = 0;
  for (int i = 0; i < params.m; ++i) {
    Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(i) + 1);
    const GumbelContext posterior =
        draw_posterior_context(cf, params.method, rng);
    for (long j = 0; j < r; ++j) {
      GumbelContext full = extend_with_prior(cf, posterior, rng);
      const Path rollout = rollout_counterfactual(cf, full);
      const double x = reward_sum(*scm.mdp, rollout, lo, hi);
      sum += x;
      sumsq += x * x;
      ++total;
    }
  }
  return mean_estimate(sum, sumsq, total, params.alpha, CiMethod::TInterval);
}

Estimate estimate_path_prob(const ScmConfig& scm, StateId start,
                            const PathPtr& phi, const CheckParams& params,
                            const PolicyRegistry& registry) {
  Path singleton({Step{start, scm.policy(start)}});
  return eval_cf_prob(scm, singleton, Intervention{}, 0, phi, params,
                      registry);
}

Estimate estimate_cumulative_reward(const ScmConfig& scm, StateId start,
                                    int lo, int hi,
                                    const CheckParams& params) {
  Path singleton({Step{start, scm.policy(start)}});
  return eval_cf_reward(scm, singleton, Intervention{}, 0, lo, hi, params);
}

bool sprt_decide(const ScmConfig& scm, StateId start, const PathPtr& phi,
                 double p, double delta, double alpha, double beta,
                 const CheckParams& params, const PolicyRegistry& registry) {
  if (scm.horizon < formula_horizon(phi) + 1)
    throw HorizonError("scm horizon too short for the path formula");
  const StateOracle oracle = make_oracle(scm, params, registry);
  auto sampler = [&](Rng& rng) {
    const Path rollout = sample_scm_path(scm, rng, start);
    return eval_path_formula(oracle, rollout, 1, phi);
  };
  return sprt_decide(sampler, p, delta, alpha, beta, params.sprt_cap,
                     params.seed);
}

Estimate eval_delta(const ScmConfig& scm, const Path& tau,
                    const Intervention& i1, const Intervention& i0,
                    int offset, const DeltaStatistic& stat,
                    const CheckParams& params, const PolicyRegistry& registry,
                    DeltaMode mode) {
  const bool is_prob = std::holds_alternative<PathPtr>(stat);
  if (is_prob) {
    const PathPtr& phi = std::get<PathPtr>(stat);
    if (scm.horizon < formula_horizon(phi) + 1)
      throw HorizonError("scm horizon too short for the path formula");
  } else {
    if (scm.horizon < std::get<std::pair<int, int>>(stat).second + 1)
      throw HorizonError("scm horizon too short for the reward interval");
  }

  if (mode == DeltaMode::Unpaired) {
    CheckParams p1 = params, p0 = params;
    p1.seed = mix_seed(params.seed, 0xd101u);
    p0.seed = mix_seed(params.seed, 0xd100u);
    Estimate e1, e0;
    if (is_prob) {
      const PathPtr& phi = std::get<PathPtr>(stat);
      e1 = eval_cf_prob(scm, tau, i1, offset, phi, p1, registry);
      e0 = eval_cf_prob(scm, tau, i0, offset, phi, p0, registry);
    } else {
      auto [lo, hi] = std::get<std::pair<int, int>>(stat);
      e1 = eval_cf_reward(scm, tau, i1, offset, lo, hi, p1);
      e0 = eval_cf_reward(scm, tau, i0, offset, lo, hi, p0);
    }
    Estimate est;
    est.method = CiMethod::TwoSample;
    est.n = e1.n + e0.n;
    est.mean = e1.mean - e0.mean;
    double se1, se0;
    if (is_prob) {
      se1 = std::sqrt(e1.mean * (1.0 - e1.mean) / static_cast<double>(e1.n));
      se0 = std::sqrt(e0.mean * (1.0 - e0.mean) / static_cast<double>(e0.n));
    } else {
      const double z = normal_quantile(1.0 - params.alpha / 2.0);
      se1 = (e1.ci_high - e1.ci_low) / (2.0 * z);
      se0 = (e0.ci_high - e0.ci_low) / (2.0 * z);
    }
    const double half = normal_quantile(1.0 - params.alpha / 2.0) *
                        std::sqrt(se1 * se1 + se0 * se0);
    est.ci_low = est.mean - half;
    est.ci_high = est.mean + half;
    return est;
  }

  // Paired: one shared noise context per sample feeds both worlds.
  const CounterfactualModel cf1 =
      build_counterfactual_model(scm, tau, offset, i1, scm.horizon);
  const CounterfactualModel cf0 =
      build_counterfactual_model(scm, tau, offset, i0, scm.horizon);
  const StateOracle oracle = make_oracle(scm, params, registry);
  auto statistic = [&](const Path& rollout) -> double {
    if (is_prob)
      return eval_path_formula(oracle, rollout, 1, std::get<PathPtr>(stat))
                 ? 1.0
                 : 0.0;
    auto [lo, hi] = std::get<std::pair<int, int>>(stat);
    return reward_sum(*scm.mdp, rollout, lo, hi);
  };
  const long r = rollouts_per_context(params.n, params.m);
  double sum = 0.0, sumsq = 0.0;
  long total = 0;
  for (int i = 0; i < params.m; ++i) {
    Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(i) + 1);
    const GumbelContext posterior =
        draw_posterior_context(cf1, params.method, rng);
    for (long j = 0; j < r; ++j) {
      GumbelContext full = extend_with_prior(cf1, posterior, rng);
      const double d = statistic(rollout_counterfactual(cf1, full)) -
                       statistic(rollout_counterfactual(cf0, full));
      sum += d;
      sumsq += d * d;
      ++total;
    }
  }
  return mean_estimate(sum, sumsq, total, params.alpha, CiMethod::PairedT);
}

Estimate eval_ate_like(const ScmConfig& scm, const PathPtr& phi,
                       const Intervention& i1, const Intervention& i0,
                       const std::vector<double>& state_dist,
                       const CheckParams& params,
                       const PolicyRegistry& registry) {
  if (static_cast<int>(state_dist.size()) != scm.mdp->num_states())
    throw Error("state distribution size mismatch");
  std::vector<StateId> support;
  for (StateId s = 0; s < scm.mdp->num_states(); ++s)
    if (state_dist[s] > 0.0) support.push_back(s);
  if (support.empty()) throw Error("state distribution has empty support");

  CheckParams sub = params;
  sub.alpha = params.alpha / static_cast<double>(support.size());
  Estimate est;
  est.method = CiMethod::PairedT;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const StateId s = support[k];
    const double w = state_dist[s];
    sub.seed = mix_seed(params.seed, 0xa7e0u + static_cast<std::uint64_t>(k));
    Path singleton({Step{s, scm.policy(s)}});
    const Estimate part = eval_delta(scm, singleton, i1, i0, 0,
                                     DeltaStatistic{phi}, sub, registry);
    est.mean += w * part.mean;
    est.ci_low += w * part.ci_low;
    est.ci_high += w * part.ci_high;
    est.n += part.n;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Three-valued state checking

namespace {
Truth truth_not(Truth t) {
  if (t == Truth::True) return Truth::False;
  if (t == Truth::False) return Truth::True;
  return Truth::Undecided;
}
Truth truth_and(Truth a, Truth b) {
  if (a == Truth::False || b == Truth::False) return Truth::False;
  if (a == Truth::True && b == Truth::True) return Truth::True;
  return Truth::Undecided;
}
Truth truth_or(Truth a, Truth b) {
  if (a == Truth::True || b == Truth::True) return Truth::True;
  if (a == Truth::False && b == Truth::False) return Truth::False;
  return Truth::Undecided;
}
}  // namespace

Verdict check_state_formula(const ScmConfig& scm, const Path& tau,
                            const StatePtr& formula, const CheckParams& params,
                            const PolicyRegistry& registry) {
  using K = StateFormula::Kind;
  Verdict v;
  switch (formula->kind) {
    case K::True:
      v.truth = Truth::True;
      return v;
    case K::Atom:
      v.truth = scm.mdp->has_label(tau.state_at(0), formula->atom)
                    ? Truth::True
                    : Truth::False;
      return v;
    case K::Not: {
      Verdict c = check_state_formula(scm, tau, formula->lhs, params, registry);
      v.truth = truth_not(c.truth);
      v.estimate = c.estimate;
      return v;
    }
    case K::And:
    case K::Or:
    case K::Implies: {
      Verdict l = check_state_formula(scm, tau, formula->lhs, params, registry);
      Verdict r = check_state_formula(scm, tau, formula->rhs, params, registry);
      if (formula->kind == K::And)
        v.truth = truth_and(l.truth, r.truth);
      else if (formula->kind == K::Or)
        v.truth = truth_or(l.truth, r.truth);
      else
        v.truth = truth_or(truth_not(l.truth), r.truth);
      return v;
    }
    case K::Prob: {
      const Estimate est = eval_cf_prob(scm, tau, Intervention{}, 0,
                                        formula->path, params, registry);
      return check_threshold(est, formula->cmp, formula->threshold);
    }
    case K::Reward: {
      const Estimate est =
          eval_cf_reward(scm, tau, Intervention{}, 0, formula->rew_lo,
                         formula->rew_hi, params);
      return check_threshold(est, formula->cmp, formula->threshold);
    }
    case K::Cf: {
      const Intervention iv = resolve_intervention(formula->i1, registry);
      const StateFormula& inner = *formula->inner;
      Estimate est;
      if (inner.kind == K::Prob)
        est = eval_cf_prob(scm, tau, iv, formula->offset, inner.path, params,
                           registry);
      else if (inner.kind == K::Reward)
        est = eval_cf_reward(scm, tau, iv, formula->offset, inner.rew_lo,
                             inner.rew_hi, params);
      else
        throw Error("counterfactual operator must wrap P or R");
      return check_threshold(est, inner.cmp, inner.threshold);
    }
    case K::Delta: {
      const Intervention iv1 = resolve_intervention(formula->i1, registry);
      const Intervention iv0 = resolve_intervention(formula->i0, registry);
      const StateFormula& inner = *formula->inner;
      DeltaStatistic stat;
      if (inner.kind == K::Prob)
        stat = inner.path;
      else if (inner.kind == K::Reward)
        stat = std::make_pair(inner.rew_lo, inner.rew_hi);
      else
        throw Error("difference operator must wrap P or R");
      const Estimate est = eval_delta(scm, tau, iv1, iv0, formula->offset,
                                      stat, params, registry);
      return check_threshold(est, inner.cmp, inner.threshold);
    }
  }
  return v;
}

std::optional<int> latest_successful_intervention(
    const ScmConfig& scm, const Path& tau, const Intervention& intervention,
    const StatePtr& phi, double p, int T, const CheckParams& params,
    const PolicyRegistry& registry) {
  for (int t = 0; t < tau.length(); ++t) {
    const PathPtr psi = mk_finally(0, T + t, mk_pnot(mk_embed(phi)));
    ScmConfig local = scm;
    local.horizon = std::max(scm.horizon, T + t + 1);
    CheckParams sub = params;
    sub.seed = mix_seed(params.seed, 0x1500u + static_cast<std::uint64_t>(t));
    const Estimate base =
        eval_cf_prob(local, tau, Intervention{}, t, psi, sub, registry);
    const bool premise =
        collapse_verdict(check_threshold(base, Cmp::Gt, p), Cmp::Gt, p);
    if (!premise) return t;
    sub.seed = mix_seed(params.seed, 0x1600u + static_cast<std::uint64_t>(t));
    const Estimate fixed =
        eval_cf_prob(local, tau, intervention, t, psi, sub, registry);
    const bool conclusion =
        collapse_verdict(check_threshold(fixed, Cmp::Le, p), Cmp::Le, p);
    if (conclusion) return t;
  }
  return std::nullopt;
}

}  // namespace cfcheck
