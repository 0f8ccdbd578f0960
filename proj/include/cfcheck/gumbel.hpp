#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cfcheck/mdp.hpp"

namespace cfcheck {

/// Per-step Gumbel noise vectors: g[k] governs the transition from the
/// (k+1)-th path position into the (k+2)-th. A path of n pairs uses n-1
/// entries.
struct GumbelContext {
  std::vector<std::vector<double>> g;
  int steps() const { return static_cast<int>(g.size()); }
};

struct ScmConfig {
  std::shared_ptr<const Mdp> mdp;
  Policy policy;
  int horizon = 1;  // path length (pairs) of one unrolling
};

/// Ordered policy replacements; empty denotes the null intervention. Each
/// replacement rebinds the whole policy, so the last one is effective.
struct Intervention {
  std::vector<Policy> replacements;
  bool empty() const { return replacements.empty(); }
  const Policy& apply(const Policy& base) const {
    return replacements.empty() ? base : replacements.back();
  }
};

enum class AbductionMethod { Rejection, Exact };

double sample_standard_gumbel(Rng& rng);

std::vector<double> sample_prior_gumbels(std::size_t k, Rng& rng);

/// Argmax of ln(probs[s]) + g[s] over the support of probs. States with zero
/// probability never win; ties go to the lowest index.
StateId gumbel_argmax(const std::vector<double>& probs,
                      const std::vector<double>& g);

/// Deterministic unrolling given a full noise context (>= horizon-1 steps).
/// `start` empty requires a point-mass init.
Path sample_scm_path(const ScmConfig& cfg, const GumbelContext& context,
                     std::optional<StateId> start);
Path sample_scm_path(const ScmConfig& cfg, Rng& rng,
                     std::optional<StateId> start);

/// Posterior sample of the step noise conditioned on the argmax landing on
/// s_next: draw priors and accept on reproduction. Throws TraceError on a
/// zero-probability observation.
std::vector<double> abduct_step_rejection(const Mdp& mdp, StateId s,
                                          ActionId a, StateId s_next,
                                          Rng& rng);

/// Exact posterior sampler with the same distribution as rejection: the
/// winning perturbed value is a free Gumbel draw, losers are truncated
/// Gumbels below it, off-support states keep prior noise.
std::vector<double> abduct_step_exact(const Mdp& mdp, StateId s, ActionId a,
                                      StateId s_next, Rng& rng);

std::vector<double> abduct_step(const Mdp& mdp, StateId s, ActionId a,
                                StateId s_next, AbductionMethod method,
                                Rng& rng);

/// Throws TraceError if an action disagrees with the policy or a transition
/// has zero probability.
void check_consistency(const ScmConfig& cfg, const Path& tau);

/// n independent posterior contexts for the whole observed path, built
/// step-by-step via the Markov factorization.
std::vector<GumbelContext> abduct_path(const ScmConfig& cfg, const Path& tau,
                                       int n, AbductionMethod method,
                                       Rng& rng);

/// Counterfactual unrolling of `horizon` pairs from tau[-offset]: noise for
/// rollout steps overlapping tau comes from the posterior, later steps from
/// the prior, and the intervention's policy applies from the start state on.
struct CounterfactualModel {
  ScmConfig base;
  Path observed;
  int offset = 0;  // clipped into (-|tau|, |tau|)
  Intervention intervention;
  int horizon = 1;
  StateId start = 0;
  int start_pos = 1;        // 1-based position of `start` in `observed`
  int posterior_steps = 0;  // observed transitions reused by rollouts

  const Policy& rollout_policy() const {
    return intervention.apply(base.policy);
  }
};

CounterfactualModel build_counterfactual_model(const ScmConfig& cfg,
                                               const Path& tau, int offset,
                                               Intervention intervention,
                                               int horizon);

/// Posterior noise for the overlapping steps only (posterior_steps entries).
GumbelContext draw_posterior_context(const CounterfactualModel& cf,
                                     AbductionMethod method, Rng& rng);

/// Extends a posterior context with prior noise up to horizon-1 steps.
GumbelContext extend_with_prior(const CounterfactualModel& cf,
                                GumbelContext context, Rng& rng);

/// Deterministic rollout under a full context. Contexts are keyed by time
/// step and stay attached to it even after the counterfactual state diverges
/// from the observed one.
Path rollout_counterfactual(const CounterfactualModel& cf,
                            const GumbelContext& context);

Path sample_counterfactual_path(const CounterfactualModel& cf,
                                AbductionMethod method, Rng& rng);

}  // namespace cfcheck
