#pragma once

#include <map>
#include <optional>
#include <variant>

#include "cfcheck/gumbel.hpp"
#include "cfcheck/logic.hpp"

namespace cfcheck {

enum class CiMethod { Wald, ClopperPearson, TInterval, PairedT, TwoSample };

std::string ci_method_name(CiMethod m);

struct Estimate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  long n = 0;
  CiMethod method = CiMethod::ClopperPearson;
};

struct CheckParams {
  long n = 2000;        // rollouts per estimate
  int m = 20;           // posterior contexts per observed path
  double alpha = 0.05;  // significance level
  std::uint64_t seed = 0;
  int jobs = 1;
  AbductionMethod method = AbductionMethod::Exact;
  bool wald = false;    // Wald instead of Clopper-Pearson for proportions
  long sprt_cap = 1000000;
};

enum class Truth { True, False, Undecided };

struct Verdict {
  Truth truth = Truth::Undecided;
  Estimate estimate;
  bool quantitative = false;  // =? query: `estimate` is the answer
};

using PolicyRegistry = std::map<std::string, Policy, std::less<>>;

/// Throws Error on an unregistered policy name.
Intervention resolve_intervention(const InterventionSpec& spec,
                                  const PolicyRegistry& registry);

// Interval constructions.
Estimate binomial_estimate(long successes, long n, double alpha, bool wald);
Estimate mean_estimate(double sum, double sumsq, long n, double alpha,
                       CiMethod method = CiMethod::TInterval);

/// True/False when the CI lies strictly on one side of the threshold,
/// Undecided otherwise.
Verdict check_threshold(const Estimate& est, Cmp cmp, double threshold);

/// Okamoto bound: smallest n with P(|p_hat - p| > theta) <= gamma.
long chernoff_sample_size(double theta, double gamma);

/// Wald SPRT between H0: prob >= p+delta and H1: prob <= p-delta. Returns
/// true for H0. Throws Error if the sample cap is reached undecided.
bool sprt_decide(const std::function<bool(Rng&)>& sampler, double p,
                 double delta, double alpha, double beta, long cap,
                 std::uint64_t seed);
bool sprt_decide(const ScmConfig& scm, StateId start, const PathPtr& phi,
                 double p, double delta, double alpha, double beta,
                 const CheckParams& params, const PolicyRegistry& registry);

/// Monte-Carlo estimate of the probability of phi from `start` (position 1
/// of fresh rollouts). Requires scm.horizon >= formula_horizon(phi)+1.
Estimate estimate_path_prob(const ScmConfig& scm, StateId start,
                            const PathPtr& phi, const CheckParams& params,
                            const PolicyRegistry& registry);

/// Expected reward accumulated over rollout positions [1+lo, 1+hi].
Estimate estimate_cumulative_reward(const ScmConfig& scm, StateId start,
                                    int lo, int hi,
                                    const CheckParams& params);

/// Estimate of I@t.P=?(phi) given observed tau: m posterior contexts, each
/// rolled ceil(n/m) times.
Estimate eval_cf_prob(const ScmConfig& scm, const Path& tau,
                      const Intervention& intervention, int offset,
                      const PathPtr& phi, const CheckParams& params,
                      const PolicyRegistry& registry);

Estimate eval_cf_reward(const ScmConfig& scm, const Path& tau,
                        const Intervention& intervention, int offset, int lo,
                        int hi, const CheckParams& params);

enum class DeltaMode { Paired, Unpaired };

/// Statistic of a Delta node: either a path formula or a reward interval.
using DeltaStatistic = std::variant<PathPtr, std::pair<int, int>>;

/// Paired mode shares one noise context per sample across both worlds;
/// unpaired uses two independent estimates and a two-sample interval.
Estimate eval_delta(const ScmConfig& scm, const Path& tau,
                    const Intervention& i1, const Intervention& i0,
                    int offset, const DeltaStatistic& stat,
                    const CheckParams& params, const PolicyRegistry& registry,
                    DeltaMode mode = DeltaMode::Paired);

/// ATE-like evaluation: sum over states of P(s) times the Delta@0 estimate
/// at the singleton path (s), with a union-bound interval.
Estimate eval_ate_like(const ScmConfig& scm, const PathPtr& phi,
                       const Intervention& i1, const Intervention& i0,
                       const std::vector<double>& state_dist,
                       const CheckParams& params,
                       const PolicyRegistry& registry);

/// Recursive three-valued evaluation of a state formula against (scm, tau).
Verdict check_state_formula(const ScmConfig& scm, const Path& tau,
                            const StatePtr& formula, const CheckParams& params,
                            const PolicyRegistry& registry);

/// Smallest t in {0,...,|tau|-1} such that
///   empty@t.P>p(F[0,T+t] !phi) -> I@t.P<=p(F[0,T+t] !phi)
/// holds; nullopt when no offset qualifies.
std::optional<int> latest_successful_intervention(
    const ScmConfig& scm, const Path& tau, const Intervention& intervention,
    const StatePtr& phi, double p, int T, const CheckParams& params,
    const PolicyRegistry& registry);

}  // namespace cfcheck
