#include "cfcheck/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace cfcheck {

namespace {

constexpr int kHistogramBins = 20;

std::vector<long> histogram_20(const std::vector<double>& values) {
  std::vector<long> bins(kHistogramBins, 0);
  for (double v : values) {
    int b = static_cast<int>(std::floor(v * kHistogramBins));
    b = std::clamp(b, 0, kHistogramBins - 1);
    ++bins[static_cast<std::size_t>(b)];
  }
  return bins;
}

ArmSeries finish_arm(std::string name, std::vector<double> values) {
  ArmSeries arm;
  arm.arm = std::move(name);
  arm.values = std::move(values);
  const auto n = static_cast<double>(arm.values.size());
  double sum = 0.0, sumsq = 0.0;
  for (double v : arm.values) {
    sum += v;
    sumsq += v * v;
  }
  arm.mean = sum / n;
  const double var =
      n > 1 ? std::max(0.0, (sumsq - n * arm.mean * arm.mean) / (n - 1)) : 0.0;
  arm.std_error = std::sqrt(var / n);
  arm.histogram = histogram_20(arm.values);
  return arm;
}

// phi = !"unsafe" U[0,T] "target", evaluated at position `pos`; paths here
// never carry nested probabilistic operators, so this is a direct scan.
bool reach_avoid_holds(const Mdp& mdp, const Path& tau, int pos, int T) {
  for (int t = 0; t <= T; ++t) {
    const StateId s = tau.state_at(pos + t);
    if (mdp.has_label(s, "target")) return true;
    if (mdp.has_label(s, "unsafe")) return false;
  }
  return false;
}

}  // namespace

bool is_experiment_name(const std::string& name) {
  return name == "sanity" || name == "cf_offset1" || name == "cf_offset2" ||
         name == "beyond";
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (!is_experiment_name(cfg.name))
    throw Error("unknown experiment '" + cfg.name + "'");
  auto mdp = std::make_shared<Mdp>(build_gridworld(cfg.grid));
  const Policy opt = gridworld_safe_policy(cfg.grid);
  const Policy random = gridworld_risky_policy(cfg.grid);
  const Intervention to_opt{{opt}};

  // Observed paths cover T transitions (sanity/offset variants) or 2
  // transitions (beyond); rollouts need T more pairs past the intervention.
  const bool beyond = cfg.name == "beyond";
  const int observed_len = beyond ? 3 : cfg.T + 1;
  const int offset = cfg.name == "cf_offset2" ? -2 : beyond ? 1 : -1;
  const int horizon = cfg.T + 1;
  const ScmConfig nominal_scm{mdp, random, observed_len};

  std::vector<double> cf_values, other_values;
  cf_values.reserve(static_cast<std::size_t>(cfg.reps));
  for (int rep = 0; rep < cfg.reps; ++rep) {
    Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(rep) + 1);
    long cf_hits = 0, cf_total = 0;
    long other_hits = 0, other_total = 0;
    for (int p = 0; p < cfg.paths; ++p) {
      const Path tau = sample_scm_path(nominal_scm, rng, std::nullopt);
      if (cfg.name == "cf_offset1" || cfg.name == "cf_offset2") {
        other_hits += reach_avoid_holds(*mdp, tau, 1, cfg.T) ? 1 : 0;
        ++other_total;
      }
      const CounterfactualModel cf = build_counterfactual_model(
          nominal_scm, tau, offset, to_opt, horizon);
      for (int c = 0; c < cfg.contexts; ++c) {
        const Path rollout = sample_counterfactual_path(cf, cfg.method, rng);
        cf_hits += reach_avoid_holds(*mdp, rollout, 1, cfg.T) ? 1 : 0;
        ++cf_total;
      }
    }
    if (cfg.name == "sanity") {
      // Matched count of prior rollouts under the intervened policy.
      const ScmConfig post_scm{mdp, opt, horizon};
      for (int p = 0; p < cfg.paths; ++p)
        for (int c = 0; c < cfg.contexts; ++c) {
          const Path rollout = sample_scm_path(post_scm, rng, std::nullopt);
          other_hits += reach_avoid_holds(*mdp, rollout, 1, cfg.T) ? 1 : 0;
          ++other_total;
        }
    }
    cf_values.push_back(static_cast<double>(cf_hits) /
                        static_cast<double>(cf_total));
    if (other_total > 0)
      other_values.push_back(static_cast<double>(other_hits) /
                             static_cast<double>(other_total));
  }

  ExperimentReport report;
  report.config = cfg;
  report.arms.push_back(finish_arm("counterfactual", std::move(cf_values)));
  if (!other_values.empty()) {
    const std::string other_name =
        cfg.name == "sanity" ? "post_interventional" : "nominal";
    report.arms.push_back(finish_arm(other_name, std::move(other_values)));
    report.ks_statistic =
        ks_statistic(report.arms[0].values, report.arms[1].values);
  }
  return report;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error("ks statistic needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

void write_experiment_csv(std::ostream& out, const ExperimentReport& report) {
  out << "repetition,arm,phi_probability\n";
  for (const ArmSeries& arm : report.arms)
    for (std::size_t r = 0; r < arm.values.size(); ++r)
      out << r << ',' << arm.arm << ',' << arm.values[r] << '\n';
}

void write_experiment_summary(std::ostream& out,
                              const ExperimentReport& report) {
  nlohmann::json arms = nlohmann::json::array();
  for (const ArmSeries& arm : report.arms)
    arms.push_back({{"arm", arm.arm},
                    {"mean", arm.mean},
                    {"std_error", arm.std_error},
                    {"histogram", arm.histogram}});
  const nlohmann::json j = {
      {"experiment", report.config.name},
      {"reps", report.config.reps},
      {"paths", report.config.paths},
      {"contexts", report.config.contexts},
      {"T", report.config.T},
      {"seed", report.config.seed},
      {"method", report.config.method == AbductionMethod::Exact ? "exact"
                                                                : "rejection"},
      {"arms", arms},
      {"ks_statistic", report.ks_statistic},
      {"ks_critical_5pct",
       report.arms.size() >= 2
           ? ks_critical_value(report.arms[0].values.size(),
                               report.arms[1].values.size(), 0.05)
           : 0.0},
  };
  out << j.dump(2) << "\n";
}

}  // namespace cfcheck
