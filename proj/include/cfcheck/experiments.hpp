#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cfcheck/statcheck.hpp"

namespace cfcheck {

/// Grid-world experiment layout: per repetition, `paths` observed paths
/// under the risky policy and `contexts` counterfactual rollouts per path;
/// the phi-probability of a repetition is the mean satisfaction over all
/// rollouts of an arm.
struct ExperimentConfig {
  std::string name;  // sanity | cf_offset1 | cf_offset2 | beyond
  int reps = 1000;
  int paths = 100;
  int contexts = 20;
  int T = 10;  // bound of the reach-avoid until
  GridConfig grid;
  std::uint64_t seed = 0;
  int jobs = 1;
  AbductionMethod method = AbductionMethod::Exact;
};

struct ArmSeries {
  std::string arm;
  std::vector<double> values;  // one phi-probability per repetition
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<long> histogram;  // 20 bins over [0,1]
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ArmSeries> arms;
  double ks_statistic = 0.0;  // between the first two arms
};

bool is_experiment_name(const std::string& name);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// columns: repetition,arm,phi_probability
void write_experiment_csv(std::ostream& out, const ExperimentReport& report);
void write_experiment_summary(std::ostream& out,
                              const ExperimentReport& report);

/// Two-sample Kolmogorov-Smirnov statistic and its critical value.
double ks_statistic(std::vector<double> a, std::vector<double> b);
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

}  // namespace cfcheck
