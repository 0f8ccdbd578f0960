#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "cfcheck/statcheck.hpp"

namespace cfcheck {

struct Model {
  std::shared_ptr<const Mdp> mdp;
  PolicyRegistry policies;
  std::optional<GridConfig> grid;
};

/// Model file: either an explicit MDP (states/actions/transitions/init/
/// rewards/labels) or {"gridworld": {...}}, plus named policies. Grid models
/// auto-register the "opt" and "random" fixtures when the layout matches.
/// Throws Error on schema or validation failures.
Model load_model(const std::filesystem::path& file);
Model model_from_json(const std::string& text);

struct Trace {
  Path path;
  std::string policy_name;
};

Trace load_trace(const std::filesystem::path& file, const Mdp& mdp);
void save_trace(const std::filesystem::path& file, const Mdp& mdp,
                const Trace& trace);

std::string trace_to_json(const Mdp& mdp, const Trace& trace);
Trace trace_from_json(const std::string& text, const Mdp& mdp);

/// {formula, verdict, mean, ci, n, method, seed}
std::string verdict_to_json(const std::string& formula, const Verdict& v,
                            std::uint64_t seed);

/// CSV dump of posterior contexts: sample,step,state,gumbel_value rows.
void write_context_csv(std::ostream& out, const Mdp& mdp,
                       const std::vector<GumbelContext>& contexts);

}  // namespace cfcheck
