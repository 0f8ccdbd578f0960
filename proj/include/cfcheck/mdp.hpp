#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cfcheck/common.hpp"

namespace cfcheck {

using StateId = int;
using ActionId = int;

struct TransRow {
  bool defined = false;
  std::vector<double> p;  // dense over states
};

/// Finite MDP with labelled states. Immutable after construction by
/// convention; all mutation happens while building.
struct Mdp {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  std::vector<std::vector<TransRow>> trans;  // [state][action]
  std::vector<double> init;                  // categorical over states
  std::vector<std::vector<double>> reward;   // [state][action]
  std::vector<std::set<std::string>> labels; // per state
  std::set<std::string> propositions;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
  int state_index(std::string_view name) const;
  int action_index(std::string_view name) const;
  const TransRow& row(StateId s, ActionId a) const { return trans[s][a]; }
  bool has_label(StateId s, const std::string& prop) const {
    return labels[s].count(prop) > 0;
  }
  /// Sizes trans/reward/labels/init to match states x actions.
  void resize_tables();
};

struct Policy {
  std::vector<ActionId> table;  // total map state -> action
  ActionId operator()(StateId s) const { return table[s]; }
  bool operator==(const Policy&) const = default;
};

struct Step {
  StateId state;
  ActionId action;
  bool operator==(const Step&) const = default;
};

/// Nonempty sequence of (state, action) pairs with 1-based indexing,
/// tau[0] = last element and tau[-i] = tau[n-i].
class Path {
 public:
  Path() = default;
  explicit Path(std::vector<Step> steps) : steps_(std::move(steps)) {}

  int length() const { return static_cast<int>(steps_.size()); }
  bool empty() const { return steps_.empty(); }
  const Step& at(int i) const;
  StateId state_at(int i) const { return at(i).state; }
  ActionId action_at(int i) const { return at(i).action; }
  Path prefix(int len) const;
  const std::vector<Step>& steps() const { return steps_; }
  void push_back(Step s) { steps_.push_back(s); }
  bool operator==(const Path&) const = default;

 private:
  std::vector<Step> steps_;
};

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

struct GridConfig {
  int rows = 4;
  int cols = 4;
  Cell start{0, 0};
  std::set<Cell> unsafe{{1, 2}};
  Cell target{3, 3};
  double slip = 0.1;
};

std::vector<std::string> validate_mdp(const Mdp& mdp);

double path_probability(const Mdp& mdp, const Path& path);

/// Simulates `length` state-action pairs under `policy`. `start` empty means
/// draw the first state from the init distribution.
Path simulate_path(const Mdp& mdp, const Policy& policy,
                   std::optional<StateId> start, int length, Rng& rng);

/// One state per cell, actions Up/Down/Left/Right. The intended move happens
/// with probability 1-slip, each other action with slip/3; off-grid moves
/// stay in place; target and unsafe cells are absorbing. Reward 1 for any
/// action taken in the target cell.
Mdp build_gridworld(const GridConfig& cfg);

std::string grid_state_name(int row, int col);

/// Finite-horizon value iteration maximizing the probability of reaching
/// `target_label` within `horizon` steps while states labelled
/// `unsafe_label` have terminal value 0. Greedy ties broken by action order.
Policy value_iteration_reach_avoid(const Mdp& mdp,
                                   const std::string& target_label,
                                   const std::string& unsafe_label,
                                   int horizon);

struct PolicySegment {
  Policy policy;
  std::vector<StateId> states;  // states covered by the path slice
};

/// Later segments take precedence; states outside every segment keep `base`.
Policy compose_segment_policy(const Policy& base,
                              const std::vector<PolicySegment>& segments);

/// Hand-fixed policies for the default 4x4 grid layout (down the left column
/// then along the bottom row vs. along the top row then down the right edge).
Policy gridworld_safe_policy(const GridConfig& cfg);
Policy gridworld_risky_policy(const GridConfig& cfg);

}  // namespace cfcheck
