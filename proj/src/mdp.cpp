#include "cfcheck/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cfcheck {

namespace {
constexpr double kProbTolerance = 1e-9;
}

int Mdp::state_index(std::string_view name) const {
  auto it = std::find(states.begin(), states.end(), name);
  return it == states.end() ? -1 : static_cast<int>(it - states.begin());
}

int Mdp::action_index(std::string_view name) const {
  auto it = std::find(actions.begin(), actions.end(), name);
  return it == actions.end() ? -1 : static_cast<int>(it - actions.begin());
}

void Mdp::resize_tables() {
  const auto ns = states.size();
  const auto na = actions.size();
  trans.assign(ns, std::vector<TransRow>(na));
  for (auto& per_state : trans)
    for (auto& row : per_state) row.p.assign(ns, 0.0);
  init.assign(ns, 0.0);
  reward.assign(ns, std::vector<double>(na, 0.0));
  labels.assign(ns, {});
}

const Step& Path::at(int i) const {
  const int n = length();
  if (n == 0) throw Error("empty path");
  if (i == 0) return steps_.back();
  if (i > 0) {
    if (i > n) throw Error("path index out of range");
    return steps_[static_cast<std::size_t>(i - 1)];
  }
  if (-i >= n) throw Error("path index out of range");
  return steps_[static_cast<std::size_t>(n + i - 1)];
}

Path Path::prefix(int len) const {
  if (len < 1 || len > length()) throw Error("bad prefix length");
  return Path(std::vector<Step>(steps_.begin(), steps_.begin() + len));
}

std::vector<std::string> validate_mdp(const Mdp& mdp) {
  std::vector<std::string> violations;
  const int ns = mdp.num_states();
  const int na = mdp.num_actions();
  auto state_name = [&](int s) {
    return s >= 0 && s < ns ? mdp.states[s] : "#" + std::to_string(s);
  };

  if (static_cast<int>(mdp.trans.size()) != ns ||
      static_cast<int>(mdp.init.size()) != ns ||
      static_cast<int>(mdp.reward.size()) != ns ||
      static_cast<int>(mdp.labels.size()) != ns) {
    violations.push_back("table sizes do not match the state count");
    return violations;
  }

  for (int s = 0; s < ns; ++s) {
    if (static_cast<int>(mdp.trans[s].size()) != na) {
      violations.push_back("transition table of " + state_name(s) +
                           " does not match the action count");
      continue;
    }
    for (int a = 0; a < na; ++a) {
      const TransRow& row = mdp.trans[s][a];
      if (!row.defined) continue;
      if (static_cast<int>(row.p.size()) != ns) {
        violations.push_back("row (" + state_name(s) + "," + mdp.actions[a] +
                             ") has wrong width");
        continue;
      }
      double sum = 0.0;
      for (int t = 0; t < ns; ++t) {
        if (row.p[t] < 0.0 || row.p[t] > 1.0 + kProbTolerance) {
          std::ostringstream os;
          os << "probability out of range at (" << state_name(s) << ","
             << mdp.actions[a] << "," << state_name(t) << "): " << row.p[t];
          violations.push_back(os.str());
        }
        sum += row.p[t];
      }
      if (std::abs(sum - 1.0) > kProbTolerance) {
        std::ostringstream os;
        os << "row (" << state_name(s) << "," << mdp.actions[a]
           << ") sums to " << sum;
        violations.push_back(os.str());
      }
    }
  }

  double init_sum = 0.0;
  for (int s = 0; s < ns; ++s) {
    if (mdp.init[s] < 0.0 || mdp.init[s] > 1.0 + kProbTolerance)
      violations.push_back("init probability out of range at " +
                           state_name(s));
    init_sum += mdp.init[s];
  }
  if (std::abs(init_sum - 1.0) > kProbTolerance) {
    std::ostringstream os;
    os << "init distribution sums to " << init_sum;
    violations.push_back(os.str());
  }

  for (int s = 0; s < ns; ++s)
    for (const auto& prop : mdp.labels[s])
      if (mdp.propositions.count(prop) == 0)
        violations.push_back("state " + state_name(s) +
                             " carries undeclared proposition \"" + prop +
                             "\"");
  return violations;
}

double path_probability(const Mdp& mdp, const Path& path) {
  if (path.empty()) throw Error("path_probability: empty path");
  double prob = mdp.init[path.state_at(1)];
  for (int i = 1; i < path.length(); ++i) {
    if (prob == 0.0) return 0.0;
    const Step& cur = path.at(i);
    const TransRow& row = mdp.row(cur.state, cur.action);
    if (!row.defined) return 0.0;
    prob *= row.p[path.state_at(i + 1)];
  }
  return prob;
}

namespace {

StateId sample_categorical(const std::vector<double>& p, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  int last_support = -1;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] <= 0.0) continue;
    last_support = static_cast<int>(s);
    acc += p[s];
    if (u < acc) return static_cast<int>(s);
  }
  if (last_support < 0) throw Error("categorical distribution has no support");
  return last_support;  // guard against rounding at u ~ 1
}

}  // namespace

Path simulate_path(const Mdp& mdp, const Policy& policy,
                   std::optional<StateId> start, int length, Rng& rng) {
  if (length < 1) throw Error("simulate_path: length must be positive");
  StateId s = start ? *start : sample_categorical(mdp.init, rng);
  Path path;
  for (int i = 0; i < length; ++i) {
    const ActionId a = policy(s);
    path.push_back({s, a});
    if (i + 1 == length) break;
    const TransRow& row = mdp.row(s, a);
    if (!row.defined)
      throw Error("simulate_path: undefined transition row at (" +
                  mdp.states[s] + "," + mdp.actions[a] + ")");
    s = sample_categorical(row.p, rng);
  }
  return path;
}

std::string grid_state_name(int row, int col) {
  return std::to_string(row) + "_" + std::to_string(col);
}

namespace {

void validate_grid_config(const GridConfig& cfg) {
  auto inside = [&](const Cell& c) {
    return c.row >= 0 && c.row < cfg.rows && c.col >= 0 && c.col < cfg.cols;
  };
  if (cfg.rows < 1 || cfg.cols < 1) throw Error("grid: empty dimensions");
  if (!inside(cfg.start)) throw Error("grid: start cell outside the grid");
  if (!inside(cfg.target)) throw Error("grid: target cell outside the grid");
  for (const Cell& c : cfg.unsafe)
    if (!inside(c)) throw Error("grid: unsafe cell outside the grid");
  if (cfg.unsafe.count(cfg.target)) throw Error("grid: target marked unsafe");
  if (cfg.slip < 0.0 || cfg.slip > 1.0) throw Error("grid: slip outside [0,1]");
}

}  // namespace

Mdp build_gridworld(const GridConfig& cfg) {
  validate_grid_config(cfg);
  Mdp mdp;
  mdp.actions = {"Up", "Down", "Left", "Right"};
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c)
      mdp.states.push_back(grid_state_name(r, c));
  mdp.propositions = {"target", "unsafe"};
  mdp.resize_tables();

  auto index_of = [&](int r, int c) { return r * cfg.cols + c; };
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};

  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      const int s = index_of(r, c);
      const bool is_target = Cell{r, c} == cfg.target;
      const bool is_unsafe = cfg.unsafe.count(Cell{r, c}) > 0;
      if (is_target) mdp.labels[s].insert("target");
      if (is_unsafe) mdp.labels[s].insert("unsafe");
      for (int a = 0; a < 4; ++a) {
        TransRow& row = mdp.trans[s][a];
        row.defined = true;
        if (is_target || is_unsafe) {
          row.p[s] = 1.0;  // absorbing
        } else {
          for (int actual = 0; actual < 4; ++actual) {
            const double pr = actual == a ? 1.0 - cfg.slip : cfg.slip / 3.0;
            if (pr == 0.0) continue;
            int nr = r + dr[actual];
            int nc = c + dc[actual];
            if (nr < 0 || nr >= cfg.rows || nc < 0 || nc >= cfg.cols) {
              nr = r;
              nc = c;  // bump into the wall
            }
            row.p[index_of(nr, nc)] += pr;
          }
        }
        if (is_target) mdp.reward[s][a] = 1.0;
      }
    }
  }
  mdp.init[index_of(cfg.start.row, cfg.start.col)] = 1.0;
  return mdp;
}

Policy value_iteration_reach_avoid(const Mdp& mdp,
                                   const std::string& target_label,
                                   const std::string& unsafe_label,
                                   int horizon) {
  if (horizon < 1) throw Error("value iteration: horizon must be positive");
  const int ns = mdp.num_states();
  const int na = mdp.num_actions();
  bool any_target = false;
  std::vector<bool> is_target(ns), is_unsafe(ns);
  for (int s = 0; s < ns; ++s) {
    is_target[s] = mdp.has_label(s, target_label);
    is_unsafe[s] = mdp.has_label(s, unsafe_label);
    any_target |= is_target[s];
  }
  if (!any_target) throw Error("value iteration: no state carries the target label");

  // Successors visited in state-name order so the result is invariant to
  // permutations of the internal state ordering.
  std::vector<int> by_name(ns);
  std::iota(by_name.begin(), by_name.end(), 0);
  std::sort(by_name.begin(), by_name.end(),
            [&](int a, int b) { return mdp.states[a] < mdp.states[b]; });

  auto q_value = [&](int s, int a, const std::vector<double>& v) {
    const TransRow& row = mdp.row(s, a);
    if (!row.defined) return -1.0;
    double q = 0.0;
    for (int t : by_name) q += row.p[t] * v[t];
    return q;
  };

  std::vector<double> v(ns, 0.0), next(ns, 0.0);
  for (int s = 0; s < ns; ++s) v[s] = is_target[s] ? 1.0 : 0.0;
  for (int k = 0; k < horizon; ++k) {
    for (int s = 0; s < ns; ++s) {
      if (is_target[s]) {
        next[s] = 1.0;
      } else if (is_unsafe[s]) {
        next[s] = 0.0;
      } else {
        double best = 0.0;
        for (int a = 0; a < na; ++a)
          best = std::max(best, q_value(s, a, v));
        next[s] = best;
      }
    }
    v.swap(next);
  }

  Policy policy;
  policy.table.assign(ns, 0);
  for (int s = 0; s < ns; ++s) {
    int best_a = 0;
    double best_q = q_value(s, 0, v);
    for (int a = 1; a < na; ++a) {
      const double q = q_value(s, a, v);
      if (q > best_q + 1e-12) {
        best_q = q;
        best_a = a;
      }
    }
    policy.table[s] = best_a;
  }
  return policy;
}

Policy compose_segment_policy(const Policy& base,
                              const std::vector<PolicySegment>& segments) {
  Policy composed = base;
  for (const PolicySegment& seg : segments)
    for (StateId s : seg.states) composed.table[s] = seg.policy(s);
  return composed;
}

namespace {

Policy grid_policy_from_rows(const GridConfig& cfg, const Mdp& mdp,
                             const std::vector<std::string>& rows) {
  Policy policy;
  policy.table.assign(mdp.num_states(), 0);
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      ActionId a;
      switch (rows[r][c]) {
        case 'U': a = 0; break;
        case 'D': a = 1; break;
        case 'L': a = 2; break;
        case 'R': a = 3; break;
        default: throw Error("bad policy rune");
      }
      policy.table[r * cfg.cols + c] = a;
    }
  }
  return policy;
}

void require_default_layout(const GridConfig& cfg) {
  const GridConfig def{};
  if (cfg.rows != def.rows || cfg.cols != def.cols ||
      cfg.target != def.target || cfg.unsafe != def.unsafe)
    throw Error("fixture policies are defined for the default 4x4 layout only");
}

}  // namespace

Policy gridworld_safe_policy(const GridConfig& cfg) {
  require_default_layout(cfg);
  const Mdp mdp = build_gridworld(cfg);
  // Down the left side, then right along the bottom row. The labelled cells
  // have no meaningful action; Down keeps the table total.
  return grid_policy_from_rows(cfg, mdp,
                               {"DDRD",
                                "DDDD",
                                "DDDD",
                                "RRRD"});
}

Policy gridworld_risky_policy(const GridConfig& cfg) {
  require_default_layout(cfg);
  const Mdp mdp = build_gridworld(cfg);
  // Right along the top row, then down the right edge: passes next to the
  // unsafe cell.
  return grid_policy_from_rows(cfg, mdp,
                               {"RRRD",
                                "RDDD",
                                "RRDD",
                                "RRRD"});
}

}  // namespace cfcheck
