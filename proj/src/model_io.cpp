#include "cfcheck/model_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cfcheck {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error("invalid JSON");
  return j;
}

GridConfig grid_from_json(const json& j) {
  GridConfig cfg;
  if (j.contains("rows")) cfg.rows = j.at("rows").get<int>();
  if (j.contains("cols")) cfg.cols = j.at("cols").get<int>();
  auto cell = [](const json& c) {
    return Cell{c.at(0).get<int>(), c.at(1).get<int>()};
  };
  if (j.contains("start")) cfg.start = cell(j.at("start"));
  if (j.contains("target")) cfg.target = cell(j.at("target"));
  if (j.contains("unsafe")) {
    cfg.unsafe.clear();
    for (const json& c : j.at("unsafe")) cfg.unsafe.insert(cell(c));
  }
  if (j.contains("slip")) cfg.slip = j.at("slip").get<double>();
  return cfg;
}

Policy policy_from_json(const Mdp& mdp, const json& j,
                        const std::string& name) {
  Policy pi;
  pi.table.assign(mdp.num_states(), -1);
  for (const auto& [state, action] : j.items()) {
    const int s = mdp.state_index(state);
    if (s < 0) throw Error("policy '" + name + "': unknown state " + state);
    const int a = mdp.action_index(action.get<std::string>());
    if (a < 0)
      throw Error("policy '" + name + "': unknown action " +
                  action.get<std::string>());
    pi.table[s] = a;
  }
  for (StateId s = 0; s < mdp.num_states(); ++s)
    if (pi.table[s] < 0)
      throw Error("policy '" + name + "' is not total: missing state " +
                  mdp.states[s]);
  return pi;
}

Mdp mdp_from_json(const json& j) {
  Mdp mdp;
  mdp.states = j.at("states").get<std::vector<std::string>>();
  mdp.actions = j.at("actions").get<std::vector<std::string>>();
  mdp.resize_tables();
  for (const auto& [state, rows] : j.at("transitions").items()) {
    const int s = mdp.state_index(state);
    if (s < 0) throw Error("transitions: unknown state " + state);
    for (const auto& [action, row] : rows.items()) {
      const int a = mdp.action_index(action);
      if (a < 0) throw Error("transitions: unknown action " + action);
      TransRow& tr = mdp.trans[s][a];
      tr.defined = true;
      tr.p.assign(mdp.num_states(), 0.0);
      for (const auto& [next, prob] : row.items()) {
        const int t = mdp.state_index(next);
        if (t < 0) throw Error("transitions: unknown state " + next);
        tr.p[t] = prob.get<double>();
      }
    }
  }
  for (const auto& [state, prob] : j.at("init").items()) {
    const int s = mdp.state_index(state);
    if (s < 0) throw Error("init: unknown state " + state);
    mdp.init[s] = prob.get<double>();
  }
  if (j.contains("rewards")) {
    for (const auto& [state, row] : j.at("rewards").items()) {
      const int s = mdp.state_index(state);
      if (s < 0) throw Error("rewards: unknown state " + state);
      for (const auto& [action, r] : row.items()) {
        const int a = mdp.action_index(action);
        if (a < 0) throw Error("rewards: unknown action " + action);
        mdp.reward[s][a] = r.get<double>();
      }
    }
  }
  if (j.contains("labels")) {
    for (const auto& [state, props] : j.at("labels").items()) {
      const int s = mdp.state_index(state);
      if (s < 0) throw Error("labels: unknown state " + state);
      for (const json& p : props) {
        mdp.labels[s].insert(p.get<std::string>());
        mdp.propositions.insert(p.get<std::string>());
      }
    }
  }
  return mdp;
}

}  // namespace

Model model_from_json(const std::string& text) {
  const json j = parse_json(text);
  Model model;
  if (j.contains("gridworld")) {
    model.grid = grid_from_json(j.at("gridworld"));
    auto mdp = std::make_shared<Mdp>(build_gridworld(*model.grid));
    model.mdp = mdp;
    try {
      model.policies.emplace("opt", gridworld_safe_policy(*model.grid));
      model.policies.emplace("random", gridworld_risky_policy(*model.grid));
    } catch (const Error&) {
      // Fixtures exist only for the default layout.
    }
  } else {
    model.mdp = std::make_shared<Mdp>(mdp_from_json(j));
  }
  if (j.contains("policies")) {
    for (const auto& [name, table] : j.at("policies").items())
      model.policies.insert_or_assign(name,
                                      policy_from_json(*model.mdp, table, name));
  }
  const std::vector<std::string> problems = validate_mdp(*model.mdp);
  if (!problems.empty()) throw Error("invalid model: " + problems.front());
  return model;
}

Model load_model(const std::filesystem::path& file) {
  return model_from_json(read_file(file));
}

std::string trace_to_json(const Mdp& mdp, const Trace& trace) {
  json steps = json::array();
  for (const Step& s : trace.path.steps())
    steps.push_back(
        {{"state", mdp.states[s.state]}, {"action", mdp.actions[s.action]}});
  const json j = {{"policy", trace.policy_name}, {"steps", steps}};
  return j.dump(2);
}

Trace trace_from_json(const std::string& text, const Mdp& mdp) {
  const json j = parse_json(text);
  Trace trace;
  trace.policy_name = j.value("policy", std::string{});
  std::vector<Step> steps;
  int pos = 0;
  for (const json& rec : j.at("steps")) {
    ++pos;
    const int s = mdp.state_index(rec.at("state").get<std::string>());
    if (s < 0)
      throw TraceError("unknown state " + rec.at("state").get<std::string>(),
                       pos);
    const int a = mdp.action_index(rec.at("action").get<std::string>());
    if (a < 0)
      throw TraceError("unknown action " + rec.at("action").get<std::string>(),
                       pos);
    steps.push_back({s, a});
  }
  if (steps.empty()) throw TraceError("trace has no steps", 0);
  trace.path = Path(std::move(steps));
  return trace;
}

Trace load_trace(const std::filesystem::path& file, const Mdp& mdp) {
  return trace_from_json(read_file(file), mdp);
}

void save_trace(const std::filesystem::path& file, const Mdp& mdp,
                const Trace& trace) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  out << trace_to_json(mdp, trace) << "\n";
}

std::string verdict_to_json(const std::string& formula, const Verdict& v,
                            std::uint64_t seed) {
  const char* verdict = v.quantitative          ? "quantitative"
                        : v.truth == Truth::True  ? "true"
                        : v.truth == Truth::False ? "false"
                                                  : "undecided";
  const json j = {
      {"formula", formula},
      {"verdict", verdict},
      {"mean", v.estimate.mean},
      {"ci", {v.estimate.ci_low, v.estimate.ci_high}},
      {"n", v.estimate.n},
      {"method", ci_method_name(v.estimate.method)},
      {"seed", seed},
  };
  return j.dump(2);
}

void write_context_csv(std::ostream& out, const Mdp& mdp,
                       const std::vector<GumbelContext>& contexts) {
  out << "sample,step,state,gumbel_value\n";
  for (std::size_t i = 0; i < contexts.size(); ++i)
    for (int k = 0; k < contexts[i].steps(); ++k)
      for (StateId s = 0; s < mdp.num_states(); ++s)
        out << i << ',' << k << ',' << mdp.states[s] << ','
            << contexts[i].g[k][s] << '\n';
}

}  // namespace cfcheck
