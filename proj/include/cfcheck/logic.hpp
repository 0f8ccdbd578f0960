#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cfcheck/mdp.hpp"

namespace cfcheck {

enum class Cmp { Lt, Le, Gt, Ge, Query };

std::string cmp_to_string(Cmp c);

/// Intervention at the syntax level: policy names resolved against the model
/// file's registry at check time. Empty list is the null intervention.
struct InterventionSpec {
  std::vector<std::string> policy_names;
  bool empty() const { return policy_names.empty(); }
  bool operator==(const InterventionSpec&) const = default;
};

struct StateFormula;
struct PathFormula;
using StatePtr = std::shared_ptr<const StateFormula>;
using PathPtr = std::shared_ptr<const PathFormula>;

struct StateFormula {
  enum class Kind {
    True,
    Atom,
    Not,
    And,
    Or,
    Implies,
    Prob,    // P bound [ path ]
    Reward,  // R bound [ C[a,b] ]
    Cf,      // [I] @ t . (Prob|Reward)
    Delta,   // D[I1,I0] @ t . (Prob|Reward)
  };
  Kind kind;
  std::string atom;
  StatePtr lhs, rhs;  // Not uses lhs only
  Cmp cmp = Cmp::Query;
  double threshold = 0.0;
  PathPtr path;               // Prob
  int rew_lo = 0, rew_hi = 0; // Reward
  StatePtr inner;             // Cf/Delta wrap one Prob or Reward node
  InterventionSpec i1, i0;    // Cf uses i1
  int offset = 0;
};

struct PathFormula {
  enum class Kind { Embed, Not, And, Or, Implies, Until, Finally, Globally, Next };
  Kind kind;
  StatePtr state;  // Embed
  PathPtr lhs, rhs;
  int lo = 0, hi = 0;  // Until/Finally/Globally bounds
};

// Construction helpers (shared_ptr plumbing).
StatePtr mk_true();
StatePtr mk_atom(std::string name);
StatePtr mk_not(StatePtr f);
StatePtr mk_and(StatePtr l, StatePtr r);
StatePtr mk_or(StatePtr l, StatePtr r);
StatePtr mk_implies(StatePtr l, StatePtr r);
StatePtr mk_prob(Cmp cmp, double threshold, PathPtr path);
StatePtr mk_reward(Cmp cmp, double threshold, int lo, int hi);
StatePtr mk_cf(InterventionSpec i, int offset, StatePtr inner);
StatePtr mk_delta(InterventionSpec i1, InterventionSpec i0, int offset,
                  StatePtr inner);
PathPtr mk_embed(StatePtr f);
PathPtr mk_pnot(PathPtr f);
PathPtr mk_pand(PathPtr l, PathPtr r);
PathPtr mk_por(PathPtr l, PathPtr r);
PathPtr mk_pimplies(PathPtr l, PathPtr r);
PathPtr mk_until(PathPtr l, int lo, int hi, PathPtr r);
PathPtr mk_finally(int lo, int hi, PathPtr f);
PathPtr mk_globally(int lo, int hi, PathPtr f);
PathPtr mk_next(PathPtr f);

bool formula_equal(const StatePtr& a, const StatePtr& b);
bool formula_equal(const PathPtr& a, const PathPtr& b);

struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t offset,
             std::vector<std::string> expected)
      : Error(msg), offset(offset), expected(std::move(expected)) {}
  std::size_t offset = 0;
  std::vector<std::string> expected;
};

/// Throws ParseError with byte offset and expected-token set.
StatePtr parse_formula(std::string_view text);

struct ParseResult {
  StatePtr ast;  // null on failure
  std::string error;
  std::size_t offset = 0;
};

/// Total variant: never throws on arbitrary input.
ParseResult try_parse(std::string_view text) noexcept;

std::string pretty_print(const StatePtr& f);
std::string pretty_print(const PathPtr& f);

/// Minimal number of future steps needed to decide the node at a position.
/// Nested probabilistic operators spawn fresh rollouts and contribute 0;
/// Cf/Delta offsets contribute max(t, 0).
int formula_horizon(const StatePtr& f);
int formula_horizon(const PathPtr& f);

/// Rollout length (pairs) needed to estimate every probabilistic node of a
/// state formula from a fresh start state.
int required_scm_horizon(const StatePtr& f);

/// Decides state subformulas against the path prefix tau'[1:pos].
using StateOracle = std::function<bool(const Path& prefix, const StateFormula&)>;

/// Boolean verdict of phi at position `pos` of tau'. Requires
/// pos + formula_horizon(phi) <= |tau'|.
bool eval_path_formula(const StateOracle& oracle, const Path& tau, int pos,
                       const PathPtr& phi);

/// Oracle for formulas without probabilistic nodes (atoms and booleans only).
bool eval_propositional(const Mdp& mdp, const Path& prefix,
                        const StateFormula& f);

}  // namespace cfcheck
