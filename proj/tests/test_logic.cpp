#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfcheck/logic.hpp"
#include "formula_gen.hpp"
#include "oracles.hpp"

using namespace cfcheck;

TEST_CASE("reach-avoid formula parses to the expected tree") {
  const StatePtr f = parse_formula(R"(P>=0.9 [ !"unsafe" U[0,10] "target" ])");
  REQUIRE(f->kind == StateFormula::Kind::Prob);
  CHECK(f->cmp == Cmp::Ge);
  CHECK(f->threshold == 0.9);
  const PathFormula& u = *f->path;
  REQUIRE(u.kind == PathFormula::Kind::Until);
  CHECK(u.lo == 0);
  CHECK(u.hi == 10);
  REQUIRE(u.lhs->kind == PathFormula::Kind::Not);
  CHECK(u.lhs->lhs->state->atom == "unsafe");
  CHECK(u.rhs->state->atom == "target");
}

TEST_CASE("counterfactual query parses with intervention and offset") {
  const StatePtr f = parse_formula(R"([pi<-opt]@-1 . P=? [ F[0,10] "fail" ])");
  REQUIRE(f->kind == StateFormula::Kind::Cf);
  CHECK(f->i1.policy_names == std::vector<std::string>{"opt"});
  CHECK(f->offset == -1);
  REQUIRE(f->inner->kind == StateFormula::Kind::Prob);
  CHECK(f->inner->cmp == Cmp::Query);
  REQUIRE(f->inner->path->kind == PathFormula::Kind::Finally);
  CHECK(f->inner->path->hi == 10);
}

TEST_CASE("delta and empty interventions parse") {
  const StatePtr f = parse_formula("D[pi<-opt,empty]@2.P>0.5[ \"a\" ]");
  REQUIRE(f->kind == StateFormula::Kind::Delta);
  CHECK(f->i1.policy_names == std::vector<std::string>{"opt"});
  CHECK(f->i0.empty());
  CHECK(f->offset == 2);

  const StatePtr g = parse_formula("D[empty, pi<-opt]@0.R<=1.5[C[0,3]]");
  CHECK(g->i1.empty());
  CHECK(g->i0.policy_names == std::vector<std::string>{"opt"});
  REQUIRE(g->inner->kind == StateFormula::Kind::Reward);
  CHECK(g->inner->threshold == 1.5);

  const StatePtr h = parse_formula("[empty]@0 . P=?[ \"a\" ]");
  REQUIRE(h->kind == StateFormula::Kind::Cf);
  CHECK(h->i1.empty());

  // Multi-replacement first list: final group is the second list.
  const StatePtr k = parse_formula("D[pi<-a,pi<-b,pi<-c]@0.P=?[ \"a\" ]");
  CHECK(k->i1.policy_names == std::vector<std::string>({"a", "b"}));
  CHECK(k->i0.policy_names == std::vector<std::string>{"c"});
}

TEST_CASE("precedence: unary > and > or > implies; until binds loosest") {
  const StatePtr f = parse_formula(R"(!"a" & "b" | "c" -> "d")");
  REQUIRE(f->kind == StateFormula::Kind::Implies);
  REQUIRE(f->lhs->kind == StateFormula::Kind::Or);
  REQUIRE(f->lhs->lhs->kind == StateFormula::Kind::And);
  CHECK(f->lhs->lhs->lhs->kind == StateFormula::Kind::Not);

  const StatePtr g = parse_formula(R"(P=?[ "a" & "b" U[0,2] "c" | "d" ])");
  REQUIRE(g->path->kind == PathFormula::Kind::Until);
  CHECK(g->path->lhs->kind == PathFormula::Kind::And);
  CHECK(g->path->rhs->kind == PathFormula::Kind::Or);

  // Right-associative implication.
  const StatePtr h = parse_formula(R"("a" -> "b" -> "c")");
  CHECK(h->rhs->kind == StateFormula::Kind::Implies);
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    parse_formula(R"(P>0.9 [ "a" U[5,2] "b" ])");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset == 14);  // where the interval starts
  }
  CHECK_THROWS_AS(parse_formula("P>1.5[ \"a\" ]"), ParseError);
  CHECK_THROWS_AS(parse_formula("P>=[ \"a\" ]"), ParseError);
  CHECK_THROWS_AS(parse_formula("\"unterminated"), ParseError);
  CHECK_THROWS_AS(parse_formula("P=?[ \"a\""), ParseError);
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("\"a\" extra"), ParseError);
  // Negative rewards thresholds are fine, negative probabilities are not.
  CHECK_NOTHROW(parse_formula("R>=-2.5[C[0,4]]"));
  CHECK_THROWS_AS(parse_formula("P>=-0.1[ \"a\" ]"), ParseError);
}

TEST_CASE("try_parse never throws and reports the failure offset") {
  const ParseResult ok = try_parse("true");
  CHECK(ok.ast != nullptr);
  const ParseResult bad = try_parse("P>0.9 [ \"a\" U[5,2] \"b\" ]");
  CHECK(bad.ast == nullptr);
  CHECK(bad.offset == 14);
  CHECK(!bad.error.empty());
}

TEST_CASE("pretty print round-trips generated formulas") {
  formula_gen::Gen gen(2024);
  for (int i = 0; i < 500; ++i) {
    const StatePtr f = gen.state(4);
    const std::string text = pretty_print(f);
    CAPTURE(text);
    StatePtr again;
    REQUIRE_NOTHROW(again = parse_formula(text));
    CHECK(formula_equal(f, again));
    CHECK(pretty_print(again) == text);
  }
}

TEST_CASE("formula horizons") {
  CHECK(formula_horizon(parse_formula("\"a\"")) == 0);
  const StatePtr u = parse_formula("P=?[ \"a\" U[0,10] \"b\" ]");
  CHECK(formula_horizon(u->path) == 10);
  CHECK(required_scm_horizon(u) == 11);
  const StatePtr nested = parse_formula("P=?[ F[0,2] G[1,3] X \"b\" ]");
  CHECK(formula_horizon(nested->path) == 6);
  const StatePtr r = parse_formula("R=?[C[2,5]]");
  CHECK(formula_horizon(r) == 0);
  CHECK(required_scm_horizon(r) == 6);
  // Nested probabilistic node spawns fresh rollouts: horizon of the outer
  // path counts only the temporal operators.
  const StatePtr deep = parse_formula("P=?[ X P=?[ \"a\" U[0,9] \"b\" ] ]");
  CHECK(formula_horizon(deep->path) == 1);
  CHECK(required_scm_horizon(deep) == 10);
  const StatePtr cf = parse_formula("[pi<-opt]@3 . P=?[ X \"a\" ]");
  CHECK(formula_horizon(cf) == 3);
}

TEST_CASE("path semantics against a hand-built trace") {
  const GridConfig cfg;
  const Mdp mdp = build_gridworld(cfg);
  auto s = [&](const char* name) { return mdp.state_index(name); };
  const int right = mdp.action_index("Right");
  const int down = mdp.action_index("Down");
  // 0_0 -> 0_1 -> 1_1 -> 1_2 (fire, absorbing)
  const Path tau({{s("0_0"), right},
                  {s("0_1"), down},
                  {s("1_1"), right},
                  {s("1_2"), down},
                  {s("1_2"), down}});
  const StateOracle oracle = [&](const Path& prefix, const StateFormula& f) {
    return eval_propositional(mdp, prefix, f);
  };
  auto holds = [&](const char* text, int pos) {
    return eval_path_formula(oracle, tau, pos,
                             parse_formula(std::string("P=?[") + text + "]")
                                 ->path);
  };
  CHECK(holds("F[0,4] \"unsafe\"", 1));
  CHECK(!holds("F[0,2] \"unsafe\"", 1));
  CHECK(holds("F[0,2] \"unsafe\"", 2));
  CHECK(holds("G[0,2] !\"unsafe\"", 1));
  CHECK(!holds("G[0,3] !\"unsafe\"", 1));
  CHECK(holds("X X X \"unsafe\"", 1));
  CHECK(holds("!\"unsafe\" U[0,3] \"unsafe\"", 1));
  CHECK(!holds("!\"unsafe\" U[0,4] \"target\"", 1));
  CHECK(holds("true U[3,4] \"unsafe\"", 1));
  CHECK(holds("\"unsafe\" -> \"target\"", 1));  // vacuous at 0_0

  CHECK_THROWS_AS(holds("F[0,9] \"target\"", 1), HorizonError);
  CHECK_THROWS_AS(
      eval_path_formula(oracle, tau, 0, parse_formula("P=?[true]")->path),
      Error);
}

TEST_CASE("propositional oracle rejects probabilistic nodes") {
  const GridConfig cfg;
  const Mdp mdp = build_gridworld(cfg);
  const Path prefix({{0, 0}});
  CHECK(eval_propositional(mdp, prefix, *parse_formula("true")));
  CHECK(!eval_propositional(mdp, prefix, *parse_formula("!true")));
  CHECK_THROWS_AS(
      eval_propositional(mdp, prefix, *parse_formula("P>0.5[ \"a\" ]")),
      Error);
}

TEST_CASE("structural equality distinguishes near-identical trees") {
  CHECK(formula_equal(parse_formula("\"a\" & \"b\""),
                      parse_formula("\"a\" & \"b\"")));
  CHECK(!formula_equal(parse_formula("\"a\" & \"b\""),
                       parse_formula("\"b\" & \"a\"")));
  CHECK(!formula_equal(parse_formula("P>0.5[ \"a\" ]"),
                       parse_formula("P>=0.5[ \"a\" ]")));
  CHECK(!formula_equal(parse_formula("[pi<-x]@1.P=?[ \"a\" ]"),
                       parse_formula("[pi<-x]@2.P=?[ \"a\" ]")));
}
