#include <gtest/gtest.h>

#include <thread>

#include "prax/regex.hpp"
#include "support/regex_oracle.hpp"

namespace prax {
namespace {

using regex::CharClass;
using regex::Node;
using regex::NodeKind;

RegexProgram P(std::string_view s) { return RegexProgram::parse(s); }

TEST(Parse, ConcatOfQuantifiedLiterals) {
  const Node expected = Node::nary(NodeKind::Concat, {Node::unary(NodeKind::Plus, Node::literal('a')),
                                                      Node::unary(NodeKind::Star, Node::literal('b'))});
  EXPECT_EQ(P("a+b*").ast(), expected);
  EXPECT_EQ(P("a+b*").size(), 4u);
}

TEST(Parse, SingleLiteral) {
  EXPECT_EQ(P("a").ast(), Node::literal('a'));
  EXPECT_EQ(P("a").size(), 1u);
}

TEST(Parse, OptionalGroupedAlternation) {
  const Node expected = Node::unary(
      NodeKind::Opt, Node::nary(NodeKind::Alt, {Node::repeat(Node::char_class(CharClass::Digit), 2, 2), Node::literal('x')}));
  const auto p = P("(\\d{2}|x)?");
  EXPECT_EQ(p.ast(), expected);
  EXPECT_EQ(p.text(), "(\\d{2}|x)?");
}

TEST(Parse, CanonicalRenderingDropsRedundantGroups) {
  EXPECT_EQ(P("((a))").text(), "a");
  EXPECT_EQ(P("(ab)(c)").text(), "abc");
  EXPECT_EQ(P("(a|(b|c))").text(), "a|b|c");
  EXPECT_EQ(P("a{2,2}").text(), "a{2}");
  EXPECT_EQ(P("((a*))*").text(), "(a*)*");
  EXPECT_EQ(P("(a|b)c").text(), "(a|b)c");
  EXPECT_EQ(P("\\.\\d").text(), "\\.\\d");
  EXPECT_EQ(P("((a))").size(), 1u);
}

TEST(Parse, SyntaxErrorsCarryOffsets) {
  auto offset_of = [](std::string_view s) -> std::size_t {
    try {
      (void)RegexProgram::parse(s);
    } catch (const regex::SyntaxError& e) {
      return e.offset();
    }
    return std::string::npos;
  };
  EXPECT_EQ(offset_of("(ab"), 0u);
  EXPECT_EQ(offset_of("ab)"), 2u);
  EXPECT_EQ(offset_of("*a"), 0u);
  EXPECT_EQ(offset_of("a**"), 2u);
  EXPECT_EQ(offset_of("a|"), 2u);
  EXPECT_EQ(offset_of("a{0}"), 1u);
  EXPECT_EQ(offset_of("a{3,2}"), 1u);
  EXPECT_EQ(offset_of("a{10}"), 1u);
  EXPECT_EQ(offset_of("ab\\"), 2u);
  EXPECT_EQ(offset_of("()"), 1u);
  EXPECT_THROW((void)RegexProgram::parse(""), regex::SyntaxError);
}

TEST(Parse, UnsupportedConstructs) {
  EXPECT_THROW((void)RegexProgram::parse("a&b"), regex::UnsupportedConstruct);
  EXPECT_THROW((void)RegexProgram::parse("(?=a)b"), regex::UnsupportedConstruct);
  EXPECT_THROW((void)RegexProgram::parse("^a"), regex::UnsupportedConstruct);
  EXPECT_THROW((void)RegexProgram::parse("[ab]"), regex::UnsupportedConstruct);
  EXPECT_THROW((void)RegexProgram::parse("(a)\\1"), regex::UnsupportedConstruct);
}

TEST(Parse, RoundTripOverGeneratedTrees) {
  Rng rng(11);
  testing::TreeGenOptions opt;
  opt.literals = "ab.(|x";
  opt.classes = {CharClass::Digit, CharClass::Any, CharClass::Letter, CharClass::Space};
  opt.max_repeat = 9;
  for (int i = 0; i < 2000; ++i) {
    const Node t = testing::random_tree(rng, opt);
    const std::string text = regex::render(t);
    const Node back = regex::parse_ast(text);
    ASSERT_EQ(back, t) << text;
    ASSERT_EQ(regex::render(back), text);
  }
}

TEST(Matches, Examples) {
  EXPECT_TRUE(P("a+b*").matches("ab"));
  EXPECT_FALSE(P("a+b*").matches(""));
  EXPECT_FALSE(P("a*b+c?").matches("aa"));
  EXPECT_TRUE(P("a*b+c?").matches("bc"));
  EXPECT_FALSE(P("a+b*").matches("xab"));  // anchored
  EXPECT_TRUE(P("\\d{2}-\\d").matches("12-3"));
  EXPECT_FALSE(P(".*").matches("a\tb"));   // outside the alphabet
  EXPECT_TRUE(P("\\s\\a\\w\\u\\l").matches(" zZ9Aq") == false);
  EXPECT_TRUE(P("\\s\\a\\w\\u\\l").matches(" z9Aq"));
}

TEST(Matches, AgreesWithTreeSimulationOracle) {
  Rng rng(3);
  testing::TreeGenOptions opt;
  opt.literals = "abc";
  opt.classes = {CharClass::Any, CharClass::Lower};
  int positives = 0;
  for (int i = 0; i < 1000; ++i) {
    const Node t = testing::random_tree(rng, opt);
    const RegexProgram p(t);
    std::string s;
    const auto len = rng.below(9);
    for (std::size_t k = 0; k < len; ++k) s.push_back("abcZ"[rng.below(4)]);
    const bool expected = testing::oracle_matches(t, s);
    positives += expected;
    ASSERT_EQ(p.matches(s), expected) << p.text() << " on '" << s << "'";
  }
  EXPECT_GT(positives, 50);
}

TEST(Dfa, IsMinimalAndTotal) {
  // start, a-loop (accepting), b-loop (accepting), sink
  EXPECT_EQ(P("a+b*").dfa().num_states(), 4);
  EXPECT_EQ(P(".*").dfa().num_states(), 1);
  EXPECT_EQ(P("a{3}").dfa().num_states(), 5);
  EXPECT_EQ(P("(a|b)*").dfa(), P("(a*b*)*").dfa());
}

TEST(Dfa, ConcurrentFirstAccessCompilesOnce) {
  const RegexProgram p = P("(ab|c){2,5}d*");
  std::vector<const regex::Dfa*> seen(8);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < seen.size(); ++i) threads.emplace_back([&, i] { seen[i] = &p.dfa(); });
  for (auto& t : threads) t.join();
  for (auto* d : seen) EXPECT_EQ(d, seen.front());
}

TEST(Consistency, Examples) {
  EXPECT_TRUE(is_consistent(P("a+b*"), Example{"ab", true}));
  EXPECT_FALSE(is_consistent(P("a+b*"), Example{"ab", false}));
  EXPECT_FALSE(is_consistent(P("a*b+c?"), Example{"aa", true}));
}

TEST(SemanticEquality, Examples) {
  EXPECT_TRUE(semantically_equal(P("a+"), P("aa*")));
  EXPECT_TRUE(semantically_equal(P("a+b*"), P("a+b*")));
  EXPECT_FALSE(semantically_equal(P("a+b*"), P("a*b+c?")));
  // witness
  EXPECT_TRUE(P("a+b*").matches("a"));
  EXPECT_FALSE(P("a*b+c?").matches("a"));
}

TEST(SemanticEquality, AgreesWithEnumerationOracle) {
  Rng rng(5);
  testing::TreeGenOptions opt;
  opt.literals = "ab";
  opt.classes = {CharClass::Any};
  opt.max_depth = 2;
  int equal_pairs = 0;
  for (int i = 0; i < 1000; ++i) {
    const Node a = testing::random_tree(rng, opt);
    const Node b = i % 3 == 0 ? testing::equivalent_rewrite(a, rng) : testing::random_tree(rng, opt);
    const bool expected = testing::oracle_equal_upto(a, b, "abz", 8);
    const bool got = semantically_equal(RegexProgram(a), RegexProgram(b));
    equal_pairs += got;
    ASSERT_EQ(got, expected) << regex::render(a) << " vs " << regex::render(b);
  }
  EXPECT_GT(equal_pairs, 300);
}

TEST(EditDistance, Examples) {
  EXPECT_EQ(token_edit_distance(P("a+b*"), P("a+b*")), 0u);
  EXPECT_EQ(token_edit_distance(P("a+b*"), P("a+b*c?")), 2u);
  EXPECT_EQ(token_edit_distance(P("a+b*"), P("a+b+")), 1u);
  EXPECT_EQ(token_edit_distance(P("a{2}"), P("a{3}")), 1u);
}

TEST(EditDistance, IsAMetricAndMatchesRecursiveOracle) {
  Rng rng(9);
  testing::TreeGenOptions opt;
  opt.literals = "abc";
  for (int i = 0; i < 300; ++i) {
    const RegexProgram a(testing::random_tree(rng, opt)), b(testing::random_tree(rng, opt)), c(testing::random_tree(rng, opt));
    const auto ab = token_edit_distance(a, b), ba = token_edit_distance(b, a);
    ASSERT_EQ(ab, ba);
    ASSERT_EQ(ab, testing::oracle_edit_distance(a.tokens(), b.tokens()));
    ASSERT_EQ(ab == 0, a.tokens() == b.tokens());
    ASSERT_LE(token_edit_distance(a, c), ab + token_edit_distance(b, c));
  }
}

TEST(ConsistencyMatrixTest, Examples) {
  const auto m = consistency_matrix({P("a+b*"), P("a*b+c?")}, {{"ab", true}, {"aa", true}});
  EXPECT_EQ(m.to_rows(), (std::vector<std::vector<int>>{{1, 1}, {1, 0}}));
  EXPECT_EQ(consistency_matrix({P("a")}, {{"a", true}}).to_rows(), (std::vector<std::vector<int>>{{1}}));
  EXPECT_EQ(consistency_matrix({P("a"), P("b")}, {{"a", true}, {"a", false}}).to_rows(),
            (std::vector<std::vector<int>>{{1, 0}, {0, 1}}));
}

TEST(ConsistencyMatrixTest, EveryCellMatchesIsConsistent) {
  std::vector<RegexProgram> programs{P("a"), P("a*"), P("(a|b)+"), P("b?a"), P(".")};
  std::vector<Example> examples;
  testing::for_each_string("ab", 3, [&](const std::string& s) {
    examples.push_back({s, true});
    examples.push_back({s, false});
  });
  const auto m = consistency_matrix(programs, examples);
  for (std::size_t e = 0; e < m.rows(); ++e)
    for (std::size_t p = 0; p < m.cols(); ++p) ASSERT_EQ(m(e, p), is_consistent(programs[p], examples[e]));
}

TEST(ConsistencyMatrixTest, RejectsDuplicatesAndEmpty) {
  EXPECT_THROW(consistency_matrix({P("a"), P("(a)")}, {{"a", true}}), std::invalid_argument);
  EXPECT_THROW(consistency_matrix({P("a")}, {{"a", true}, {"a", true}}), std::invalid_argument);
  EXPECT_THROW(consistency_matrix({}, {{"a", true}}), std::invalid_argument);
}

TEST(SpecificationTest, RejectsDuplicateAndContradiction) {
  Specification s{{"ab", true}};
  EXPECT_THROW(s.push_back({"ab", true}), SpecificationError);
  EXPECT_THROW(s.push_back({"ab", false}), SpecificationError);
  s.push_back({"b", false});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s.prefix(1).size(), 1u);
}

}  // namespace
}  // namespace prax
