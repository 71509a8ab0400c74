/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include "aggline/errors.hpp"
#include "aggline/predicate_expr.hpp"

using namespace aggline;

TEST(PredicateExpr, TrueIsEmptyConjunction) {
    EXPECT_TRUE(parse_predicate("true").clauses.empty());
    EXPECT_TRUE(parse_predicate("  TRUE ").clauses.empty());
}

TEST(PredicateExpr, Comparators) {
    const auto p = parse_predicate("Sal = 10 AND Sal != 20 and A < 1 AND B <= 2 AND C > 3 AND D >= 4e2");
    ASSERT_EQ(p.clauses.size(), 6u);
    EXPECT_EQ(p.clauses[0].op, Comparator::eq);
    EXPECT_EQ(p.clauses[1].op, Comparator::ne);
    EXPECT_EQ(p.clauses[2].op, Comparator::lt);
    EXPECT_EQ(p.clauses[3].op, Comparator::le);
    EXPECT_EQ(p.clauses[4].op, Comparator::gt);
    EXPECT_EQ(p.clauses[5].op, Comparator::ge);
    EXPECT_EQ(std::get<double>(p.clauses[5].operands[0]), 400.0);
}

TEST(PredicateExpr, InAndBetween) {
    const auto p = parse_predicate("Department IN ('Toys', \"Sales\", Engineering) AND HireYear BETWEEN 2005 AND 2007");
    ASSERT_EQ(p.clauses.size(), 2u);
    EXPECT_EQ(p.clauses[0].op, Comparator::in_set);
    EXPECT_EQ(p.clauses[0].operands,
              (std::vector<Value>{std::string("Toys"), std::string("Sales"), std::string("Engineering")}));
    EXPECT_EQ(p.clauses[1].op, Comparator::in_range);
    EXPECT_EQ(p.clauses[1].operands, (std::vector<Value>{2005.0, 2007.0}));
}

TEST(PredicateExpr, RoundTripsThroughToString) {
    const auto p = parse_predicate("HireYear <= 2009 AND Department IN ('Toys', 'It''s') AND Sal BETWEEN 1e6 AND 1e9");
    EXPECT_EQ(parse_predicate(to_string(p)), p);
    EXPECT_EQ(std::get<std::string>(p.clauses[1].operands[1]), "It's");
}

TEST(PredicateExpr, ErrorPositions) {
    auto position = [](const char* text) -> std::size_t {
        try {
            parse_predicate(text);
        } catch (const ParseError& e) {
            return e.position();
        }
        return std::string::npos;
    };
    EXPECT_EQ(position("Sal ~ 3"), 4u);
    EXPECT_EQ(position("Sal = 3 AND"), 11u);
    EXPECT_EQ(position("Sal = 3 OR Sal = 4"), 8u);
    EXPECT_EQ(position("Sal IN (1, 2"), 12u);
    EXPECT_EQ(position("Dept = 'open"), 7u);
    EXPECT_EQ(position("= 3"), 0u);
    EXPECT_EQ(position("Sal BETWEEN 1 2"), 14u);
    EXPECT_EQ(position(""), 0u);
}
