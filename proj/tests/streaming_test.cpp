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

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "aggline/errors.hpp"
#include "aggline/sampler.hpp"
#include "test_util.hpp"

using namespace aggline;

TEST(Streaming, InvariantsAndDeterminism) {
    const auto rel = fixtures::random_relation(2000, 12);
    for (std::uint64_t b : {1ull, 5ull, 64ull, 3000ull}) {
        const auto sk = build_lineage_streaming(rel.table(), "Sal", b, 7);
        EXPECT_EQ(check_invariants(sk), std::nullopt);
        EXPECT_EQ(sk.frequency_sum(), b);
        EXPECT_EQ(sk.source_n, rel.size());
        EXPECT_DOUBLE_EQ(sk.total_sum, rel.total("Sal"));
        EXPECT_EQ(sk, build_lineage_streaming(rel.table(), "Sal", b, 7));
    }
}

TEST(Streaming, WorkingSetStaysBounded) {
    const auto rel = fixtures::random_relation(20000, 5);
    const std::uint64_t b = 40;
    StreamingLineageBuilder builder(rel.schema(), "Sal", b, 3);
    std::size_t peak = 0;
    for (std::size_t r = 0; r < rel.size(); ++r) {
        builder.add(rel.table(), r);
        peak = std::max(peak, builder.retained());
    }
    EXPECT_LE(peak, 2 * b + 1);
    EXPECT_EQ(builder.seen(), rel.size());
    EXPECT_EQ(check_invariants(builder.finish()), std::nullopt);
}

TEST(Streaming, ZeroWeightsAndDegenerate) {
    const auto rel = fixtures::make_relation({0, 9, 0, 1, 0});
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto sk = build_lineage_streaming(rel.table(), "Sal", 16, seed);
        for (auto id : sk.entries.ids()) EXPECT_TRUE(id == 1 || id == 3);
    }
    const auto zeros = fixtures::make_relation({0, 0, 0});
    EXPECT_THROW(build_lineage_streaming(zeros.table(), "Sal", 4, 1), DegenerateRelationError);
    StreamingLineageBuilder empty(zeros.schema(), "Sal", 4, 1);
    EXPECT_THROW(empty.finish(), DegenerateRelationError);
}

TEST(Streaming, RejectsNegativeWeightsAndBadSchema) {
    StreamingLineageBuilder b({{"Sal", AttributeKind::numeric}}, "Sal", 4, 1);
    EXPECT_THROW(b.add(0, std::vector<Value>{-1.0}), ParameterError);
    EXPECT_THROW(StreamingLineageBuilder({{"Sal", AttributeKind::numeric}}, "X", 4, 1),
                 UnknownAttributeError);
    EXPECT_THROW(StreamingLineageBuilder({{"Sal", AttributeKind::numeric}}, "Sal", 0, 1),
                 ParameterError);
}

TEST(Streaming, SlotMarginalsFollowWeights) {
    // Each slot is an independent weighted draw; pool all slots of many builds.
    const auto rel = fixtures::make_relation({1, 2, 3, 4, 0, 10});
    std::vector<double> counts(rel.size());
    const std::uint64_t b = 50;
    std::uint64_t total = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        const auto sk = build_lineage_streaming(rel.table(), "Sal", b, seed);
        for (std::size_t i = 0; i < sk.size(); ++i) counts[sk.entries.ids()[i]] += sk.frequencies[i];
        total += b;
    }
    EXPECT_EQ(counts[4], 0.0);
    double stat = 0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
        const double w = std::get<double>(rel.table().value(i, 0));
        if (w == 0) continue;
        const double e = static_cast<double>(total) * w / 20.0;
        stat += (counts[i] - e) * (counts[i] - e) / e;
    }
    boost::math::chi_squared dist(4);
    EXPECT_GT(boost::math::cdf(boost::math::complement(dist, stat)), 1e-4);
}

TEST(Streaming, ArbitraryIdsPreserved) {
    Table t({{"Sal", AttributeKind::numeric}, {"Tag", AttributeKind::categorical}});
    t.append(900, std::vector<Value>{5.0, std::string("x")});
    t.append(17, std::vector<Value>{5.0, std::string("y")});
    const auto sk = build_lineage_streaming(t, "Sal", 200, 2);
    EXPECT_EQ(sk.size(), 2u);
    for (std::size_t i = 0; i < sk.size(); ++i) {
        const auto tag = std::get<std::string>(sk.entries.value(i, 1));
        EXPECT_EQ(tag, sk.entries.ids()[i] == 900 ? "x" : "y");
    }
}
