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

#include <sstream>

#include "aggline/csv.hpp"
#include "aggline/errors.hpp"
#include "aggline/running_example.hpp"
#include "test_util.hpp"

using namespace aggline;

namespace {

Relation ingest(const std::string& text, const SchemaHints& hints = {}) {
    std::istringstream in(text);
    return ingest_csv(in, hints);
}

}  // namespace

TEST(Csv, ThreeRows) {
    const auto rel = ingest("Sal,Dept\n10,a\n20,b\n30,a\n");
    EXPECT_EQ(rel.size(), 3u);
    EXPECT_EQ(rel.total("Sal"), 60.0);
    EXPECT_EQ(rel.schema()[1].kind, AttributeKind::categorical);
    EXPECT_EQ(rel.table().ids(), (std::vector<RecordId>{0, 1, 2}));
}

TEST(Csv, NegativeValueNamesRow) {
    try {
        ingest("Sal,Dept\n10,a\n-5,b\n");
        FAIL() << "expected IngestError";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("Sal"), std::string::npos);
    }
}

TEST(Csv, MalformedRowNamesRow) {
    try {
        ingest("Sal,Dept\n10,a\n20\n");
        FAIL() << "expected IngestError";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.row(), 2u);
    }
    try {
        ingest("Sal,Dept\n10,a\nabc,b\n");
        FAIL() << "expected IngestError";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.row(), 2u);
    }
}

TEST(Csv, EmptyInput) {
    EXPECT_THROW(ingest(""), IngestError);
    EXPECT_THROW(ingest("Sal,Dept\n"), IngestError);
}

TEST(Csv, QuotingCrlfAndHints) {
    const auto rel = ingest("Zip,Name,Sal\r\n02139,\"Smith, \"\"J\"\"\",5\r\n10001,Doe,7\r\n",
                            {{"Zip", AttributeKind::categorical}});
    EXPECT_EQ(rel.schema()[0].kind, AttributeKind::categorical);
    EXPECT_EQ(std::get<std::string>(rel.table().value(0, 0)), "02139");
    EXPECT_EQ(std::get<std::string>(rel.table().value(0, 1)), "Smith, \"J\"");
    EXPECT_EQ(rel.total("Sal"), 12.0);
}

TEST(Csv, ReservedAndDuplicateHeaders) {
    EXPECT_THROW(ingest("Fr,Sal\n1,2\n"), IngestError);
    EXPECT_THROW(ingest("Sal,Sal\n1,2\n"), IngestError);
}

TEST(Csv, RoundTripPreservesCountsTotalsAndMatches) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto rel = fixtures::random_relation(150, seed);
        std::ostringstream out;
        export_csv(rel, out);
        std::istringstream in(out.str());
        const auto back = ingest_csv(in);
        EXPECT_EQ(back.size(), rel.size());
        EXPECT_EQ(back.totals(), rel.totals());
        std::mt19937_64 rng(seed);
        for (int i = 0; i < 20; ++i) {
            const auto p = fixtures::random_predicate(rng);
            EXPECT_EQ(match_ids(back, p), match_ids(rel, p));
        }
    }
}

TEST(Csv, RunningExampleRoundTrip) {
    const auto rel = running_example::make_relation();
    std::stringstream buf;
    export_csv(rel, buf);
    const auto back = ingest_csv(buf);
    EXPECT_EQ(back.size(), 1'012'100u);
    EXPECT_EQ(back.total("Sal"), running_example::kTotal);
    EXPECT_EQ(exact_sum(back, "Sal", running_example::q1()), 1.1e12);
}
