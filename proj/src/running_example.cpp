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

#include "aggline/running_example.hpp"

namespace aggline::running_example {

namespace {

double hire_year(std::size_t block, std::size_t i) {
    switch (block) {
        case 0:
        case 2: return 2000.0 + static_cast<double>(i % 20);  // half before 2010
        case 1: return 2010.0 + static_cast<double>(i % 10);
        case 3: return 2000.0 + static_cast<double>(i % 10);
        default: return 2015.0 + static_cast<double>(i % 5);
    }
}

}  // namespace

Relation make_relation() {
    Table table({{"Sal", AttributeKind::numeric},
                 {"Department", AttributeKind::categorical},
                 {"HireYear", AttributeKind::numeric}});
    auto& sal = std::get<NumericColumn>(table.mutable_column(0)).values;
    auto& dept = std::get<CategoricalColumn>(table.mutable_column(1));
    auto& year = std::get<NumericColumn>(table.mutable_column(2)).values;
    auto& ids = table.mutable_ids();
    sal.reserve(kRows);
    dept.codes().reserve(kRows);
    year.reserve(kRows);
    ids.reserve(kRows);

    RecordId next = 0;
    for (std::size_t b = 0; b < kBlocks.size(); ++b) {
        const auto code = dept.intern(kBlocks[b].department);
        for (std::size_t i = 0; i < kBlocks[b].count; ++i) {
            sal.push_back(kBlocks[b].salary);
            dept.codes().push_back(code);
            year.push_back(hire_year(b, i));
            ids.push_back(next++);
        }
    }
    return Relation("Salaries", std::move(table));
}

Predicate q1() {
    return Predicate{}.where("HireYear", Comparator::le, 2009.0);
}

}  // namespace aggline::running_example
