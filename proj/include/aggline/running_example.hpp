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

#pragma once

#include <array>
#include <cstddef>

#include "aggline/relation.hpp"

namespace aggline::running_example {

/// One value block of the salaries population.
struct Block {
    double salary;
    std::size_t count;
    const char* department;
};

/// The five salary blocks, largest value first.
inline constexpr std::array<Block, 5> kBlocks{{
    {1e9, 100, "Executive"},
    {1e8, 1'000, "Engineering"},
    {1e7, 10'000, "Sales"},
    {1e6, 1'000'000, "Toys"},
    {10.0, 1'000, "Interns"},
}};

inline constexpr std::size_t kRows = 1'012'100;
inline constexpr std::size_t kBudget = 8852;
inline constexpr double kTotal = 1'300'000'010'000.0;
inline constexpr double kQ1Exact = 1.1e12;

/// Salaries(Sal, Department, HireYear), rows laid out block by block.
///
/// HireYear is assigned so that `HireYear <= 2009` selects exactly the
/// drill-down subset used throughout the examples: half of the 10^9 block,
/// half of the 10^7 block and the whole 10^6 block. The 10^8 and 10 blocks
/// are hired from 2010 on.
Relation make_relation();

/// HireYear <= 2009.
Predicate q1();

}  // namespace aggline::running_example
