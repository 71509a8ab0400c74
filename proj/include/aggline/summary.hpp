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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "aggline/relation.hpp"
#include "aggline/sampler.hpp"

namespace aggline {

inline constexpr std::size_t kDefaultSummaryCount = 3;

/// k independently seeded sketches of one attribute, scored against
/// benchmark queries with known exact answers.
struct SummarySet {
    std::vector<LineageSketch> sketches;
    std::vector<Predicate> benchmark_queries;
    std::vector<double> benchmark_exact;
    /// Euclidean distance between the S-normalized approximate and exact
    /// benchmark answer vectors, one per sketch.
    std::vector<double> scores;
};

/// Whole-sum plus, for every categorical attribute, an equality predicate on
/// its value with the largest exact mass.
std::vector<Predicate> default_benchmarks(const Relation& rel, std::string_view attribute);

/// Builds k >= 3 sketches from derived seeds. Benchmark exact answers and the
/// sampling distribution come out of the same pass over the relation.
/// Throws ParameterError (k < 3, empty benchmarks) and DegenerateRelationError.
SummarySet build_summary_set(const Relation& rel, std::string_view attribute, std::uint64_t b,
                             std::size_t k, std::vector<Predicate> benchmarks, std::uint64_t seed);

/// Same as build_summary_set but without the k >= 3 requirement; used when
/// selection is skipped.
SummarySet build_sketches(const Relation& rel, std::string_view attribute, std::uint64_t b,
                          std::size_t k, std::vector<Predicate> benchmarks, std::uint64_t seed);

double score_sketch(const LineageSketch& sketch, std::span<const Predicate> benchmarks,
                    std::span<const double> exact);

struct SelectionResult {
    std::size_t discarded;
    std::size_t kept;
};

/// Discards the maximum score (ties: highest index) and keeps the lowest
/// remaining score (ties: lowest index). Throws ParameterError on fewer than
/// two scores.
SelectionResult select_index(std::span<const double> scores);

LineageSketch select_summary(const SummarySet& set);

// Sketch file format (extension .agl):
//
//   "AGGLINE-SKETCH <version> kind=.. attribute=.. S=.. b=.. seed=.. n=.. entries=..\n"
//   binary payload, little endian:
//     "AGLS" u8 version u8 kind
//     str attribute  f64 S  u64 b  u64 seed  u64 source_n  u64 entries
//     u32 attribute count, then per attribute: u8 kind, str name
//     u64 ids[entries]  u64 frequencies[entries]
//     per column: f64 values[entries]
//              or u32 dictionary size, str words..., u32 codes[entries]
//     u32 CRC-32 of the payload bytes before it
//   where str is a u32 byte length followed by the bytes.
inline constexpr std::uint8_t kSketchFormatVersion = 1;
inline constexpr std::string_view kSketchFileMagic = "AGGLINE-SKETCH";
inline constexpr std::string_view kSketchPayloadMagic = "AGLS";

void save_sketch(const LineageSketch& sketch, std::ostream& sink);
/// Throws VersionError and CorruptionError (bad checksum, truncation,
/// violated sketch invariants such as sum of frequencies != b).
LineageSketch load_sketch(std::istream& source);

}  // namespace aggline
