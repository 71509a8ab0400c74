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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggline/relation.hpp"
#include "aggline/sampler.hpp"

namespace aggline {

/// 2 exp(-2 eps^2 b): per-query probability that an estimate misses by more
/// than eps * S.
double hoeffding_ceiling(double epsilon, std::uint64_t b);

/// rate + sigmas * sqrt(rate (1 - rate) / trials), the largest empirical
/// violation rate tolerated for a true rate of `rate`.
double binomial_band(double rate, std::uint64_t trials, double sigmas = 3.0);

struct QueryErrorStats {
    std::string label;
    double exact = 0.0;
    double mean_estimate = 0.0;
    double stddev_estimate = 0.0;
    /// |Q' - Q| / S statistics.
    double mean_abs_error = 0.0;
    double max_abs_error = 0.0;
    std::uint64_t violations = 0;
    double violation_rate = 0.0;
    double allowed_rate = 0.0;
    bool within_band = true;
    /// |mean - Q| <= 4 * stddev / sqrt(trials).
    bool unbiased = true;
    std::vector<double> error_samples;
};

struct BlockStats {
    double value = 0.0;
    std::size_t records = 0;
    double expected_bag_mass = 0.0;
    double mean_bag_mass = 0.0;
    /// max(sample, binomial) standard error of the mean bag mass.
    double se_bag_mass = 0.0;
    double mean_distinct = 0.0;
    double se_distinct = 0.0;
    bool within_band = true;
};

struct ChiSquareResult {
    std::string label;
    double statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;
    bool rejected(double alpha) const noexcept { return p_value < alpha; }
};

struct ValidationReport {
    std::uint64_t trials = 0;
    std::uint64_t budget = 0;
    double epsilon = 0.0;
    double hoeffding_ceiling = 0.0;
    /// Set when trials < 100.
    bool low_power = false;
    std::vector<QueryErrorStats> queries;
    /// Trials in which at least one query missed by more than eps * S.
    std::uint64_t union_violations = 0;
    double union_violation_rate = 0.0;
    std::optional<double> p;
    std::vector<BlockStats> blocks;
    std::vector<ChiSquareResult> chi_square;

    /// True when every query, block and union check lies inside its band.
    bool passed() const;
};

struct BoundCheckOptions {
    double epsilon = 0.1;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;
    /// When set, the union violation rate is compared with p.
    std::optional<double> p;
    bool keep_samples = false;
};

/// Rebuilds the sketch `trials` times from derived seeds and compares every
/// query's approximate answer with its exact answer. Queries must be fixed
/// independently of any sketch.
ValidationReport run_bound_check(const Relation& rel, std::string_view attribute, std::uint64_t b,
                                 std::span<const Predicate> queries, const BoundCheckOptions& options);

/// Exact sums of all 2^n subsets of a relation, indexed by bit mask over row
/// positions. Brute force by design. Throws ParameterError when n > 20.
std::vector<double> oracle_exhaustive_sum(const Relation& rel, std::string_view attribute);

/// run_bound_check over every subset query of a relation with n <= 20, with
/// exact answers taken from oracle_exhaustive_sum.
ValidationReport run_exhaustive_bound_check(const Relation& rel, std::string_view attribute,
                                            std::uint64_t b, const BoundCheckOptions& options);

/// Mean (over trials) bag mass and distinct count of every value block.
std::vector<BlockStats> replicate_blocks(const Relation& rel, std::string_view attribute,
                                         std::uint64_t b, std::uint64_t trials, std::uint64_t seed);

/// replicate_blocks on the running-example salaries.
std::vector<BlockStats> replicate_running_example(std::uint64_t b, std::uint64_t trials, std::uint64_t seed);

ChiSquareResult chi_square_goodness_of_fit(std::span<const std::uint64_t> observed,
                                           std::span<const double> probabilities);
/// Two-sample homogeneity test on a 2 x k contingency table; categories empty
/// in both samples are dropped.
ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b);

/// Per-record selection counts of `builds` single-trial builds.
std::vector<std::uint64_t> selection_counts_in_memory(const Relation& rel, std::string_view attribute,
                                                      std::uint64_t builds, std::uint64_t seed);
std::vector<std::uint64_t> selection_counts_streaming(const Relation& rel, std::string_view attribute,
                                                      std::uint64_t builds, std::uint64_t seed);

/// Homogeneity test between in-memory and streaming selection counts.
ChiSquareResult builder_equivalence(const Relation& rel, std::string_view attribute,
                                    std::uint64_t builds, std::uint64_t seed);

void write_report_csv(const ValidationReport& report, std::ostream& sink);
void write_report_summary(const ValidationReport& report, std::ostream& sink);

}  // namespace aggline
