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
#include <optional>
#include <vector>

#include "aggline/relation.hpp"
#include "aggline/sampler.hpp"

namespace aggline {

struct ApproxAnswer {
    SummaryKind kind = SummaryKind::lineage;
    double estimate = 0.0;
    /// Certified epsilon and epsilon * S; present for lineage sketches queried
    /// with guarantee parameters.
    std::optional<double> epsilon;
    std::optional<double> additive_bound;
    std::size_t matched_entries = 0;
    std::uint64_t matched_frequency_mass = 0;
    /// Sum of f_i * a_i over the matched entries, without any scaling.
    double sample_sum = 0.0;
    double total_sum = 0.0;
};

/// Approximate SUM of the sketch attribute over records matching `q`.
///
/// Lineage sketches answer matched_frequency_mass * S / b. Top-k summaries
/// answer the raw sum of matched values and uniform samples the
/// Horvitz-Thompson estimate sample_sum * n / b. Work is proportional to the
/// number of sketch entries. Throws PredicateError / UnknownAttributeError.
ApproxAnswer approx_sum(const LineageSketch& sketch, const Predicate& q,
                        const std::optional<GuaranteeParams>& g = std::nullopt);

/// Entry rows of the sketch matching `q` (the query's sub-lineage).
std::vector<std::size_t> matched_rows(const LineageSketch& sketch, const Predicate& q);

struct RelativeErrorReport {
    double rho = 0.0;             ///< query mass as a fraction of S
    double epsilon = 0.0;
    double relative_error = 0.0;  ///< epsilon / rho
    bool below_resolution = false;
};

/// Certified relative error epsilon / rho for a query of mass rho * S.
RelativeErrorReport relative_error(double epsilon, double rho);

/// Uses rho_hint when given, otherwise estimate / S. Throws ParameterError
/// when the answer carries no certified epsilon or the hint is outside (0, 1].
RelativeErrorReport relative_error_report(const ApproxAnswer& answer,
                                          std::optional<double> rho_hint = std::nullopt);

/// The b largest-valued records (ties by ascending id), each with frequency 1.
LineageSketch top_k_baseline(const Relation& rel, std::string_view attribute, std::uint64_t b);

/// b uniform draws with replacement.
LineageSketch uniform_baseline(const Relation& rel, std::string_view attribute, std::uint64_t b,
                               std::uint64_t seed);

}  // namespace aggline
