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
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aggline/random.hpp"
#include "aggline/relation.hpp"

namespace aggline {

/// Guarantee requested from a sketch: any m oblivious SUM queries answered
/// within epsilon * S, all of them simultaneously with probability >= 1 - p.
struct GuaranteeParams {
    std::uint64_t m = 1;
    double p = 0.05;
    double epsilon = 0.1;

    /// Throws ParameterError.
    void validate() const;
};

/// Number of sampling trials b = ceil(ln(2m/p) / (2 eps^2)).
std::uint64_t compute_budget(const GuaranteeParams& g);

/// Smallest epsilon certified by b trials for (m, p): sqrt(ln(2m/p) / (2b)).
/// The result satisfies compute_budget({m, p, result}) <= b.
double error_for_budget(std::uint64_t b, std::uint64_t m, double p);

/// How a summary's entries turn into answers.
enum class SummaryKind : std::uint8_t {
    lineage = 0,  ///< value-weighted sample, answers scaled by S/b
    top_k = 1,    ///< the b largest records, answers are raw sums
    uniform = 2,  ///< uniform sample with replacement, Horvitz-Thompson answers
};

std::string_view to_string(SummaryKind kind) noexcept;

/// Aggregate lineage of one numeric attribute: sampled records with their
/// selection frequency. The entry table keeps the source schema and the
/// source record ids; `frequencies[i]` belongs to row i of `entries`.
struct LineageSketch {
    SummaryKind kind = SummaryKind::lineage;
    std::string attribute;
    double total_sum = 0.0;
    std::uint64_t budget = 0;
    std::uint64_t seed = 0;
    std::uint64_t source_n = 0;
    Table entries;
    std::vector<std::uint64_t> frequencies;

    std::size_t size() const noexcept { return frequencies.size(); }
    std::uint64_t frequency_sum() const noexcept;
    /// S / b.
    double scale() const noexcept { return total_sum / static_cast<double>(budget); }

    friend bool operator==(const LineageSketch&, const LineageSketch&) = default;
};

/// First violated sketch invariant, or nullopt when the sketch is well formed.
std::optional<std::string> check_invariants(const LineageSketch& sketch);

/// Inverse-CDF sampler over nonnegative weights. Zero weights are never drawn.
class WeightedSampler {
public:
    /// Throws DegenerateRelationError when all weights are zero and
    /// ParameterError on negative or non-finite weights.
    explicit WeightedSampler(std::span<const double> weights);
    /// Takes ownership of running prefix sums of the weights.
    static WeightedSampler from_prefix_sums(std::vector<double> prefix);

    std::size_t size() const noexcept { return prefix_.size(); }
    double total() const noexcept { return prefix_.empty() ? 0.0 : prefix_.back(); }

    template <typename Rng>
    std::size_t operator()(Rng& rng) const {
        return locate(uniform_unit(rng) * prefix_.back());
    }

private:
    WeightedSampler() = default;
    void finish();
    std::size_t locate(double target) const noexcept;

    std::vector<double> prefix_;
    std::size_t last_positive_ = 0;
};

/// Prepared in-memory builder for one (relation, attribute). Repeated builds
/// reuse the cumulative weight array.
class LineageBuilder {
public:
    /// Throws UnknownAttributeError, PredicateError (categorical attribute)
    /// and DegenerateRelationError (S = 0).
    LineageBuilder(const Relation& rel, std::string attribute);
    LineageBuilder(const Relation& rel, std::string attribute, WeightedSampler sampler);

    /// b independent trials, each selecting record t with probability t[A]/S.
    LineageSketch build(std::uint64_t b, std::uint64_t seed) const;

    /// Row index chosen by each of the b trials, in trial order.
    std::vector<std::size_t> draw(std::uint64_t b, std::uint64_t seed) const;

    const Relation& relation() const noexcept { return *rel_; }
    const std::string& attribute() const noexcept { return attribute_; }

private:
    const Relation* rel_;
    std::string attribute_;
    WeightedSampler sampler_;
};

LineageSketch build_lineage(const Relation& rel, std::string_view attribute, std::uint64_t b,
                            std::uint64_t seed);

/// Collapses row selections (with repeats) into a sketch of distinct rows,
/// ordered by row position.
LineageSketch sketch_from_selections(const Table& source, std::span<const std::size_t> rows,
                                     SummaryKind kind, std::string attribute, double total_sum,
                                     std::uint64_t budget, std::uint64_t seed);

/// One-pass builder: b independent single-slot weighted reservoirs. Each slot
/// keeps the record with the largest key log(u)/w, u ~ U(0,1); working memory
/// is O(b) however long the stream is.
class StreamingLineageBuilder {
public:
    StreamingLineageBuilder(std::vector<Attribute> schema, std::string attribute,
                            std::uint64_t b, std::uint64_t seed);

    /// Values follow the schema order. Throws ParameterError on a negative
    /// or non-finite weight.
    void add(RecordId id, std::span<const Value> values);
    void add(const Table& table, std::size_t row);

    std::uint64_t seen() const noexcept { return seen_; }
    /// Candidates currently retained; bounded by 2b + 1.
    std::size_t retained() const noexcept { return held_.rows(); }

    /// Throws DegenerateRelationError when no positive weight was seen.
    LineageSketch finish();

private:
    struct Slot {
        double key;
        std::size_t holder;  // row in held_, npos when empty
    };

    void compact();

    std::string attribute_;
    std::size_t weight_column_;
    std::uint64_t budget_;
    std::uint64_t seed_;
    std::vector<SplitMix64> rngs_;
    std::vector<Slot> slots_;
    Table held_;
    std::vector<std::uint64_t> refcount_;
    std::size_t garbage_ = 0;
    std::uint64_t seen_ = 0;
    CompensatedSum total_;
};

/// Streams every row of `table` through a StreamingLineageBuilder.
LineageSketch build_lineage_streaming(const Table& table, std::string_view attribute,
                                      std::uint64_t b, std::uint64_t seed);

struct MultiLineageResult {
    std::map<std::string, LineageSketch> sketches;
    /// Attribute -> reason, for attributes that could not be sketched.
    std::map<std::string, std::string> failures;
};

/// One pass over the relation feeding one builder per attribute. The sketch
/// for attribute A equals build_lineage(rel, A, b, derive_seed(seed, A)).
MultiLineageResult build_multi_lineage(const Relation& rel, std::span<const std::string> attributes,
                                       std::uint64_t b, std::uint64_t seed);

}  // namespace aggline
