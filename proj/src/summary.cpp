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

#include "aggline/summary.hpp"

#include <cmath>

#include "aggline/approx_query.hpp"
#include "aggline/errors.hpp"

namespace aggline {

std::vector<Predicate> default_benchmarks(const Relation& rel, std::string_view attribute) {
    std::vector<Predicate> out{Predicate::always()};
    const auto values = rel.table().numeric(attribute);
    const auto& schema = rel.schema();
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema[c].kind != AttributeKind::categorical) continue;
        const auto& cat = std::get<CategoricalColumn>(rel.table().column(c));
        std::vector<CompensatedSum> mass(cat.dictionary().size());
        for (std::size_t r = 0; r < values.size(); ++r) mass[cat.codes()[r]].add(values[r]);
        std::size_t best = 0;
        for (std::size_t i = 1; i < mass.size(); ++i) {
            if (mass[i].value() > mass[best].value()) best = i;
        }
        if (!mass.empty()) {
            out.push_back(Predicate{}.where(schema[c].name, Comparator::eq, cat.dictionary()[best]));
        }
    }
    return out;
}

double score_sketch(const LineageSketch& sketch, std::span<const Predicate> benchmarks,
                    std::span<const double> exact) {
    const double s = sketch.total_sum;
    double sq = 0.0;
    for (std::size_t i = 0; i < benchmarks.size(); ++i) {
        const double d = (approx_sum(sketch, benchmarks[i]).estimate - exact[i]) / s;
        sq += d * d;
    }
    return std::sqrt(sq);
}

SummarySet build_sketches(const Relation& rel, std::string_view attribute, std::uint64_t b,
                          std::size_t k, std::vector<Predicate> benchmarks, std::uint64_t seed) {
    if (k < 1) throw ParameterError("k must be at least 1");
    if (benchmarks.empty()) throw ParameterError("benchmark query list is empty");
    if (b < 1) throw ParameterError("budget b must be at least 1");
    rel.total(attribute);

    const auto values = rel.table().numeric(attribute);
    std::vector<BoundPredicate> bound;
    bound.reserve(benchmarks.size());
    for (const auto& q : benchmarks) bound.emplace_back(q, rel.table());

    // One pass: prefix sums for sampling and exact benchmark answers.
    std::vector<double> prefix;
    prefix.reserve(values.size());
    std::vector<CompensatedSum> exact(benchmarks.size());
    double running = 0.0;
    for (std::size_t r = 0; r < values.size(); ++r) {
        running += values[r];
        prefix.push_back(running);
        for (std::size_t q = 0; q < bound.size(); ++q) {
            if (bound[q].matches(r)) exact[q].add(values[r]);
        }
    }

    const LineageBuilder builder(rel, std::string(attribute),
                                 WeightedSampler::from_prefix_sums(std::move(prefix)));
    SummarySet set;
    set.benchmark_queries = std::move(benchmarks);
    for (const auto& e : exact) set.benchmark_exact.push_back(e.value());
    for (std::size_t j = 0; j < k; ++j) {
        set.sketches.push_back(builder.build(b, derive_seed(seed, "summary", j)));
        set.scores.push_back(
            score_sketch(set.sketches.back(), set.benchmark_queries, set.benchmark_exact));
    }
    return set;
}

SummarySet build_summary_set(const Relation& rel, std::string_view attribute, std::uint64_t b,
                             std::size_t k, std::vector<Predicate> benchmarks, std::uint64_t seed) {
    if (k < 3) throw ParameterError("summary selection needs k >= 3");
    return build_sketches(rel, attribute, b, k, std::move(benchmarks), seed);
}

SelectionResult select_index(std::span<const double> scores) {
    if (scores.size() < 2) throw ParameterError("selection needs at least two summaries");
    std::size_t worst = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] >= scores[worst]) worst = i;
    }
    std::size_t best = worst == 0 ? 1 : 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i != worst && scores[i] < scores[best]) best = i;
    }
    return {worst, best};
}

LineageSketch select_summary(const SummarySet& set) {
    if (set.scores.size() != set.sketches.size()) {
        throw ParameterError("summary set has " + std::to_string(set.scores.size()) +
                             " scores for " + std::to_string(set.sketches.size()) + " sketches");
    }
    return set.sketches[select_index(set.scores).kept];
}

}  // namespace aggline
