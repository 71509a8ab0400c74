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

#include "aggline/approx_query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "aggline/errors.hpp"

namespace aggline {

ApproxAnswer approx_sum(const LineageSketch& sketch, const Predicate& q,
                        const std::optional<GuaranteeParams>& g) {
    const BoundPredicate bound(q, sketch.entries);
    const auto values = sketch.entries.numeric(sketch.attribute);

    ApproxAnswer a;
    a.kind = sketch.kind;
    a.total_sum = sketch.total_sum;
    CompensatedSum sample;
    for (std::size_t r = 0; r < sketch.size(); ++r) {
        if (!bound.matches(r)) continue;
        ++a.matched_entries;
        a.matched_frequency_mass += sketch.frequencies[r];
        sample.add(static_cast<double>(sketch.frequencies[r]) * values[r]);
    }
    a.sample_sum = sample.value();

    const double b = static_cast<double>(sketch.budget);
    switch (sketch.kind) {
        case SummaryKind::lineage:
            a.estimate = sketch.total_sum * (static_cast<double>(a.matched_frequency_mass) / b);
            if (g) {
                a.epsilon = error_for_budget(sketch.budget, g->m, g->p);
                a.additive_bound = *a.epsilon * sketch.total_sum;
            }
            break;
        case SummaryKind::top_k:
            a.estimate = a.sample_sum;
            break;
        case SummaryKind::uniform:
            a.estimate = a.sample_sum * static_cast<double>(sketch.source_n) / b;
            break;
    }
    return a;
}

std::vector<std::size_t> matched_rows(const LineageSketch& sketch, const Predicate& q) {
    const BoundPredicate bound(q, sketch.entries);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < sketch.size(); ++r) {
        if (bound.matches(r)) rows.push_back(r);
    }
    return rows;
}

RelativeErrorReport relative_error(double epsilon, double rho) {
    RelativeErrorReport r;
    r.rho = rho;
    r.epsilon = epsilon;
    r.relative_error = rho > 0.0 ? epsilon / rho : std::numeric_limits<double>::infinity();
    r.below_resolution = rho < epsilon;
    return r;
}

RelativeErrorReport relative_error_report(const ApproxAnswer& answer, std::optional<double> rho_hint) {
    if (!answer.epsilon) throw ParameterError("answer carries no certified epsilon");
    double rho = 0.0;
    if (rho_hint) {
        if (!(*rho_hint > 0.0 && *rho_hint <= 1.0)) throw ParameterError("rho must lie in (0, 1]");
        rho = *rho_hint;
    } else if (answer.total_sum > 0.0) {
        rho = answer.estimate / answer.total_sum;
    }
    return relative_error(*answer.epsilon, rho);
}

LineageSketch top_k_baseline(const Relation& rel, std::string_view attribute, std::uint64_t b) {
    if (b < 1) throw ParameterError("budget b must be at least 1");
    const double total = rel.total(attribute);
    if (!(total > 0.0)) throw DegenerateRelationError("attribute total is zero");
    const auto values = rel.table().numeric(attribute);
    const auto& ids = rel.table().ids();

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t keep = std::min<std::uint64_t>(b, order.size());
    auto by_value = [&](std::size_t x, std::size_t y) {
        if (values[x] != values[y]) return values[x] > values[y];
        return ids[x] < ids[y];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      by_value);
    order.resize(keep);
    std::sort(order.begin(), order.end());

    LineageSketch s = sketch_from_selections(rel.table(), order, SummaryKind::top_k,
                                             std::string(attribute), total, keep, 0);
    return s;
}

LineageSketch uniform_baseline(const Relation& rel, std::string_view attribute, std::uint64_t b,
                               std::uint64_t seed) {
    if (b < 1) throw ParameterError("budget b must be at least 1");
    const double total = rel.total(attribute);
    if (rel.size() == 0) throw DegenerateRelationError("relation is empty");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> picks(b);
    for (auto& p : picks) p = uniform_below(rng, rel.size());
    return sketch_from_selections(rel.table(), picks, SummaryKind::uniform, std::string(attribute),
                                  total, b, seed);
}

}  // namespace aggline
