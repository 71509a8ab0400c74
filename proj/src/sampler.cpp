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

#include "aggline/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aggline/errors.hpp"

namespace aggline {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

double log_term(std::uint64_t m, double p) { return std::log(2.0 * static_cast<double>(m) / p); }

void check_budget(std::uint64_t b) {
    if (b < 1) throw ParameterError("budget b must be at least 1");
}

}  // namespace

void GuaranteeParams::validate() const {
    if (m < 1) throw ParameterError("m must be at least 1");
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("p must lie in (0, 1)");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ParameterError("epsilon must be positive");
}

std::uint64_t compute_budget(const GuaranteeParams& g) {
    g.validate();
    const double b = std::ceil(log_term(g.m, g.p) / (2.0 * g.epsilon * g.epsilon));
    if (!(b < 0x1.0p63)) throw ParameterError("budget overflows");
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(b));
}

double error_for_budget(std::uint64_t b, std::uint64_t m, double p) {
    check_budget(b);
    GuaranteeParams g{m, p, 1.0};
    g.validate();
    g.epsilon = std::sqrt(log_term(m, p) / (2.0 * static_cast<double>(b)));
    while (compute_budget(g) > b) g.epsilon = std::nextafter(g.epsilon, 2.0 * g.epsilon);
    return g.epsilon;
}

std::string_view to_string(SummaryKind kind) noexcept {
    switch (kind) {
        case SummaryKind::lineage: return "lineage";
        case SummaryKind::top_k: return "top-k";
        case SummaryKind::uniform: return "uniform";
    }
    return "?";
}

std::uint64_t LineageSketch::frequency_sum() const noexcept {
    std::uint64_t s = 0;
    for (auto f : frequencies) s += f;
    return s;
}

std::optional<std::string> check_invariants(const LineageSketch& sketch) {
    if (sketch.budget < 1) return "budget b must be at least 1";
    if (sketch.frequencies.size() != sketch.entries.rows()) {
        return "frequency count does not match entry count";
    }
    if (sketch.frequency_sum() != sketch.budget) {
        return "sum of frequencies (" + std::to_string(sketch.frequency_sum()) +
               ") differs from b (" + std::to_string(sketch.budget) + ")";
    }
    if (sketch.size() > sketch.source_n) return "more distinct entries than source records";
    if (!(sketch.total_sum >= 0.0) || !std::isfinite(sketch.total_sum)) return "invalid total S";
    if (std::any_of(sketch.frequencies.begin(), sketch.frequencies.end(),
                    [](std::uint64_t f) { return f == 0; })) {
        return "entry with zero frequency";
    }
    const auto col = sketch.entries.find(sketch.attribute);
    if (!col || sketch.entries.schema()[*col].kind != AttributeKind::numeric) {
        return "aggregated attribute '" + sketch.attribute + "' missing from entries";
    }
    if (sketch.kind == SummaryKind::lineage) {
        const auto values = sketch.entries.numeric(sketch.attribute);
        if (std::any_of(values.begin(), values.end(), [](double v) { return !(v > 0.0); })) {
            return "lineage entry with non-positive attribute value";
        }
    }
    return std::nullopt;
}

WeightedSampler::WeightedSampler(std::span<const double> weights) {
    prefix_.reserve(weights.size());
    double running = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("weights must be finite and nonnegative");
        running += w;
        prefix_.push_back(running);
    }
    finish();
}

WeightedSampler WeightedSampler::from_prefix_sums(std::vector<double> prefix) {
    WeightedSampler s;
    s.prefix_ = std::move(prefix);
    s.finish();
    return s;
}

void WeightedSampler::finish() {
    if (prefix_.empty() || !(prefix_.back() > 0.0)) {
        throw DegenerateRelationError("attribute total is zero: no selection distribution exists");
    }
    for (std::size_t i = prefix_.size(); i-- > 0;) {
        if (i == 0 || prefix_[i] > prefix_[i - 1]) {
            last_positive_ = i;
            break;
        }
    }
}

std::size_t WeightedSampler::locate(double target) const noexcept {
    // First index whose prefix exceeds target; zero-weight rows share their
    // predecessor's prefix and are therefore never returned.
    const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), target);
    if (it == prefix_.end()) return last_positive_;
    return static_cast<std::size_t>(it - prefix_.begin());
}

LineageBuilder::LineageBuilder(const Relation& rel, std::string attribute)
    : LineageBuilder(rel, attribute, [&] {
          rel.total(attribute);
          return WeightedSampler(rel.table().numeric(attribute));
      }()) {}

LineageBuilder::LineageBuilder(const Relation& rel, std::string attribute, WeightedSampler sampler)
    : rel_(&rel), attribute_(std::move(attribute)), sampler_(std::move(sampler)) {}

std::vector<std::size_t> LineageBuilder::draw(std::uint64_t b, std::uint64_t seed) const {
    check_budget(b);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> picks(b);
    for (auto& p : picks) p = sampler_(rng);
    return picks;
}

LineageSketch LineageBuilder::build(std::uint64_t b, std::uint64_t seed) const {
    auto picks = draw(b, seed);
    return sketch_from_selections(rel_->table(), picks, SummaryKind::lineage, attribute_,
                                  rel_->total(attribute_), b, seed);
}

LineageSketch build_lineage(const Relation& rel, std::string_view attribute, std::uint64_t b,
                            std::uint64_t seed) {
    check_budget(b);
    return LineageBuilder(rel, std::string(attribute)).build(b, seed);
}

LineageSketch sketch_from_selections(const Table& source, std::span<const std::size_t> rows,
                                     SummaryKind kind, std::string attribute, double total_sum,
                                     std::uint64_t budget, std::uint64_t seed) {
    std::vector<std::size_t> sorted(rows.begin(), rows.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> distinct;
    LineageSketch sketch;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        distinct.push_back(sorted[i]);
        sketch.frequencies.push_back(j - i);
        i = j;
    }
    sketch.kind = kind;
    sketch.attribute = std::move(attribute);
    sketch.total_sum = total_sum;
    sketch.budget = budget;
    sketch.seed = seed;
    sketch.source_n = source.rows();
    sketch.entries = source.select_rows(distinct);
    return sketch;
}

StreamingLineageBuilder::StreamingLineageBuilder(std::vector<Attribute> schema,
                                                 std::string attribute, std::uint64_t b,
                                                 std::uint64_t seed)
    : attribute_(std::move(attribute)), budget_(b), seed_(seed), held_(std::move(schema)) {
    check_budget(b);
    weight_column_ = held_.index_of(attribute_);
    if (held_.schema()[weight_column_].kind != AttributeKind::numeric) {
        throw PredicateError("attribute '" + attribute_ + "' is not numeric");
    }
    rngs_.reserve(b);
    for (std::uint64_t j = 0; j < b; ++j) rngs_.emplace_back(derive_seed(seed, "slot", j));
    slots_.assign(b, Slot{-std::numeric_limits<double>::infinity(), npos});
}

void StreamingLineageBuilder::add(RecordId id, std::span<const Value> values) {
    if (values.size() != held_.schema().size()) {
        throw ParameterError("record does not match the stream schema");
    }
    const auto* wp = std::get_if<double>(&values[weight_column_]);
    if (wp == nullptr) throw ParameterError("attribute '" + attribute_ + "' expects a number");
    const double w = *wp;
    if (!(w >= 0.0) || !std::isfinite(w)) {
        throw ParameterError("record " + std::to_string(id) + " has invalid weight");
    }
    ++seen_;
    total_.add(w);
    if (w == 0.0) return;

    std::size_t holder = npos;
    for (std::size_t j = 0; j < slots_.size(); ++j) {
        const double key = std::log(uniform_open_unit(rngs_[j])) / w;
        // Strictly greater: ties keep the earlier stream position.
        if (key > slots_[j].key) {
            if (holder == npos) {
                held_.append(id, values);
                refcount_.push_back(0);
                holder = held_.rows() - 1;
            }
            if (slots_[j].holder != npos && --refcount_[slots_[j].holder] == 0) ++garbage_;
            slots_[j] = Slot{key, holder};
            ++refcount_[holder];
        }
    }
    if (garbage_ > budget_) compact();
}

void StreamingLineageBuilder::add(const Table& table, std::size_t row) {
    std::vector<Value> values;
    values.reserve(table.schema().size());
    for (std::size_t c = 0; c < table.schema().size(); ++c) values.push_back(table.value(row, c));
    add(table.ids()[row], values);
}

void StreamingLineageBuilder::compact() {
    std::vector<std::size_t> live;
    std::vector<std::size_t> remap(held_.rows(), npos);
    for (std::size_t r = 0; r < held_.rows(); ++r) {
        if (refcount_[r] > 0) {
            remap[r] = live.size();
            live.push_back(r);
        }
    }
    held_ = held_.select_rows(live);
    std::vector<std::uint64_t> counts;
    counts.reserve(live.size());
    for (auto r : live) counts.push_back(refcount_[r]);
    refcount_ = std::move(counts);
    for (auto& s : slots_) {
        if (s.holder != npos) s.holder = remap[s.holder];
    }
    garbage_ = 0;
}

LineageSketch StreamingLineageBuilder::finish() {
    if (slots_.empty() || slots_.front().holder == npos) {
        throw DegenerateRelationError("stream for attribute '" + attribute_ +
                                      "' has no positive weight");
    }
    std::vector<std::size_t> picks;
    picks.reserve(slots_.size());
    for (const auto& s : slots_) picks.push_back(s.holder);
    auto sketch = sketch_from_selections(held_, picks, SummaryKind::lineage, attribute_,
                                         total_.value(), budget_, seed_);
    sketch.source_n = seen_;
    return sketch;
}

LineageSketch build_lineage_streaming(const Table& table, std::string_view attribute,
                                      std::uint64_t b, std::uint64_t seed) {
    StreamingLineageBuilder builder(table.schema(), std::string(attribute), b, seed);
    std::vector<Value> values(table.schema().size());
    std::vector<const Column*> cols;
    for (std::size_t c = 0; c < table.schema().size(); ++c) cols.push_back(&table.column(c));
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (const auto* num = std::get_if<NumericColumn>(cols[c])) {
                values[c] = num->values[r];
            } else {
                values[c] = std::get<CategoricalColumn>(*cols[c]).at(r);
            }
        }
        builder.add(table.ids()[r], values);
    }
    return builder.finish();
}

MultiLineageResult build_multi_lineage(const Relation& rel, std::span<const std::string> attributes,
                                       std::uint64_t b, std::uint64_t seed) {
    check_budget(b);
    MultiLineageResult result;
    std::vector<std::string> names;
    std::vector<std::span<const double>> columns;
    for (const auto& a : attributes) {
        try {
            rel.total(a);
            columns.push_back(rel.table().numeric(a));
            names.push_back(a);
        } catch (const Error& e) {
            result.failures.emplace(a, e.what());
        }
    }

    // Single pass: every row extends each attribute's prefix sums.
    std::vector<std::vector<double>> prefix(names.size());
    std::vector<double> running(names.size(), 0.0);
    for (auto& p : prefix) p.reserve(rel.size());
    for (std::size_t r = 0; r < rel.size(); ++r) {
        for (std::size_t k = 0; k < names.size(); ++k) {
            running[k] += columns[k][r];
            prefix[k].push_back(running[k]);
        }
    }

    for (std::size_t k = 0; k < names.size(); ++k) {
        try {
            LineageBuilder builder(rel, names[k], WeightedSampler::from_prefix_sums(std::move(prefix[k])));
            result.sketches.emplace(names[k], builder.build(b, derive_seed(seed, names[k])));
        } catch (const DegenerateRelationError& e) {
            result.failures.emplace(names[k], e.what());
        }
    }
    return result;
}

}  // namespace aggline
