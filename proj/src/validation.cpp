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

#include "aggline/validation.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_map>

#include "aggline/approx_query.hpp"
#include "aggline/errors.hpp"
#include "aggline/running_example.hpp"

namespace aggline {

namespace {

// Welford running mean / variance.
class RunningStats {
public:
    void add(double x) noexcept {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stddev() const noexcept { return std::sqrt(variance()); }
    double standard_error() const noexcept {
        return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct QueryAccumulator {
    RunningStats estimate;
    double abs_error_sum = 0.0;
    double max_abs_error = 0.0;
    std::uint64_t violations = 0;
    std::vector<double> samples;
};

QueryErrorStats finish_query(std::string label, double exact, const QueryAccumulator& acc,
                             std::uint64_t trials, double allowed) {
    QueryErrorStats s;
    s.label = std::move(label);
    s.exact = exact;
    s.mean_estimate = acc.estimate.mean();
    s.stddev_estimate = acc.estimate.stddev();
    s.mean_abs_error = acc.abs_error_sum / static_cast<double>(trials);
    s.max_abs_error = acc.max_abs_error;
    s.violations = acc.violations;
    s.violation_rate = static_cast<double>(acc.violations) / static_cast<double>(trials);
    s.allowed_rate = allowed;
    s.within_band = s.violation_rate <= allowed;
    const double tolerance = 4.0 * s.stddev_estimate / std::sqrt(static_cast<double>(trials));
    // Scale-aware slack for queries whose estimate never varies.
    const double slack = 1e-12 * std::max(1.0, std::abs(exact));
    s.unbiased = std::abs(s.mean_estimate - exact) <= tolerance + slack;
    s.error_samples = acc.samples;
    return s;
}

void record(QueryAccumulator& acc, double estimate, double exact, double total, double epsilon,
            bool keep) {
    acc.estimate.add(estimate);
    const double err = std::abs(estimate - exact) / total;
    acc.abs_error_sum += err;
    acc.max_abs_error = std::max(acc.max_abs_error, err);
    if (err > epsilon) ++acc.violations;
    if (keep) acc.samples.push_back(err);
}

void check_options(const BoundCheckOptions& o) {
    if (!(o.epsilon > 0.0)) throw ParameterError("epsilon must be positive");
    if (o.trials < 1) throw ParameterError("trials must be at least 1");
    if (o.p && !(*o.p > 0.0 && *o.p < 1.0)) throw ParameterError("p must lie in (0, 1)");
}

ValidationReport base_report(std::uint64_t b, const BoundCheckOptions& o) {
    ValidationReport r;
    r.trials = o.trials;
    r.budget = b;
    r.epsilon = o.epsilon;
    r.hoeffding_ceiling = hoeffding_ceiling(o.epsilon, b);
    r.low_power = o.trials < 100;
    r.p = o.p;
    return r;
}

}  // namespace

double hoeffding_ceiling(double epsilon, std::uint64_t b) {
    return 2.0 * std::exp(-2.0 * epsilon * epsilon * static_cast<double>(b));
}

double binomial_band(double rate, std::uint64_t trials, double sigmas) {
    const double r = std::clamp(rate, 0.0, 1.0);
    return rate + sigmas * std::sqrt(r * (1.0 - r) / static_cast<double>(trials));
}

bool ValidationReport::passed() const {
    for (const auto& q : queries) {
        if (!q.within_band || !q.unbiased) return false;
    }
    for (const auto& b : blocks) {
        if (!b.within_band) return false;
    }
    for (const auto& c : chi_square) {
        if (c.rejected(0.01)) return false;
    }
    if (p && union_violation_rate > binomial_band(*p, trials)) return false;
    return true;
}

ValidationReport run_bound_check(const Relation& rel, std::string_view attribute, std::uint64_t b,
                                 std::span<const Predicate> queries, const BoundCheckOptions& options) {
    check_options(options);
    const LineageBuilder builder(rel, std::string(attribute));
    const double total = rel.total(attribute);

    std::vector<double> exact;
    for (const auto& q : queries) exact.push_back(exact_sum(rel, attribute, q));

    ValidationReport report = base_report(b, options);
    std::vector<QueryAccumulator> acc(queries.size());
    for (std::uint64_t t = 0; t < options.trials; ++t) {
        const auto sketch = builder.build(b, derive_seed(options.seed, "trial", t));
        bool any = false;
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const auto before = acc[q].violations;
            record(acc[q], approx_sum(sketch, queries[q]).estimate, exact[q], total, options.epsilon,
                   options.keep_samples);
            any = any || acc[q].violations != before;
        }
        if (any) ++report.union_violations;
    }

    const double allowed = binomial_band(report.hoeffding_ceiling, options.trials);
    for (std::size_t q = 0; q < queries.size(); ++q) {
        report.queries.push_back(finish_query(to_string(queries[q]), exact[q], acc[q], options.trials, allowed));
    }
    report.union_violation_rate =
        static_cast<double>(report.union_violations) / static_cast<double>(options.trials);
    return report;
}

std::vector<double> oracle_exhaustive_sum(const Relation& rel, std::string_view attribute) {
    const auto values = rel.table().numeric(attribute);
    if (values.size() > 20) {
        throw ParameterError("exhaustive oracle refuses n = " + std::to_string(values.size()) +
                             " (limit 20)");
    }
    const std::size_t subsets = std::size_t{1} << values.size();
    std::vector<double> sums(subsets);
    for (std::size_t mask = 0; mask < subsets; ++mask) {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (mask & (std::size_t{1} << i)) s += values[i];
        }
        sums[mask] = s;
    }
    return sums;
}

ValidationReport run_exhaustive_bound_check(const Relation& rel, std::string_view attribute,
                                            std::uint64_t b, const BoundCheckOptions& options) {
    check_options(options);
    const auto exact = oracle_exhaustive_sum(rel, attribute);
    const LineageBuilder builder(rel, std::string(attribute));
    const double total = rel.total(attribute);
    const std::size_t n = rel.size();
    const std::size_t subsets = exact.size();

    ValidationReport report = base_report(b, options);
    std::vector<QueryAccumulator> acc(subsets);
    std::vector<std::uint64_t> freq(n);
    std::vector<std::uint64_t> mass(subsets);
    for (std::uint64_t t = 0; t < options.trials; ++t) {
        std::fill(freq.begin(), freq.end(), 0);
        for (auto row : builder.draw(b, derive_seed(options.seed, "trial", t))) ++freq[row];
        bool any = false;
        mass[0] = 0;
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            if (mask > 0) {
                const auto low = static_cast<std::size_t>(std::countr_zero(mask));
                mass[mask] = mass[mask & (mask - 1)] + freq[low];
            }
            const double estimate = total * (static_cast<double>(mass[mask]) / static_cast<double>(b));
            const auto before = acc[mask].violations;
            record(acc[mask], estimate, exact[mask], total, options.epsilon, options.keep_samples);
            any = any || acc[mask].violations != before;
        }
        if (any) ++report.union_violations;
    }

    const double allowed = binomial_band(report.hoeffding_ceiling, options.trials);
    for (std::size_t mask = 0; mask < subsets; ++mask) {
        report.queries.push_back(
            finish_query("subset:" + std::to_string(mask), exact[mask], acc[mask], options.trials, allowed));
    }
    report.union_violation_rate =
        static_cast<double>(report.union_violations) / static_cast<double>(options.trials);
    return report;
}

std::vector<BlockStats> replicate_blocks(const Relation& rel, std::string_view attribute,
                                         std::uint64_t b, std::uint64_t trials, std::uint64_t seed) {
    if (trials < 1) throw ParameterError("trials must be at least 1");
    const LineageBuilder builder(rel, std::string(attribute));
    const auto values = rel.table().numeric(attribute);
    const double total = rel.total(attribute);

    std::map<double, std::size_t, std::greater<>> block_of_value;
    for (double v : values) block_of_value.emplace(v, 0);
    std::size_t next = 0;
    for (auto& [v, idx] : block_of_value) idx = next++;

    std::vector<BlockStats> blocks(block_of_value.size());
    std::vector<CompensatedSum> block_mass(blocks.size());
    std::vector<std::uint32_t> row_block(values.size());
    for (const auto& [v, idx] : block_of_value) blocks[idx].value = v;
    for (std::size_t r = 0; r < values.size(); ++r) {
        row_block[r] = static_cast<std::uint32_t>(block_of_value.at(values[r]));
        ++blocks[row_block[r]].records;
        block_mass[row_block[r]].add(values[r]);
    }

    std::vector<RunningStats> bag(blocks.size()), distinct(blocks.size());
    std::vector<double> bag_t(blocks.size()), distinct_t(blocks.size());
    for (std::uint64_t t = 0; t < trials; ++t) {
        auto picks = builder.draw(b, derive_seed(seed, "trial", t));
        std::sort(picks.begin(), picks.end());
        std::fill(bag_t.begin(), bag_t.end(), 0.0);
        std::fill(distinct_t.begin(), distinct_t.end(), 0.0);
        for (std::size_t i = 0; i < picks.size(); ++i) {
            const auto blk = row_block[picks[i]];
            bag_t[blk] += 1.0;
            if (i == 0 || picks[i] != picks[i - 1]) distinct_t[blk] += 1.0;
        }
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            bag[k].add(bag_t[k]);
            distinct[k].add(distinct_t[k]);
        }
    }

    const double bd = static_cast<double>(b);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        auto& blk = blocks[k];
        const double share = block_mass[k].value() / total;
        blk.expected_bag_mass = bd * share;
        const double binomial_se = std::sqrt(bd * share * (1.0 - share) / static_cast<double>(trials));
        blk.mean_bag_mass = bag[k].mean();
        blk.se_bag_mass = std::max(bag[k].standard_error(), binomial_se);
        blk.mean_distinct = distinct[k].mean();
        blk.se_distinct = distinct[k].standard_error();
        blk.within_band = std::abs(blk.mean_bag_mass - blk.expected_bag_mass) <= 3.0 * blk.se_bag_mass;
    }
    return blocks;
}

std::vector<BlockStats> replicate_running_example(std::uint64_t b, std::uint64_t trials, std::uint64_t seed) {
    const auto rel = running_example::make_relation();
    return replicate_blocks(rel, "Sal", b, trials, seed);
}

ChiSquareResult chi_square_goodness_of_fit(std::span<const std::uint64_t> observed,
                                           std::span<const double> probabilities) {
    if (observed.size() != probabilities.size()) throw ParameterError("category count mismatch");
    double n = 0.0;
    for (auto o : observed) n += static_cast<double>(o);
    ChiSquareResult r;
    r.label = "goodness-of-fit";
    std::size_t categories = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (probabilities[i] <= 0.0) {
            if (observed[i] > 0) r.statistic = std::numeric_limits<double>::infinity();
            continue;
        }
        ++categories;
        const double e = n * probabilities[i];
        const double d = static_cast<double>(observed[i]) - e;
        r.statistic += d * d / e;
    }
    if (categories < 2) throw ParameterError("goodness-of-fit needs two categories");
    r.degrees_of_freedom = static_cast<double>(categories - 1);
    if (std::isinf(r.statistic)) {
        r.p_value = 0.0;
    } else {
        boost::math::chi_squared dist(r.degrees_of_freedom);
        r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    }
    return r;
}

ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) throw ParameterError("category count mismatch");
    double na = 0.0, nb = 0.0;
    for (auto x : a) na += static_cast<double>(x);
    for (auto x : b) nb += static_cast<double>(x);
    const double n = na + nb;
    ChiSquareResult r;
    r.label = "homogeneity";
    std::size_t categories = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double col = static_cast<double>(a[i] + b[i]);
        if (col == 0.0) continue;
        ++categories;
        const double ea = na * col / n;
        const double eb = nb * col / n;
        r.statistic += (static_cast<double>(a[i]) - ea) * (static_cast<double>(a[i]) - ea) / ea;
        r.statistic += (static_cast<double>(b[i]) - eb) * (static_cast<double>(b[i]) - eb) / eb;
    }
    if (categories < 2) {
        r.degrees_of_freedom = 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.degrees_of_freedom = static_cast<double>(categories - 1);
    boost::math::chi_squared dist(r.degrees_of_freedom);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

namespace {

std::unordered_map<RecordId, std::size_t> row_of_id(const Table& table) {
    std::unordered_map<RecordId, std::size_t> out;
    for (std::size_t r = 0; r < table.rows(); ++r) out.emplace(table.ids()[r], r);
    return out;
}

void tally(const LineageSketch& s, const std::unordered_map<RecordId, std::size_t>& rows,
           std::vector<std::uint64_t>& counts) {
    for (std::size_t i = 0; i < s.size(); ++i) counts[rows.at(s.entries.ids()[i])] += s.frequencies[i];
}

}  // namespace

std::vector<std::uint64_t> selection_counts_in_memory(const Relation& rel, std::string_view attribute,
                                                      std::uint64_t builds, std::uint64_t seed) {
    const LineageBuilder builder(rel, std::string(attribute));
    const auto rows = row_of_id(rel.table());
    std::vector<std::uint64_t> counts(rel.size());
    for (std::uint64_t i = 0; i < builds; ++i) {
        tally(builder.build(1, derive_seed(seed, "in-memory", i)), rows, counts);
    }
    return counts;
}

std::vector<std::uint64_t> selection_counts_streaming(const Relation& rel, std::string_view attribute,
                                                      std::uint64_t builds, std::uint64_t seed) {
    const auto rows = row_of_id(rel.table());
    std::vector<std::uint64_t> counts(rel.size());
    for (std::uint64_t i = 0; i < builds; ++i) {
        tally(build_lineage_streaming(rel.table(), attribute, 1, derive_seed(seed, "streaming", i)),
              rows, counts);
    }
    return counts;
}

ChiSquareResult builder_equivalence(const Relation& rel, std::string_view attribute,
                                    std::uint64_t builds, std::uint64_t seed) {
    auto result = chi_square_homogeneity(selection_counts_in_memory(rel, attribute, builds, seed),
                                         selection_counts_streaming(rel, attribute, builds, seed));
    result.label = "in-memory vs streaming";
    return result;
}

void write_report_csv(const ValidationReport& report, std::ostream& sink) {
    sink << "record,label,expected,mean,spread,violations,rate,allowed,pass\n";
    auto quote = [](const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + '"';
    };
    for (const auto& q : report.queries) {
        sink << "query," << quote(q.label) << ',' << q.exact << ',' << q.mean_estimate << ','
             << q.stddev_estimate << ',' << q.violations << ',' << q.violation_rate << ','
             << q.allowed_rate << ',' << (q.within_band && q.unbiased ? 1 : 0) << '\n';
    }
    for (const auto& b : report.blocks) {
        sink << "block," << b.value << ',' << b.expected_bag_mass << ',' << b.mean_bag_mass << ','
             << b.se_bag_mass << ",,,," << (b.within_band ? 1 : 0) << '\n';
    }
    for (const auto& c : report.chi_square) {
        sink << "chi-square," << quote(c.label) << ',' << c.degrees_of_freedom << ',' << c.statistic
             << ",,,," << c.p_value << ',' << (c.rejected(0.01) ? 0 : 1) << '\n';
    }
    if (report.p) {
        sink << "union,all-queries," << *report.p << ",,," << report.union_violations << ','
             << report.union_violation_rate << ',' << binomial_band(*report.p, report.trials) << ','
             << (report.union_violation_rate <= binomial_band(*report.p, report.trials) ? 1 : 0)
             << '\n';
    }
}

void write_report_summary(const ValidationReport& report, std::ostream& sink) {
    sink << "trials: " << report.trials << (report.low_power ? " (low power: fewer than 100)" : "")
         << "\nb: " << report.budget << "  epsilon: " << report.epsilon
         << "  hoeffding ceiling: " << report.hoeffding_ceiling << '\n';
    std::size_t bad = 0;
    double worst_rate = 0.0;
    for (const auto& q : report.queries) {
        if (!q.within_band || !q.unbiased) ++bad;
        worst_rate = std::max(worst_rate, q.violation_rate);
    }
    sink << "queries: " << report.queries.size() << "  outside band: " << bad
         << "  worst violation rate: " << worst_rate << '\n';
    if (report.queries.size() <= 16) {
        for (const auto& q : report.queries) {
            sink << "  " << q.label << ": exact " << q.exact << ", mean " << q.mean_estimate
                 << ", max |err|/S " << q.max_abs_error << ", violations " << q.violations
                 << (q.within_band && q.unbiased ? "" : "  <-- FAIL") << '\n';
        }
    }
    for (const auto& b : report.blocks) {
        sink << "  block " << b.value << ": bag mass " << b.mean_bag_mass << " +/- " << b.se_bag_mass
             << " (expected " << b.expected_bag_mass << "), distinct " << b.mean_distinct
             << (b.within_band ? "" : "  <-- FAIL") << '\n';
    }
    if (report.p) {
        sink << "union violation rate: " << report.union_violation_rate << " (p = " << *report.p << ")\n";
    }
    sink << (report.passed() ? "PASS" : "FAIL") << '\n';
}

}  // namespace aggline
