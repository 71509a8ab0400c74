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

// Acceptance runner. Prints one PASS/FAIL line per criterion; an optional
// argument restricts the run to one criterion by name.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "aggline/approx_query.hpp"
#include "aggline/running_example.hpp"
#include "aggline/sampler.hpp"
#include "aggline/validation.hpp"

using namespace aggline;

namespace {

// Pinned tolerances and sizes.
constexpr std::uint64_t kSeed = 20260415;
constexpr double kBandSigmas = 3.0;
constexpr double kPerTupleMin = 1.465e8;
constexpr double kPerTupleMax = 1.475e8;
constexpr std::uint64_t kBlockBuilds = 400;
constexpr std::uint64_t kQ1Builds = 1000;
constexpr std::uint64_t kQ1RequiredHits = 997;
constexpr double kQ1Epsilon = 0.04;
constexpr double kQ1BracketLow = 1.03e12;
constexpr double kQ1BracketHigh = 1.17e12;
constexpr double kTopKLow = 8.5e10;
constexpr double kTopKHigh = 9.1e10;
constexpr double kUniformLow = 8.5e9;
constexpr double kUniformHigh = 9.1e9;
constexpr std::uint64_t kUniformTrials = 1000;
constexpr std::uint64_t kToyTrials = 100000;
constexpr double kToyEpsilon = 0.3;
constexpr std::uint64_t kToyBudget = 5;
constexpr std::uint64_t kEquivalenceBuilds = 10000;
constexpr double kAlpha = 0.01;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

Relation weights_relation(std::size_t n) {
    Table t({{"Sal", AttributeKind::numeric}, {"Key", AttributeKind::categorical}});
    for (std::size_t i = 0; i < n; ++i) {
        t.append(i, std::vector<Value>{static_cast<double>(i + 1), "k" + std::to_string(i)});
    }
    return Relation("toy", std::move(t));
}

const Relation& salaries() {
    static const Relation rel = running_example::make_relation();
    return rel;
}

Outcome budget() {
    const auto b = compute_budget({1'000'000, 1e-6, 0.04});
    return {b == 8852, fmt("compute_budget(1e6, 1e-6, 0.04) = %llu (want 8852)", static_cast<unsigned long long>(b))};
}

Outcome running_example_dataset() {
    const auto& rel = salaries();
    const double per = rel.total("Sal") / 8852.0;
    const bool ok = rel.size() == 1'012'100 && per >= kPerTupleMin && per <= kPerTupleMax;
    return {ok, fmt("n = %zu, S = %.17g, S/8852 = %.6e", rel.size(), rel.total("Sal"), per)};
}

Outcome block_masses() {
    const auto blocks = replicate_running_example(running_example::kBudget, kBlockBuilds, derive_seed(kSeed, "blocks"));
    const std::map<double, double> printed{{1e9, 681}, {1e8, 681}, {1e7, 681}, {1e6, 6809}, {10, 0}};
    bool ok = blocks.size() == printed.size();
    std::string detail = fmt("%llu builds;", static_cast<unsigned long long>(kBlockBuilds));
    for (const auto& b : blocks) {
        const double want = printed.at(b.value);
        const bool in = std::abs(b.mean_bag_mass - want) <= kBandSigmas * b.se_bag_mass;
        ok = ok && in;
        detail += fmt(" %g:%.1f+/-%.2f%s", b.value, b.mean_bag_mass, b.se_bag_mass, in ? "" : "(out)");
    }
    const auto& top = blocks.front();
    const double per_tuple = top.mean_bag_mass / static_cast<double>(top.records);
    const double per_tuple_se = top.se_bag_mass / static_cast<double>(top.records);
    const bool tuple_ok = std::abs(per_tuple - 6.81) <= kBandSigmas * per_tuple_se;
    detail += fmt("; 1e9 per-tuple %.3f+/-%.3f", per_tuple, per_tuple_se);
    return {ok && tuple_ok, detail};
}

Outcome q1_fidelity() {
    const auto& rel = salaries();
    const double exact = exact_sum(rel, "Sal", running_example::q1());
    const double total = rel.total("Sal");
    const LineageBuilder builder(rel, "Sal");
    std::uint64_t hits = 0, bracketed = 0;
    for (std::uint64_t t = 0; t < kQ1Builds; ++t) {
        const auto sk = builder.build(running_example::kBudget, derive_seed(kSeed, "q1", t));
        const double e = approx_sum(sk, running_example::q1()).estimate;
        if (std::abs(e - 1.1e12) <= kQ1Epsilon * total) ++hits;
        if (e >= kQ1BracketLow && e <= kQ1BracketHigh) ++bracketed;
    }
    const bool ok = exact == 1.1e12 && hits >= kQ1RequiredHits && bracketed >= kQ1RequiredHits;
    return {ok, fmt("exact = %.17g; within 0.04*S in %llu/%llu; within [1.03e12, 1.17e12] in %llu/%llu", exact,
                    static_cast<unsigned long long>(hits), static_cast<unsigned long long>(kQ1Builds),
                    static_cast<unsigned long long>(bracketed), static_cast<unsigned long long>(kQ1Builds))};
}

Outcome baselines() {
    const auto& rel = salaries();
    const auto q1 = running_example::q1();
    const double top = approx_sum(top_k_baseline(rel, "Sal", running_example::kBudget), q1).estimate;
    double unscaled = 0.0, scaled = 0.0;
    for (std::uint64_t t = 0; t < kUniformTrials; ++t) {
        const auto a = approx_sum(uniform_baseline(rel, "Sal", running_example::kBudget, derive_seed(kSeed, "uniform", t)), q1);
        unscaled += a.sample_sum;
        scaled += a.estimate;
    }
    unscaled /= static_cast<double>(kUniformTrials);
    scaled /= static_cast<double>(kUniformTrials);
    const bool top_ok = top >= kTopKLow && top <= kTopKHigh;
    const bool uniform_ok = unscaled >= kUniformLow && unscaled <= kUniformHigh;
    const bool separated = top <= 0.1 * 1.1e12 && unscaled <= 0.1 * 1.1e12;
    return {top_ok && uniform_ok && separated,
            fmt("top-k = %.4e (%s); uniform unscaled mean = %.4e (%s, band [8.5e9, 9.1e9]); "
                "uniform scaled mean = %.4e",
                top, top_ok ? "in band" : "out of band", unscaled, uniform_ok ? "in band" : "out of band", scaled)};
}

Outcome hoeffding_exhaustive() {
    const auto rel = weights_relation(10);
    BoundCheckOptions o;
    o.epsilon = kToyEpsilon;
    o.trials = kToyTrials;
    o.seed = derive_seed(kSeed, "toy");
    const auto report = run_exhaustive_bound_check(rel, "Sal", kToyBudget, o);
    const double allowed = binomial_band(2.0 * std::exp(-2.0 * 0.09 * 5.0), kToyTrials, kBandSigmas);
    std::size_t outside = 0;
    double worst = 0.0;
    for (const auto& q : report.queries) {
        if (q.violation_rate > allowed) ++outside;
        worst = std::max(worst, q.violation_rate);
    }
    const bool ok = report.queries.size() == 1024 && outside == 0;
    return {ok, fmt("%zu subset queries, worst violation rate %.5f, allowed %.5f, outside %zu", report.queries.size(),
                    worst, allowed, outside)};
}

Outcome builder_equivalence_check() {
    const auto rel = weights_relation(5);
    const auto r = builder_equivalence(rel, "Sal", kEquivalenceBuilds, derive_seed(kSeed, "equivalence"));
    return {!r.rejected(kAlpha), fmt("chi-square %.3f on %.0f df, p = %.4f", r.statistic, r.degrees_of_freedom, r.p_value)};
}

Outcome invariants() {
    std::vector<std::string> failures;
    std::mt19937_64 rng(kSeed);
    std::uint64_t builds = 0;
    for (std::uint64_t f = 0; f < 20; ++f) {
        Table t({{"Sal", AttributeKind::numeric}, {"Dept", AttributeKind::categorical}, {"Year", AttributeKind::numeric}});
        std::uniform_int_distribution<int> sal(0, 100), dept(0, 3), year(2000, 2009);
        const std::size_t n = 5 + f * 13;
        for (std::size_t i = 0; i < n; ++i) {
            t.append(i, std::vector<Value>{static_cast<double>(sal(rng)) * (i == 0 ? 0.0 : 1.0) + (i == 1 ? 1.0 : 0.0),
                                           "d" + std::to_string(dept(rng)), static_cast<double>(year(rng))});
        }
        const Relation rel("fixture", std::move(t));
        const double total = rel.total("Sal");
        for (std::uint64_t b : {1ull, 7ull, 64ull, 500ull}) {
            const auto seed = derive_seed(kSeed, "invariants", f * 1000 + b);
            const auto sk = build_lineage(rel, "Sal", b, seed);
            const auto streamed = build_lineage_streaming(rel.table(), "Sal", b, seed);
            builds += 2;
            if (sk.frequency_sum() != b || streamed.frequency_sum() != b) failures.push_back("sum of frequencies != b");
            if (approx_sum(sk, Predicate::always()).estimate != total ||
                approx_sum(streamed, Predicate::always()).estimate != total) {
                failures.push_back("always-true predicate not exact");
            }
            if (!(sk == build_lineage(rel, "Sal", b, seed)) ||
                !(streamed == build_lineage_streaming(rel.table(), "Sal", b, seed))) {
                failures.push_back("not deterministic under a fixed seed");
            }
            for (int i = 0; i < 10; ++i) {
                Predicate q;
                if (i % 2) q.where("Year", Comparator::le, 2000.0 + i);
                const auto dept = "d" + std::to_string(i % 4);
                const auto in = q.conjoin(Predicate{}.where("Dept", Comparator::eq, dept));
                const auto out = q.conjoin(Predicate{}.where("Dept", Comparator::ne, dept));
                const double whole = approx_sum(sk, q).estimate;
                const double a = approx_sum(sk, in).estimate;
                const double c = approx_sum(sk, out).estimate;
                if (a > whole || c > whole) failures.push_back("approx_sum not monotone");
                if (approx_sum(sk, in).matched_frequency_mass + approx_sum(sk, out).matched_frequency_mass !=
                    approx_sum(sk, q).matched_frequency_mass ||
                    std::abs(a + c - whole) > 1e-9 * total) {
                    failures.push_back("approx_sum not additive");
                }
            }
        }
    }
    // Equal weights reduce to uniform selection.
    Table t({{"Sal", AttributeKind::numeric}});
    for (RecordId i = 0; i < 8; ++i) t.append(i, std::vector<Value>{3.0});
    const Relation flat("flat", std::move(t));
    const auto counts = selection_counts_in_memory(flat, "Sal", 40000, derive_seed(kSeed, "flat"));
    const std::vector<double> probs(8, 1.0 / 8.0);
    const auto chi = chi_square_goodness_of_fit(counts, probs);
    if (chi.rejected(kAlpha)) failures.push_back("equal weights not uniform");

    std::string detail = fmt("%llu builds checked, uniform-reduction p = %.4f", static_cast<unsigned long long>(builds),
                             chi.p_value);
    if (!failures.empty()) detail += "; first failure: " + failures.front();
    return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"budget", budget},
        {"running_example", running_example_dataset},
        {"block_masses", block_masses},
        {"q1_fidelity", q1_fidelity},
        {"baselines", baselines},
        {"hoeffding_exhaustive", hoeffding_exhaustive},
        {"builder_equivalence", builder_equivalence_check},
        {"invariants", invariants},
    };
    const std::string only = argc > 1 ? argv[1] : "";
    int failed = 0, ran = 0;
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && only != name) continue;
        ++ran;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    if (ran == 0) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
