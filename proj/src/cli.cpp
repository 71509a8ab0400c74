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

#include "aggline/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "aggline/approx_query.hpp"
#include "aggline/csv.hpp"
#include "aggline/errors.hpp"
#include "aggline/predicate_expr.hpp"
#include "aggline/running_example.hpp"
#include "aggline/summary.hpp"
#include "aggline/validation.hpp"

namespace aggline::cli {

namespace {

struct CliConfig {
    std::string csv_path;
    std::string out_path;
    std::string sketch_path;
    std::string attribute = "Sal";
    std::optional<std::uint64_t> b;
    std::optional<std::uint64_t> m;
    std::optional<double> p;
    std::optional<double> epsilon;
    std::uint64_t seed = 0;
    std::size_t k = kDefaultSummaryCount;
    bool no_select = false;
    bool force = false;
    bool precise = false;
    std::vector<std::string> where;
    std::uint64_t trials = 1000;
    bool exhaustive = false;
    bool blocks = false;
    bool equivalence = false;
    bool free_seed = false;
    std::string report_path;
};

class Printer {
public:
    explicit Printer(bool precise) : precise_(precise) {}
    std::string operator()(double x) const {
        char buf[64];
        std::snprintf(buf, sizeof(buf), precise_ ? "%.17g" : "%.2e", x);
        return buf;
    }

private:
    bool precise_;
};

Relation load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return ingest_csv(in, {}, std::filesystem::path(path).stem().string());
}

LineageSketch load_sketch_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return load_sketch(in);
}

Predicate parse_where(const std::string& text, std::ostream& err) {
    try {
        return parse_predicate(text);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n  " << text << "\n  " << std::string(e.position(), ' ')
            << "^\n";
        throw;
    }
}

GuaranteeParams query_guarantee(const CliConfig& c) {
    return GuaranteeParams{c.m.value_or(1'000'000), c.p.value_or(1e-6), 1.0};
}

std::uint64_t resolve_budget(const CliConfig& c) {
    const bool triple = c.m && c.p && c.epsilon;
    if (c.b && (c.m || c.p || c.epsilon)) {
        throw ParameterError("give either --b or --m/--p/--epsilon, not both");
    }
    if (c.b) {
        if (*c.b < 1) throw ParameterError("--b must be at least 1");
        return *c.b;
    }
    if (!triple) throw ParameterError("give either --b or all of --m, --p, --epsilon");
    return compute_budget({*c.m, *c.p, *c.epsilon});
}

int cmd_generate(const CliConfig& c, std::ostream& out) {
    if (std::filesystem::exists(c.out_path) && !c.force) {
        throw Error("'" + c.out_path + "' exists; pass --force to overwrite");
    }
    const auto rel = running_example::make_relation();
    std::ofstream file(c.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write '" + c.out_path + "'");
    export_csv(rel, file);
    file.close();
    if (!file) throw Error("failed writing '" + c.out_path + "'");
    const Printer fmt(c.precise);
    out << "n = " << rel.size() << "\nS = " << fmt(rel.total("Sal")) << '\n';
    return 0;
}

int cmd_build(const CliConfig& c, std::ostream& out) {
    const auto b = resolve_budget(c);
    if (!c.no_select && c.k < 3) throw ParameterError("--k must be at least 3 (or pass --no-select)");
    const auto rel = load_csv(c.csv_path);
    rel.total(c.attribute);
    auto benchmarks = default_benchmarks(rel, c.attribute);
    LineageSketch chosen;
    SummarySet set;
    if (c.no_select) {
        set = build_sketches(rel, c.attribute, b, std::max<std::size_t>(c.k, 1), std::move(benchmarks), c.seed);
        chosen = set.sketches.front();
    } else {
        set = build_summary_set(rel, c.attribute, b, c.k, std::move(benchmarks), c.seed);
        chosen = select_summary(set);
    }
    std::ofstream file(c.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write '" + c.out_path + "'");
    save_sketch(chosen, file);

    const Printer fmt(c.precise);
    out << "b = " << b << '\n'
        << "distinct entries = " << chosen.size() << '\n'
        << "S = " << fmt(chosen.total_sum) << '\n'
        << "S/b = " << fmt(chosen.scale()) << '\n';
    if (c.epsilon) out << "epsilon = " << *c.epsilon << '\n';
    out << "summaries = " << set.sketches.size() << ", scores =";
    for (double s : set.scores) out << ' ' << fmt(s);
    out << '\n';
    return 0;
}

int cmd_query(const CliConfig& c, std::ostream& out, std::ostream& err) {
    const auto sketch = load_sketch_file(c.sketch_path);
    const auto q = parse_where(c.where.empty() ? "true" : c.where.front(), err);
    const auto answer = approx_sum(sketch, q, query_guarantee(c));
    const Printer fmt(c.precise);
    out << "estimate = " << fmt(answer.estimate) << '\n';
    if (answer.additive_bound) {
        const auto rel = relative_error_report(answer);
        out << "additive bound = " << fmt(*answer.additive_bound) << " (epsilon " << *answer.epsilon
            << ")\n"
            << "relative bound = " << fmt(rel.relative_error) << '\n';
        if (rel.below_resolution) out << "warning: below resolution (estimate/S < epsilon)\n";
    }
    out << "matched entries = " << answer.matched_entries
        << "\nmatched frequency = " << answer.matched_frequency_mass << '\n';
    return 0;
}

int cmd_compare(const CliConfig& c, std::ostream& out, std::ostream& err) {
    if (!c.b) throw ParameterError("--b is required");
    const auto rel = load_csv(c.csv_path);
    const auto q = parse_where(c.where.empty() ? "true" : c.where.front(), err);
    const double exact = exact_sum(rel, c.attribute, q);
    const auto lineage = approx_sum(build_lineage(rel, c.attribute, *c.b, c.seed), q);
    const auto top = approx_sum(top_k_baseline(rel, c.attribute, *c.b), q);
    const auto uniform = approx_sum(uniform_baseline(rel, c.attribute, *c.b, c.seed), q);
    const Printer fmt(c.precise);
    out << "exact             " << fmt(exact) << '\n'
        << "lineage           " << fmt(lineage.estimate) << '\n'
        << "top-k             " << fmt(top.estimate) << '\n'
        << "uniform           " << fmt(uniform.sample_sum) << '\n'
        << "uniform (scaled)  " << fmt(uniform.estimate) << '\n';
    return 0;
}

int cmd_validate(const CliConfig& c, std::ostream& out, std::ostream& err) {
    const auto rel = load_csv(c.csv_path);
    std::uint64_t b = 0;
    double epsilon = 0.0;
    if (c.b) {
        b = *c.b;
        epsilon = c.epsilon ? *c.epsilon : error_for_budget(b, c.m.value_or(1'000'000), c.p.value_or(1e-6));
    } else {
        b = resolve_budget(c);
        epsilon = *c.epsilon;
    }
    BoundCheckOptions options;
    options.epsilon = epsilon;
    options.trials = c.trials;
    options.seed = c.free_seed ? std::random_device{}() : c.seed;
    if (c.p && c.m) options.p = *c.p;

    ValidationReport report;
    if (c.exhaustive) {
        report = run_exhaustive_bound_check(rel, c.attribute, b, options);
    } else {
        std::vector<Predicate> queries;
        for (const auto& w : c.where) queries.push_back(parse_where(w, err));
        if (queries.empty()) queries = default_benchmarks(rel, c.attribute);
        report = run_bound_check(rel, c.attribute, b, queries, options);
    }
    if (c.blocks) report.blocks = replicate_blocks(rel, c.attribute, b, c.trials, options.seed);
    if (c.equivalence) {
        report.chi_square.push_back(builder_equivalence(rel, c.attribute, c.trials, options.seed));
    }
    if (c.free_seed) out << "seed: " << options.seed << '\n';
    write_report_summary(report, out);
    if (!c.report_path.empty()) {
        std::ofstream file(c.report_path, std::ios::trunc);
        if (!file) throw Error("cannot write '" + c.report_path + "'");
        write_report_csv(report, file);
    }
    return report.passed() ? 0 : kBandViolation;
}

int cmd_budget(const CliConfig& c, std::ostream& out) {
    const auto b = resolve_budget(c);
    out << "b = " << b << '\n';
    if (c.m && c.p) out << "epsilon certified = " << error_for_budget(b, *c.m, *c.p) << '\n';
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Aggregate lineage: build value-weighted summaries and answer SUM queries"};
    app.require_subcommand(1);
    CliConfig c;

    auto add_budget = [&c](CLI::App* sub) {
        sub->add_option("--b", c.b, "Number of sampling trials");
        sub->add_option("--m", c.m, "Number of queries to guarantee");
        sub->add_option("--p", c.p, "Failure probability");
        sub->add_option("--epsilon", c.epsilon, "Additive error as a fraction of S");
    };

    auto* gen = app.add_subcommand("generate", "Write the running-example salaries CSV");
    gen->add_option("--out,out", c.out_path, "Output CSV path")->required();
    gen->add_flag("--force", c.force, "Overwrite an existing file");
    gen->add_flag("--precise", c.precise, "Print full precision");

    auto* build = app.add_subcommand("build", "Build, select and save a lineage sketch");
    build->add_option("--csv", c.csv_path, "Input CSV")->required();
    build->add_option("--attribute", c.attribute, "Aggregated attribute")->capture_default_str();
    add_budget(build);
    build->add_option("--k", c.k, "Number of summaries to compare")->capture_default_str();
    build->add_flag("--no-select", c.no_select, "Build a single summary without selection");
    build->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    build->add_option("--out", c.out_path, "Sketch output path (.agl)")->required();
    build->add_flag("--precise", c.precise, "Print full precision");

    auto* query = app.add_subcommand("query", "Approximate a SUM query from a sketch");
    query->add_option("--sketch", c.sketch_path, "Sketch file")->required();
    query->add_option("--where", c.where, "Predicate expression ('true' for all)")->expected(1);
    query->add_option("--m", c.m, "Queries to guarantee (default 1e6)");
    query->add_option("--p", c.p, "Failure probability (default 1e-6)");
    query->add_flag("--precise", c.precise, "Print full precision");

    auto* compare = app.add_subcommand("compare", "Exact vs lineage vs top-k vs uniform sampling");
    compare->add_option("--csv", c.csv_path, "Input CSV")->required();
    compare->add_option("--attribute", c.attribute, "Aggregated attribute")->capture_default_str();
    compare->add_option("--where", c.where, "Predicate expression")->expected(1);
    compare->add_option("--b", c.b, "Summary size")->required();
    compare->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    compare->add_flag("--precise", c.precise, "Print full precision");

    auto* validate = app.add_subcommand("validate", "Monte Carlo check of the error guarantee");
    validate->add_option("--csv", c.csv_path, "Input CSV")->required();
    validate->add_option("--attribute", c.attribute, "Aggregated attribute")->capture_default_str();
    add_budget(validate);
    validate->add_option("--where", c.where, "Query to check (repeatable)");
    validate->add_option("--trials", c.trials, "Rebuilds per check")->capture_default_str();
    validate->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    validate->add_flag("--free-seed", c.free_seed, "Draw the seed from the system");
    validate->add_flag("--exhaustive", c.exhaustive, "Check all 2^n subset queries (n <= 20)");
    validate->add_flag("--blocks", c.blocks, "Replicate per-value block frequencies");
    validate->add_flag("--equivalence", c.equivalence, "Chi-square in-memory vs streaming builder");
    validate->add_option("--report", c.report_path, "Write the CSV report here");

    auto* budget = app.add_subcommand("budget", "Compute b from (m, p, epsilon)");
    add_budget(budget);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*gen) return cmd_generate(c, out);
        if (*build) return cmd_build(c, out);
        if (*query) return cmd_query(c, out, err);
        if (*compare) return cmd_compare(c, out, err);
        if (*validate) return cmd_validate(c, out, err);
        if (*budget) return cmd_budget(c, out);
    } catch (const ParseError&) {
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace aggline::cli
