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

#include "aggline/service.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "aggline/csv.hpp"
#include "aggline/summary.hpp"
#include "httplib.h"

namespace aggline::service {

namespace {

Comparator parse_op(const std::string& op) {
    static const std::map<std::string, Comparator> ops{
        {"=", Comparator::eq},        {"eq", Comparator::eq},      {"!=", Comparator::ne},
        {"ne", Comparator::ne},       {"<", Comparator::lt},       {"lt", Comparator::lt},
        {"<=", Comparator::le},       {"le", Comparator::le},      {">", Comparator::gt},
        {"gt", Comparator::gt},       {">=", Comparator::ge},      {"ge", Comparator::ge},
        {"in", Comparator::in_set},   {"between", Comparator::in_range},
    };
    auto it = ops.find(op);
    if (it == ops.end()) throw HttpError(400, "bad_predicate", "unknown comparator '" + op + "'");
    return it->second;
}

Value value_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw HttpError(400, "bad_predicate", "predicate operands must be numbers or strings", j.dump());
}

json value_to_json(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::get<std::string>(v);
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw HttpError(400, "bad_request", std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

Predicate predicate_from_json(const json& j) {
    Predicate p;
    if (j.is_null()) return p;
    if (!j.is_object()) throw HttpError(400, "bad_predicate", "predicate must be a JSON object");
    if (!j.contains("clauses")) return p;
    if (!j["clauses"].is_array()) throw HttpError(400, "bad_predicate", "'clauses' must be an array");
    for (const auto& c : j["clauses"]) {
        if (!c.is_object() || !c.contains("attribute") || !c["attribute"].is_string() ||
            !c.contains("op") || !c["op"].is_string()) {
            throw HttpError(400, "bad_predicate", "each clause needs string 'attribute' and 'op'", c.dump());
        }
        Clause clause;
        clause.attribute = c["attribute"].get<std::string>();
        clause.op = parse_op(c["op"].get<std::string>());
        if (clause.op == Comparator::in_set) {
            if (!c.contains("values") || !c["values"].is_array()) {
                throw HttpError(400, "bad_predicate", "'in' needs a 'values' array", c.dump());
            }
            for (const auto& v : c["values"]) clause.operands.push_back(value_from_json(v));
        } else if (clause.op == Comparator::in_range) {
            if (!c.contains("low") || !c.contains("high")) {
                throw HttpError(400, "bad_predicate", "'between' needs 'low' and 'high'", c.dump());
            }
            clause.operands = {value_from_json(c["low"]), value_from_json(c["high"])};
        } else {
            if (!c.contains("value")) throw HttpError(400, "bad_predicate", "clause needs 'value'", c.dump());
            clause.operands.push_back(value_from_json(c["value"]));
        }
        p.clauses.push_back(std::move(clause));
    }
    return p;
}

json predicate_to_json(const Predicate& p) {
    json clauses = json::array();
    for (const auto& c : p.clauses) {
        json j{{"attribute", c.attribute}};
        switch (c.op) {
            case Comparator::in_set: {
                j["op"] = "in";
                json values = json::array();
                for (const auto& v : c.operands) values.push_back(value_to_json(v));
                j["values"] = std::move(values);
                break;
            }
            case Comparator::in_range:
                j["op"] = "between";
                j["low"] = value_to_json(c.operands.at(0));
                j["high"] = value_to_json(c.operands.at(1));
                break;
            default:
                j["op"] = std::string(to_string(c.op));
                j["value"] = value_to_json(c.operands.at(0));
        }
        clauses.push_back(std::move(j));
    }
    return json{{"clauses", std::move(clauses)}};
}

json answer_to_json(const ApproxAnswer& a) {
    json j{{"kind", std::string(to_string(a.kind))},
           {"estimate", a.estimate},
           {"matched_entries", a.matched_entries},
           {"matched_frequency_mass", a.matched_frequency_mass},
           {"sample_sum", a.sample_sum},
           {"S", a.total_sum}};
    j["epsilon"] = a.epsilon ? json(*a.epsilon) : json(nullptr);
    j["additive_bound"] = a.additive_bound ? json(*a.additive_bound) : json(nullptr);
    json flags = json::array();
    j["relative_bound"] = nullptr;
    if (a.epsilon) {
        const auto rel = relative_error_report(a);
        j["relative_bound"] = finite_or_null(rel.relative_error);
        if (rel.below_resolution) flags.push_back("below-resolution");
    }
    j["flags"] = std::move(flags);
    return j;
}

json Catalog::add_dataset(std::string_view csv, std::string name) {
    std::istringstream in{std::string(csv)};
    std::shared_ptr<const Relation> rel;
    try {
        rel = std::make_shared<const Relation>(ingest_csv(in, {}, std::move(name)));
    } catch (const IngestError& e) {
        throw HttpError(400, "bad_csv", e.what(), e.row() > 0 ? "row " + std::to_string(e.row()) : "");
    }
    std::string id;
    {
        std::unique_lock lock(mutex_);
        id = "d" + std::to_string(next_dataset_++);
        datasets_.emplace(id, rel);
    }
    return dataset(id);
}

std::shared_ptr<const Relation> Catalog::relation(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw HttpError(404, "not_found", "unknown dataset '" + id + "'");
    return it->second;
}

json Catalog::dataset(const std::string& id) const {
    const auto rel = relation(id);
    if (!rel) return json{{"id", id}, {"evicted", true}};
    json attributes = json::array();
    for (const auto& a : rel->schema()) {
        attributes.push_back(
            {{"name", a.name}, {"kind", a.kind == AttributeKind::numeric ? "numeric" : "categorical"}});
    }
    return json{{"id", id},
                {"name", rel->name()},
                {"n", rel->size()},
                {"attributes", std::move(attributes)},
                {"totals", rel->totals()},
                {"evicted", false}};
}

json Catalog::evict_dataset(const std::string& id) {
    std::unique_lock lock(mutex_);
    auto it = datasets_.find(id);
    if (it == datasets_.end()) throw HttpError(404, "not_found", "unknown dataset '" + id + "'");
    it->second.reset();
    return json{{"id", id}, {"evicted", true}};
}

json Catalog::build_sketch(const std::string& dataset_id, const json& request) {
    const auto rel = relation(dataset_id);
    if (!rel) throw HttpError(410, "evicted", "dataset '" + dataset_id + "' was evicted");
    if (!request.is_object()) throw HttpError(400, "bad_request", "request body must be a JSON object");

    const auto attribute = optional_field<std::string>(request, "attribute");
    if (!attribute) throw HttpError(400, "bad_request", "'attribute' is required");
    const auto b = optional_field<std::uint64_t>(request, "b");
    const auto m = optional_field<std::uint64_t>(request, "m");
    const auto p = optional_field<double>(request, "p");
    const auto eps = optional_field<double>(request, "epsilon");
    const auto k = optional_field<std::size_t>(request, "k").value_or(kDefaultSummaryCount);
    const auto seed = optional_field<std::uint64_t>(request, "seed").value_or(0);
    const bool select = optional_field<bool>(request, "select").value_or(true);

    GuaranteeParams g{m.value_or(kDefaultM), p.value_or(kDefaultP), 1.0};
    std::uint64_t budget = 0;
    try {
        if (b && eps) throw HttpError(400, "bad_request", "give either 'b' or ('m', 'p', 'epsilon'), not both");
        if (b) {
            budget = *b;
            if (budget < 1) throw ParameterError("b must be at least 1");
        } else {
            if (!eps || !m || !p) throw HttpError(400, "bad_request", "give either 'b' or all of 'm', 'p', 'epsilon'");
            g.epsilon = *eps;
            budget = compute_budget(g);
        }
        g.epsilon = error_for_budget(budget, g.m, g.p);
    } catch (const ParameterError& e) {
        throw HttpError(400, "bad_parameters", e.what());
    }

    SummarySet set;
    try {
        if (!rel->table().find(*attribute)) throw UnknownAttributeError(*attribute);
        std::vector<Predicate> benchmarks;
        if (request.contains("benchmarks")) {
            for (const auto& q : request["benchmarks"]) benchmarks.push_back(predicate_from_json(q));
        } else {
            rel->total(*attribute);
            benchmarks = default_benchmarks(*rel, *attribute);
        }
        set = select ? build_summary_set(*rel, *attribute, budget, k, std::move(benchmarks), seed)
                     : build_sketches(*rel, *attribute, budget, std::max<std::size_t>(k, 1),
                                      std::move(benchmarks), seed);
    } catch (const UnknownAttributeError& e) {
        throw HttpError(422, "unknown_attribute", e.what());
    } catch (const PredicateError& e) {
        throw HttpError(422, "bad_attribute", e.what());
    } catch (const DegenerateRelationError& e) {
        throw HttpError(422, "degenerate_attribute", e.what());
    } catch (const ParameterError& e) {
        throw HttpError(400, "bad_parameters", e.what());
    }

    auto entry = std::make_shared<SketchEntry>();
    entry->sketch = std::make_shared<const LineageSketch>(select ? select_summary(set) : set.sketches.front());
    entry->guarantee = g;
    entry->dataset_id = dataset_id;

    std::string id;
    {
        std::unique_lock lock(mutex_);
        id = "s" + std::to_string(next_sketch_++);
        sketches_.emplace(id, entry);
    }
    if (snapshot_dir_) {
        std::filesystem::create_directories(*snapshot_dir_);
        std::ofstream out(*snapshot_dir_ / (id + ".agl"), std::ios::binary);
        save_sketch(*entry->sketch, out);
    }
    auto descriptor = describe(id, *entry);
    descriptor["k"] = set.sketches.size();
    descriptor["scores"] = set.scores;
    return descriptor;
}

std::shared_ptr<Catalog::SketchEntry> Catalog::find_sketch(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = sketches_.find(id);
    if (it == sketches_.end()) throw HttpError(404, "not_found", "unknown sketch '" + id + "'");
    return it->second;
}

json Catalog::describe(const std::string& id, const SketchEntry& e) const {
    const auto& s = *e.sketch;
    return json{{"id", id},
                {"dataset_id", e.dataset_id},
                {"attribute", s.attribute},
                {"b", s.budget},
                {"m", e.guarantee.m},
                {"p", e.guarantee.p},
                {"epsilon_certified", e.guarantee.epsilon},
                {"S", s.total_sum},
                {"distinct_entries", s.size()},
                {"source_n", s.source_n},
                {"seed", s.seed}};
}

json Catalog::sketch(const std::string& id) const {
    const auto e = find_sketch(id);
    return describe(id, *e);
}

json Catalog::query(const std::string& sketch_id, const json& request) {
    const auto e = find_sketch(sketch_id);
    const json& pj = request.is_object() && request.contains("predicate") ? request["predicate"] : json();
    const auto predicate = predicate_from_json(pj);
    ApproxAnswer answer;
    try {
        answer = approx_sum(*e->sketch, predicate, e->guarantee);
    } catch (const Error& err) {
        throw HttpError(400, "bad_predicate", err.what());
    }
    auto j = answer_to_json(answer);
    {
        std::lock_guard lock(e->log_mutex);
        e->log.push_back({predicate, j, now_ms()});
    }
    return j;
}

json Catalog::exact_query(const std::string& dataset_id, const json& request) const {
    const auto rel = relation(dataset_id);
    if (!rel) throw HttpError(410, "evicted", "dataset '" + dataset_id + "' was evicted");
    const json& pj = request.is_object() && request.contains("predicate") ? request["predicate"] : json();
    const auto predicate = predicate_from_json(pj);
    const auto attribute = request.is_object() ? optional_field<std::string>(request, "attribute") : std::nullopt;
    std::string attr;
    if (attribute) {
        attr = *attribute;
    } else if (rel->totals().size() == 1) {
        attr = rel->totals().begin()->first;
    } else {
        throw HttpError(400, "bad_request", "'attribute' is required when the dataset has several numeric attributes");
    }
    try {
        return json{{"exact", exact_sum(*rel, attr, predicate)}, {"attribute", attr}};
    } catch (const Error& err) {
        throw HttpError(400, "bad_predicate", err.what());
    }
}

json Catalog::log(const std::string& sketch_id, std::optional<std::size_t> limit) const {
    const auto e = find_sketch(sketch_id);
    std::lock_guard lock(e->log_mutex);
    std::size_t begin = 0;
    if (limit && *limit < e->log.size()) begin = e->log.size() - *limit;
    json entries = json::array();
    for (std::size_t i = begin; i < e->log.size(); ++i) {
        entries.push_back({{"predicate", predicate_to_json(e->log[i].predicate)},
                           {"answer", e->log[i].answer},
                           {"timestamp_ms", e->log[i].timestamp_ms}});
    }
    return json{{"sketch_id", sketch_id}, {"entries", std::move(entries)}};
}

json Catalog::stats(const std::string& sketch_id) const {
    const auto e = find_sketch(sketch_id);
    const auto& s = *e->sketch;
    const auto values = s.entries.numeric(s.attribute);
    std::map<double, std::map<std::uint64_t, std::uint64_t>, std::greater<>> blocks;
    for (std::size_t r = 0; r < s.size(); ++r) ++blocks[values[r]][s.frequencies[r]];

    json out = json::array();
    std::uint64_t total = 0;
    for (const auto& [value, by_fr] : blocks) {
        std::uint64_t distinct = 0, mass = 0;
        json rows = json::array();
        for (const auto& [fr, count] : by_fr) {
            distinct += count;
            mass += fr * count;
            rows.push_back({{"fr", fr}, {"count", count}, {"contribution_per_entry", fr * s.scale()}});
        }
        total += mass;
        out.push_back({{"value", value}, {"distinct", distinct}, {"bag_mass", mass}, {"frequencies", std::move(rows)}});
    }
    return json{{"sketch_id", sketch_id},
                {"attribute", s.attribute},
                {"b", s.budget},
                {"S", s.total_sum},
                {"scale", s.scale()},
                {"blocks", std::move(out)},
                {"frequency_total", total}};
}

void install_routes(httplib::Server& server, Catalog& catalog) {
    using Handler = std::function<json(const httplib::Request&)>;
    auto wrap = [](int ok_status, Handler h) {
        return [ok_status, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            auto fail = [&](int status, const std::string& code, const std::string& message,
                            const std::string& detail) {
                res.status = status;
                res.set_content(json{{"code", code}, {"message", message}, {"detail", detail}}.dump(),
                                "application/json");
            };
            try {
                res.status = ok_status;
                res.set_content(h(req).dump(), "application/json");
            } catch (const HttpError& e) {
                fail(e.status(), e.code(), e.what(), e.detail());
            } catch (const json::exception& e) {
                fail(400, "bad_json", "request body is not valid JSON", e.what());
            } catch (const Error& e) {
                fail(400, "bad_request", e.what(), "");
            } catch (const std::exception& e) {
                fail(500, "internal", e.what(), "");
            }
        };
    };
    auto body_json = [](const httplib::Request& req) {
        return req.body.empty() ? json::object() : json::parse(req.body);
    };

    server.Post("/datasets", wrap(201, [&catalog](const httplib::Request& req) {
                    const auto name = req.has_param("name") ? req.get_param_value("name") : "dataset";
                    return catalog.add_dataset(req.body, name);
                }));
    server.Get(R"(/datasets/([^/]+))", wrap(200, [&catalog](const httplib::Request& req) {
                   return catalog.dataset(req.matches[1]);
               }));
    server.Delete(R"(/datasets/([^/]+))", wrap(200, [&catalog](const httplib::Request& req) {
                      return catalog.evict_dataset(req.matches[1]);
                  }));
    server.Post(R"(/datasets/([^/]+)/sketches)", wrap(201, [&catalog, body_json](const httplib::Request& req) {
                    return catalog.build_sketch(req.matches[1], body_json(req));
                }));
    server.Post(R"(/datasets/([^/]+)/exact-query)", wrap(200, [&catalog, body_json](const httplib::Request& req) {
                    return catalog.exact_query(req.matches[1], body_json(req));
                }));
    server.Get(R"(/sketches/([^/]+))", wrap(200, [&catalog](const httplib::Request& req) {
                   return catalog.sketch(req.matches[1]);
               }));
    server.Post(R"(/sketches/([^/]+)/query)", wrap(200, [&catalog, body_json](const httplib::Request& req) {
                    return catalog.query(req.matches[1], body_json(req));
                }));
    server.Get(R"(/sketches/([^/]+)/log)", wrap(200, [&catalog](const httplib::Request& req) {
                   std::optional<std::size_t> limit;
                   if (req.has_param("limit")) {
                       try {
                           limit = std::stoul(req.get_param_value("limit"));
                       } catch (const std::exception&) {
                           throw HttpError(400, "bad_request", "limit must be a nonnegative integer");
                       }
                   }
                   return catalog.log(req.matches[1], limit);
               }));
    server.Get(R"(/sketches/([^/]+)/stats)", wrap(200, [&catalog](const httplib::Request& req) {
                   return catalog.stats(req.matches[1]);
               }));
}

}  // namespace aggline::service
