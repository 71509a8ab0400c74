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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aggline/approx_query.hpp"
#include "aggline/errors.hpp"
#include "aggline/relation.hpp"
#include "aggline/sampler.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace aggline::service {

using json = nlohmann::json;

/// Guarantee used to certify epsilon when a request names none.
inline constexpr std::uint64_t kDefaultM = 1'000'000;
inline constexpr double kDefaultP = 1e-6;

/// Error carrying an HTTP status; rendered as {code, message, detail}.
class HttpError : public Error {
public:
    HttpError(int status, std::string code, const std::string& message, std::string detail = {})
        : Error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

    int status() const noexcept { return status_; }
    const std::string& code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    int status_;
    std::string code_;
    std::string detail_;
};

/// {"clauses": [{"attribute": a, "op": o, "value": v | "values": [..] |
/// "low": l, "high": h}]}. Null or a missing "clauses" key is the
/// always-true predicate. Throws HttpError(400).
Predicate predicate_from_json(const json& j);
json predicate_to_json(const Predicate& p);

json answer_to_json(const ApproxAnswer& answer);

/// In-memory registry of datasets, sketches and per-sketch query logs.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::optional<std::filesystem::path> snapshot_dir)
        : snapshot_dir_(std::move(snapshot_dir)) {}

    json add_dataset(std::string_view csv, std::string name = "dataset");
    json dataset(const std::string& id) const;
    /// Drops the relation; sketches built from it stay queryable.
    json evict_dataset(const std::string& id);
    json build_sketch(const std::string& dataset_id, const json& request);
    json sketch(const std::string& id) const;
    json query(const std::string& sketch_id, const json& request);
    json exact_query(const std::string& dataset_id, const json& request) const;
    json log(const std::string& sketch_id, std::optional<std::size_t> limit) const;
    json stats(const std::string& sketch_id) const;

    /// The relation behind a dataset id, or nullptr once evicted.
    std::shared_ptr<const Relation> relation(const std::string& id) const;

private:
    struct LogEntry {
        Predicate predicate;
        json answer;
        std::int64_t timestamp_ms;
    };
    struct SketchEntry {
        std::shared_ptr<const LineageSketch> sketch;
        GuaranteeParams guarantee;
        std::string dataset_id;
        mutable std::mutex log_mutex;
        std::vector<LogEntry> log;
    };

    std::shared_ptr<SketchEntry> find_sketch(const std::string& id) const;
    json describe(const std::string& id, const SketchEntry& e) const;

    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const Relation>> datasets_;
    std::map<std::string, std::shared_ptr<SketchEntry>> sketches_;
    std::uint64_t next_dataset_ = 1;
    std::uint64_t next_sketch_ = 1;
    std::optional<std::filesystem::path> snapshot_dir_;
};

/// Registers every endpoint of the catalog on `server`.
void install_routes(httplib::Server& server, Catalog& catalog);

}  // namespace aggline::service
