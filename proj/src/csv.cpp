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

#include "aggline/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <unordered_set>

#include "aggline/errors.hpp"

namespace aggline {

namespace {

// Splits one logical CSV record. Returns false on unbalanced quotes.
bool split_fields(std::string_view line, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty() && !was_quoted) {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else {
            field += c;
        }
    }
    if (quoted) return false;
    out.push_back(std::move(field));
    return true;
}

bool parse_number(std::string_view text, double& out) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

bool read_record(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

bool needs_quoting(std::string_view s) {
    return s.find_first_of(",\"\n\r") != std::string_view::npos || s.empty();
}

void write_text(std::ostream& out, std::string_view s) {
    if (!needs_quoting(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

}  // namespace

Relation ingest_csv(std::istream& source, const SchemaHints& hints, std::string name) {
    std::string line;
    if (!read_record(source, line) || line.empty()) throw IngestError("empty input", 0);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<std::string> header;
    if (!split_fields(line, header)) throw IngestError("malformed header", 0);
    {
        std::unordered_set<std::string> seen;
        for (const auto& h : header) {
            if (h.empty()) throw IngestError("empty column name in header", 0);
            if (!seen.insert(h).second) throw IngestError("duplicate column '" + h + "'", 0);
            if (h == kFrequencyAttribute) {
                throw IngestError("column name '" + h + "' is reserved", 0);
            }
        }
    }
    for (const auto& [attr, kind] : hints) {
        if (std::find(header.begin(), header.end(), attr) == header.end()) {
            throw IngestError("schema hint for missing column '" + attr + "'", 0);
        }
    }

    std::vector<std::string> fields;
    std::size_t row = 0;
    // Schema is fixed by the first data row unless hinted.
    std::optional<Table> table;
    while (read_record(source, line)) {
        if (line.empty()) continue;
        ++row;
        if (!split_fields(line, fields)) {
            throw IngestError("row " + std::to_string(row) + ": unbalanced quotes", row);
        }
        if (fields.size() != header.size()) {
            throw IngestError("row " + std::to_string(row) + ": expected " +
                                  std::to_string(header.size()) + " fields, found " +
                                  std::to_string(fields.size()),
                              row);
        }
        if (!table) {
            std::vector<Attribute> schema;
            for (std::size_t c = 0; c < header.size(); ++c) {
                AttributeKind kind = AttributeKind::categorical;
                if (auto it = hints.find(header[c]); it != hints.end()) {
                    kind = it->second;
                } else if (double d; parse_number(fields[c], d)) {
                    kind = AttributeKind::numeric;
                }
                schema.push_back({header[c], kind});
            }
            table.emplace(std::move(schema));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            auto& col = table->mutable_column(c);
            if (auto* num = std::get_if<NumericColumn>(&col)) {
                double d = 0;
                if (!parse_number(fields[c], d)) {
                    throw IngestError("row " + std::to_string(row) + ": attribute '" + header[c] +
                                          "' value '" + fields[c] + "' is not a number",
                                      row);
                }
                if (d < 0) {
                    throw IngestError("row " + std::to_string(row) + ": attribute '" + header[c] +
                                          "' has negative value " + fields[c],
                                      row);
                }
                num->values.push_back(d == 0 ? 0.0 : d);
            } else {
                std::get<CategoricalColumn>(col).push_back(fields[c]);
            }
        }
        table->mutable_ids().push_back(row - 1);
    }
    if (!table) throw IngestError("empty input: no data rows", 0);
    return Relation(std::move(name), std::move(*table));
}

void export_csv(const Relation& rel, std::ostream& sink) {
    const auto& table = rel.table();
    const auto& schema = table.schema();
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (c > 0) sink << ',';
        write_text(sink, schema[c].name);
    }
    sink << '\n';

    std::vector<const Column*> cols;
    for (std::size_t c = 0; c < schema.size(); ++c) cols.push_back(&table.column(c));

    char buf[64];
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c > 0) sink << ',';
            if (const auto* num = std::get_if<NumericColumn>(cols[c])) {
                auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), num->values[r]);
                sink.write(buf, end - buf);
            } else {
                write_text(sink, std::get<CategoricalColumn>(*cols[c]).at(r));
            }
        }
        sink << '\n';
    }
}

}  // namespace aggline
