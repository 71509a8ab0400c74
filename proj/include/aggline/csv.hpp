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

#include <iosfwd>
#include <map>
#include <string>

#include "aggline/relation.hpp"

namespace aggline {

/// Per-attribute kind overrides. Without a hint a column is numeric when its
/// first data cell parses as a number, categorical otherwise.
using SchemaHints = std::map<std::string, AttributeKind>;

/// Reads header-bearing comma-separated text. Fields may be double-quoted
/// ("" escapes a quote). Ids are 0-based row ordinals. Throws IngestError.
Relation ingest_csv(std::istream& source, const SchemaHints& hints = {},
                    std::string name = "relation");

/// Writes the relation in the format ingest_csv reads. Numbers use the
/// shortest representation that round-trips.
void export_csv(const Relation& rel, std::ostream& sink);

}  // namespace aggline
