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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aggline {

// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid numeric parameter (budget, probability, epsilon, k, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// The aggregated attribute sums to zero, so no selection distribution exists.
class DegenerateRelationError : public Error {
public:
    using Error::Error;
};

class UnknownAttributeError : public Error {
public:
    explicit UnknownAttributeError(const std::string& attribute)
        : Error("unknown attribute '" + attribute + "'"), attribute_(attribute) {}

    const std::string& attribute() const noexcept { return attribute_; }

private:
    std::string attribute_;
};

// Predicate is well-typed syntactically but not against the target schema.
class PredicateError : public Error {
public:
    using Error::Error;
};

/// CSV ingestion failure. `row()` is the 1-based data row (0 when the
/// failure is not tied to a row, e.g. empty input or a bad header).
class IngestError : public Error {
public:
    IngestError(const std::string& message, std::size_t row)
        : Error(message), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Predicate expression parse failure; `position()` is a 0-based offset
/// into the expression text.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// Persisted sketch failed a checksum or invariant check.
class CorruptionError : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

}  // namespace aggline
