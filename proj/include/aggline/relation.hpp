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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace aggline {

using RecordId = std::uint64_t;

/// Name of the frequency attribute carried by lineage sketches. Input
/// schemas may not use it and predicates may not reference it.
inline constexpr std::string_view kFrequencyAttribute = "Fr";

enum class AttributeKind : std::uint8_t { numeric = 0, categorical = 1 };

struct Attribute {
    std::string name;
    AttributeKind kind = AttributeKind::numeric;

    friend bool operator==(const Attribute&, const Attribute&) = default;
};

using Value = std::variant<double, std::string>;

std::string to_string(const Value& value);

struct NumericColumn {
    std::vector<double> values;

    friend bool operator==(const NumericColumn&, const NumericColumn&) = default;
};

/// Dictionary-encoded text column.
class CategoricalColumn {
public:
    std::uint32_t intern(std::string_view text);
    std::optional<std::uint32_t> find(std::string_view text) const;

    const std::vector<std::string>& dictionary() const noexcept { return dictionary_; }
    const std::vector<std::uint32_t>& codes() const noexcept { return codes_; }
    std::vector<std::uint32_t>& codes() noexcept { return codes_; }

    void push_back(std::string_view text) { codes_.push_back(intern(text)); }
    const std::string& at(std::size_t row) const { return dictionary_[codes_[row]]; }

    /// Replaces the dictionary wholesale (used by deserialization).
    void assign(std::vector<std::string> dictionary, std::vector<std::uint32_t> codes);

    friend bool operator==(const CategoricalColumn& a, const CategoricalColumn& b) {
        return a.dictionary_ == b.dictionary_ && a.codes_ == b.codes_;
    }

private:
    std::vector<std::string> dictionary_;
    std::vector<std::uint32_t> codes_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

using Column = std::variant<NumericColumn, CategoricalColumn>;

/// Materialized view of one row.
struct Record {
    RecordId id = 0;
    std::map<std::string, Value> values;
};

/// Counts column accesses. Lets tests prove that a code path never touched
/// a given table.
class AccessCounter {
public:
    AccessCounter() = default;
    AccessCounter(const AccessCounter& other) noexcept : count_(other.count()) {}
    AccessCounter& operator=(const AccessCounter& other) noexcept {
        count_.store(other.count(), std::memory_order_relaxed);
        return *this;
    }

    void bump() const noexcept { count_.fetch_add(1, std::memory_order_relaxed); }
    std::uint64_t count() const noexcept { return count_.load(std::memory_order_relaxed); }

private:
    mutable std::atomic<std::uint64_t> count_{0};
};

/// Columnar table: a schema, one column per attribute and a record id per row.
class Table {
public:
    Table() = default;
    explicit Table(std::vector<Attribute> schema);

    const std::vector<Attribute>& schema() const noexcept { return schema_; }
    std::size_t rows() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }

    std::optional<std::size_t> find(std::string_view name) const noexcept;
    /// Throws UnknownAttributeError.
    std::size_t index_of(std::string_view name) const;

    const Column& column(std::size_t index) const;
    /// Values of a numeric attribute. Throws UnknownAttributeError, or
    /// PredicateError when the attribute is categorical.
    std::span<const double> numeric(std::string_view name) const;

    const std::vector<RecordId>& ids() const noexcept { return ids_; }
    Value value(std::size_t row, std::size_t column) const;
    Record record(std::size_t row) const;

    /// Copy of the given rows (in the given order), keeping ids and schema.
    Table select_rows(std::span<const std::size_t> rows) const;

    // Construction interface; a Table is not meant to change once published.
    Column& mutable_column(std::size_t index) { return columns_[index]; }
    std::vector<RecordId>& mutable_ids() noexcept { return ids_; }

    /// Appends one row; values must follow schema order and kinds.
    void append(RecordId id, std::span<const Value> values);

    std::uint64_t column_reads() const noexcept { return reads_.count(); }

    friend bool operator==(const Table& a, const Table& b) {
        return a.schema_ == b.schema_ && a.ids_ == b.ids_ && a.columns_ == b.columns_;
    }

private:
    std::vector<Attribute> schema_;
    std::vector<Column> columns_;
    std::vector<RecordId> ids_;
    AccessCounter reads_;
};

/// Immutable relation: a table plus its per-attribute totals S.
class Relation {
public:
    Relation() = default;
    /// Validates nonnegativity and uniqueness of ids, then computes totals with
    /// compensated summation.
    Relation(std::string name, Table table);

    const std::string& name() const noexcept { return name_; }
    const Table& table() const noexcept { return table_; }
    const std::vector<Attribute>& schema() const noexcept { return table_.schema(); }
    std::size_t size() const noexcept { return table_.rows(); }

    const std::map<std::string, double>& totals() const noexcept { return totals_; }
    /// Throws UnknownAttributeError for categorical or missing attributes.
    double total(std::string_view attribute) const;

private:
    std::string name_;
    Table table_;
    std::map<std::string, double> totals_;
};

enum class Comparator : std::uint8_t { eq, ne, lt, le, gt, ge, in_set, in_range };

std::string_view to_string(Comparator op) noexcept;

/// One filter. Scalar comparators take one operand, in_set any number,
/// in_range exactly two (inclusive bounds).
struct Clause {
    std::string attribute;
    Comparator op = Comparator::eq;
    std::vector<Value> operands;

    friend bool operator==(const Clause&, const Clause&) = default;
};

/// Conjunction of clauses; the empty conjunction is always true.
struct Predicate {
    std::vector<Clause> clauses;

    static Predicate always() { return {}; }

    Predicate& where(std::string attribute, Comparator op, Value operand);
    Predicate& where_in(std::string attribute, std::vector<Value> set);
    Predicate& where_between(std::string attribute, Value low, Value high);

    /// Conjunction of both clause lists.
    Predicate conjoin(const Predicate& other) const;

    friend bool operator==(const Predicate&, const Predicate&) = default;
};

std::string to_string(const Predicate& predicate);

/// A predicate compiled against one table's columns. Keeps raw pointers into
/// the table, so it must not outlive it.
class BoundPredicate {
public:
    /// Throws UnknownAttributeError and PredicateError.
    BoundPredicate(const Predicate& predicate, const Table& table);

    bool matches(std::size_t row) const noexcept;
    bool always_true() const noexcept { return numeric_.empty() && categorical_.empty() && !never_; }

private:
    struct NumericTest {
        const double* data;
        Comparator op;
        double low;
        double high;
        std::vector<double> set;
    };
    struct CategoricalTest {
        const std::uint32_t* codes;
        std::vector<char> accept;
    };

    std::vector<NumericTest> numeric_;
    std::vector<CategoricalTest> categorical_;
    bool never_ = false;
};

/// Sum of `attribute` over the records matching `q`.
double exact_sum(const Relation& rel, std::string_view attribute, const Predicate& q);

/// Ids of the records matching every clause, ascending.
std::vector<RecordId> match_ids(const Relation& rel, const Predicate& q);

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

}  // namespace aggline
