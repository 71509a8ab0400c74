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

#include "aggline/relation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "aggline/errors.hpp"

namespace aggline {

namespace {

std::string format_number(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, end);
}

const std::string& operand_text(const Value& v, std::string& scratch) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    scratch = format_number(std::get<double>(v));
    return scratch;
}

double operand_number(const Clause& clause, const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    const auto& text = std::get<std::string>(v);
    double out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw PredicateError("attribute '" + clause.attribute +
                             "' is numeric but operand '" + text + "' is not a number");
    }
    return out;
}

void check_arity(const Clause& clause) {
    const std::size_t n = clause.operands.size();
    bool ok = true;
    switch (clause.op) {
        case Comparator::in_set: ok = true; break;
        case Comparator::in_range: ok = n == 2; break;
        default: ok = n == 1; break;
    }
    if (!ok) {
        throw PredicateError("clause on '" + clause.attribute + "' has " +
                             std::to_string(n) + " operands for comparator " +
                             std::string(to_string(clause.op)));
    }
}

}  // namespace

std::string to_string(const Value& value) {
    std::string scratch;
    return operand_text(value, scratch);
}

std::uint32_t CategoricalColumn::intern(std::string_view text) {
    auto it = index_.find(std::string(text));
    if (it != index_.end()) return it->second;
    const auto code = static_cast<std::uint32_t>(dictionary_.size());
    dictionary_.emplace_back(text);
    index_.emplace(dictionary_.back(), code);
    return code;
}

std::optional<std::uint32_t> CategoricalColumn::find(std::string_view text) const {
    auto it = index_.find(std::string(text));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void CategoricalColumn::assign(std::vector<std::string> dictionary,
                               std::vector<std::uint32_t> codes) {
    dictionary_ = std::move(dictionary);
    codes_ = std::move(codes);
    index_.clear();
    for (std::uint32_t i = 0; i < dictionary_.size(); ++i) index_.emplace(dictionary_[i], i);
}

Table::Table(std::vector<Attribute> schema) : schema_(std::move(schema)) {
    std::unordered_set<std::string> seen;
    columns_.reserve(schema_.size());
    for (const auto& a : schema_) {
        if (!seen.insert(a.name).second) {
            throw ParameterError("duplicate attribute '" + a.name + "'");
        }
        if (a.kind == AttributeKind::numeric) {
            columns_.emplace_back(NumericColumn{});
        } else {
            columns_.emplace_back(CategoricalColumn{});
        }
    }
}

std::optional<std::size_t> Table::find(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (schema_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t Table::index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw UnknownAttributeError(std::string(name));
}

const Column& Table::column(std::size_t index) const {
    reads_.bump();
    return columns_.at(index);
}

std::span<const double> Table::numeric(std::string_view name) const {
    const auto& col = column(index_of(name));
    const auto* num = std::get_if<NumericColumn>(&col);
    if (num == nullptr) {
        throw PredicateError("attribute '" + std::string(name) + "' is not numeric");
    }
    return num->values;
}

Value Table::value(std::size_t row, std::size_t index) const {
    const auto& col = column(index);
    if (const auto* num = std::get_if<NumericColumn>(&col)) return num->values.at(row);
    return std::get<CategoricalColumn>(col).at(row);
}

Record Table::record(std::size_t row) const {
    Record r;
    r.id = ids_.at(row);
    for (std::size_t i = 0; i < schema_.size(); ++i) r.values.emplace(schema_[i].name, value(row, i));
    return r;
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
    reads_.bump();
    Table out;
    out.schema_ = schema_;
    out.ids_.reserve(rows.size());
    for (auto r : rows) out.ids_.push_back(ids_.at(r));
    out.columns_.reserve(columns_.size());
    for (const auto& col : columns_) {
        if (const auto* num = std::get_if<NumericColumn>(&col)) {
            NumericColumn copy;
            copy.values.reserve(rows.size());
            for (auto r : rows) copy.values.push_back(num->values[r]);
            out.columns_.emplace_back(std::move(copy));
        } else {
            const auto& cat = std::get<CategoricalColumn>(col);
            std::vector<std::uint32_t> codes;
            codes.reserve(rows.size());
            for (auto r : rows) codes.push_back(cat.codes()[r]);
            CategoricalColumn copy;
            copy.assign(cat.dictionary(), std::move(codes));
            out.columns_.emplace_back(std::move(copy));
        }
    }
    return out;
}

void Table::append(RecordId id, std::span<const Value> values) {
    if (values.size() != schema_.size()) {
        throw ParameterError("row has " + std::to_string(values.size()) + " values, schema has " +
                             std::to_string(schema_.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (auto* num = std::get_if<NumericColumn>(&columns_[i])) {
            const auto* d = std::get_if<double>(&values[i]);
            if (d == nullptr) throw ParameterError("attribute '" + schema_[i].name + "' expects a number");
            num->values.push_back(*d);
        } else {
            std::string scratch;
            std::get<CategoricalColumn>(columns_[i]).push_back(operand_text(values[i], scratch));
        }
    }
    ids_.push_back(id);
}

void CompensatedSum::add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        compensation_ += (sum_ - t) + x;
    } else {
        compensation_ += (x - t) + sum_;
    }
    sum_ = t;
}

Relation::Relation(std::string name, Table table)
    : name_(std::move(name)), table_(std::move(table)) {
    {
        std::unordered_set<RecordId> seen;
        seen.reserve(table_.rows());
        for (auto id : table_.ids()) {
            if (!seen.insert(id).second) {
                throw ParameterError("duplicate record id " + std::to_string(id));
            }
        }
    }
    for (std::size_t c = 0; c < table_.schema().size(); ++c) {
        const auto& attr = table_.schema()[c];
        if (attr.name == kFrequencyAttribute) {
            throw ParameterError("attribute name '" + attr.name + "' is reserved");
        }
        if (attr.kind != AttributeKind::numeric) continue;
        const auto& values = std::get<NumericColumn>(table_.column(c)).values;
        CompensatedSum s;
        for (std::size_t r = 0; r < values.size(); ++r) {
            if (!(values[r] >= 0.0) || !std::isfinite(values[r])) {
                throw ParameterError("attribute '" + attr.name + "' has invalid value " +
                                     format_number(values[r]) + " at record " +
                                     std::to_string(table_.ids()[r]));
            }
            s.add(values[r]);
        }
        totals_.emplace(attr.name, s.value());
    }
}

double Relation::total(std::string_view attribute) const {
    auto it = totals_.find(std::string(attribute));
    if (it == totals_.end()) {
        if (table_.find(attribute)) {
            throw PredicateError("attribute '" + std::string(attribute) + "' is not numeric");
        }
        throw UnknownAttributeError(std::string(attribute));
    }
    return it->second;
}

std::string_view to_string(Comparator op) noexcept {
    switch (op) {
        case Comparator::eq: return "=";
        case Comparator::ne: return "!=";
        case Comparator::lt: return "<";
        case Comparator::le: return "<=";
        case Comparator::gt: return ">";
        case Comparator::ge: return ">=";
        case Comparator::in_set: return "IN";
        case Comparator::in_range: return "BETWEEN";
    }
    return "?";
}

Predicate& Predicate::where(std::string attribute, Comparator op, Value operand) {
    clauses.push_back(Clause{std::move(attribute), op, {std::move(operand)}});
    return *this;
}

Predicate& Predicate::where_in(std::string attribute, std::vector<Value> set) {
    clauses.push_back(Clause{std::move(attribute), Comparator::in_set, std::move(set)});
    return *this;
}

Predicate& Predicate::where_between(std::string attribute, Value low, Value high) {
    clauses.push_back(
        Clause{std::move(attribute), Comparator::in_range, {std::move(low), std::move(high)}});
    return *this;
}

Predicate Predicate::conjoin(const Predicate& other) const {
    Predicate out = *this;
    out.clauses.insert(out.clauses.end(), other.clauses.begin(), other.clauses.end());
    return out;
}

std::string to_string(const Predicate& predicate) {
    if (predicate.clauses.empty()) return "true";
    auto literal = [](const Value& v) {
        if (std::holds_alternative<double>(v)) return to_string(v);
        std::string quoted = "'";
        for (char ch : std::get<std::string>(v)) {
            if (ch == '\'') quoted += '\'';
            quoted += ch;
        }
        return quoted + "'";
    };
    std::string out;
    for (std::size_t i = 0; i < predicate.clauses.size(); ++i) {
        const auto& c = predicate.clauses[i];
        if (i > 0) out += " AND ";
        out += c.attribute;
        out += ' ';
        out += to_string(c.op);
        out += ' ';
        if (c.op == Comparator::in_set) {
            out += '(';
            for (std::size_t j = 0; j < c.operands.size(); ++j) {
                if (j > 0) out += ", ";
                out += literal(c.operands[j]);
            }
            out += ')';
        } else if (c.op == Comparator::in_range) {
            out += literal(c.operands[0]) + " AND " + literal(c.operands[1]);
        } else {
            out += literal(c.operands[0]);
        }
    }
    return out;
}

BoundPredicate::BoundPredicate(const Predicate& predicate, const Table& table) {
    for (const auto& clause : predicate.clauses) {
        if (clause.attribute == kFrequencyAttribute) {
            throw PredicateError("predicates may not reference the frequency attribute '" +
                                 std::string(kFrequencyAttribute) + "'");
        }
        const std::size_t index = table.index_of(clause.attribute);
        check_arity(clause);
        const auto& col = table.column(index);

        if (const auto* num = std::get_if<NumericColumn>(&col)) {
            NumericTest t{num->values.data(), clause.op, 0.0, 0.0, {}};
            if (clause.op == Comparator::in_set) {
                for (const auto& v : clause.operands) t.set.push_back(operand_number(clause, v));
                std::sort(t.set.begin(), t.set.end());
            } else {
                t.low = operand_number(clause, clause.operands[0]);
                t.high = clause.op == Comparator::in_range ? operand_number(clause, clause.operands[1])
                                                           : t.low;
            }
            numeric_.push_back(std::move(t));
            continue;
        }

        const auto& cat = std::get<CategoricalColumn>(col);
        CategoricalTest t{cat.codes().data(), std::vector<char>(cat.dictionary().size(), 0)};
        std::string scratch;
        switch (clause.op) {
            case Comparator::eq:
            case Comparator::in_set:
                for (const auto& v : clause.operands) {
                    if (auto code = cat.find(operand_text(v, scratch))) t.accept[*code] = 1;
                }
                break;
            case Comparator::ne:
                std::fill(t.accept.begin(), t.accept.end(), 1);
                if (auto code = cat.find(operand_text(clause.operands[0], scratch))) t.accept[*code] = 0;
                break;
            default:
                throw PredicateError("comparator " + std::string(to_string(clause.op)) +
                                     " is not allowed on categorical attribute '" +
                                     clause.attribute + "'");
        }
        if (std::none_of(t.accept.begin(), t.accept.end(), [](char c) { return c != 0; })) {
            never_ = true;
        }
        categorical_.push_back(std::move(t));
    }
}

bool BoundPredicate::matches(std::size_t row) const noexcept {
    if (never_) return false;
    for (const auto& t : numeric_) {
        const double v = t.data[row];
        bool ok = false;
        switch (t.op) {
            case Comparator::eq: ok = v == t.low; break;
            case Comparator::ne: ok = v != t.low; break;
            case Comparator::lt: ok = v < t.low; break;
            case Comparator::le: ok = v <= t.low; break;
            case Comparator::gt: ok = v > t.low; break;
            case Comparator::ge: ok = v >= t.low; break;
            case Comparator::in_range: ok = v >= t.low && v <= t.high; break;
            case Comparator::in_set: ok = std::binary_search(t.set.begin(), t.set.end(), v); break;
        }
        if (!ok) return false;
    }
    for (const auto& t : categorical_) {
        if (t.accept[t.codes[row]] == 0) return false;
    }
    return true;
}

double exact_sum(const Relation& rel, std::string_view attribute, const Predicate& q) {
    rel.total(attribute);  // validates the attribute
    const auto values = rel.table().numeric(attribute);
    const BoundPredicate bound(q, rel.table());
    CompensatedSum s;
    for (std::size_t r = 0; r < values.size(); ++r) {
        if (bound.matches(r)) s.add(values[r]);
    }
    return s.value();
}

std::vector<RecordId> match_ids(const Relation& rel, const Predicate& q) {
    const BoundPredicate bound(q, rel.table());
    std::vector<RecordId> out;
    const auto& ids = rel.table().ids();
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (bound.matches(r)) out.push_back(ids[r]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace aggline
