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

#include <bit>
#include <boost/crc.hpp>
#include <charconv>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "aggline/errors.hpp"
#include "aggline/summary.hpp"

namespace aggline {

namespace {

static_assert(std::endian::native == std::endian::little, "sketch I/O assumes little endian");

class Writer {
public:
    template <typename T>
    void put(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void put_string(std::string_view s) {
        put(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void put_raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    const std::vector<char>& bytes() const noexcept { return bytes_; }

private:
    std::vector<char> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string get_string() {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    template <typename T>
    std::vector<T> get_array(std::uint64_t count) {
        if (count > (bytes_.size() - pos_) / sizeof(T)) truncated();
        std::vector<T> out(count);
        std::memcpy(out.data(), bytes_.data() + pos_, count * sizeof(T));
        pos_ += count * sizeof(T);
        return out;
    }
    std::size_t position() const noexcept { return pos_; }

private:
    void need(std::size_t n) const {
        if (n > bytes_.size() - pos_) truncated();
    }
    [[noreturn]] static void truncated() { throw CorruptionError("sketch file is truncated"); }

    std::span<const char> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32(std::span<const char> bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

std::string header_line(const LineageSketch& s) {
    std::ostringstream out;
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), s.total_sum);
    out << kSketchFileMagic << ' ' << static_cast<int>(kSketchFormatVersion)
        << " kind=" << to_string(s.kind) << " attribute=" << s.attribute
        << " S=" << std::string_view(buf, end - buf) << " b=" << s.budget << " seed=" << s.seed
        << " n=" << s.source_n << " entries=" << s.size() << '\n';
    return out.str();
}

}  // namespace

void save_sketch(const LineageSketch& sketch, std::ostream& sink) {
    if (auto problem = check_invariants(sketch)) {
        throw ParameterError("refusing to save invalid sketch: " + *problem);
    }
    const auto& table = sketch.entries;
    const std::uint64_t count = sketch.size();

    Writer w;
    w.put_raw(kSketchPayloadMagic);
    w.put(kSketchFormatVersion);
    w.put(static_cast<std::uint8_t>(sketch.kind));
    w.put_string(sketch.attribute);
    w.put(sketch.total_sum);
    w.put(sketch.budget);
    w.put(sketch.seed);
    w.put(sketch.source_n);
    w.put(count);
    w.put(static_cast<std::uint32_t>(table.schema().size()));
    for (const auto& a : table.schema()) {
        w.put(static_cast<std::uint8_t>(a.kind));
        w.put_string(a.name);
    }
    for (auto id : table.ids()) w.put<std::uint64_t>(id);
    for (auto f : sketch.frequencies) w.put<std::uint64_t>(f);
    for (std::size_t c = 0; c < table.schema().size(); ++c) {
        const auto& col = table.column(c);
        if (const auto* num = std::get_if<NumericColumn>(&col)) {
            for (double v : num->values) w.put(v);
        } else {
            const auto& cat = std::get<CategoricalColumn>(col);
            w.put(static_cast<std::uint32_t>(cat.dictionary().size()));
            for (const auto& word : cat.dictionary()) w.put_string(word);
            for (auto code : cat.codes()) w.put(code);
        }
    }
    const auto crc = crc32(w.bytes());

    sink << header_line(sketch);
    sink.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    sink.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    if (!sink) throw Error("failed to write sketch");
}

LineageSketch load_sketch(std::istream& source) {
    std::string line;
    if (!std::getline(source, line) || line.rfind(kSketchFileMagic, 0) != 0) {
        throw CorruptionError("not a sketch file (missing header)");
    }
    {
        std::istringstream fields(line.substr(kSketchFileMagic.size()));
        int version = -1;
        if (!(fields >> version)) throw CorruptionError("sketch header has no version");
        if (version != kSketchFormatVersion) {
            throw VersionError("unsupported sketch format version " + std::to_string(version));
        }
    }
    const std::vector<char> payload{std::istreambuf_iterator<char>(source),
                                    std::istreambuf_iterator<char>()};
    const std::size_t min_size = kSketchPayloadMagic.size() + 2 + sizeof(std::uint32_t);
    if (payload.size() < min_size ||
        std::string_view(payload.data(), kSketchPayloadMagic.size()) != kSketchPayloadMagic) {
        throw CorruptionError("sketch payload magic missing");
    }
    const auto version = static_cast<std::uint8_t>(payload[kSketchPayloadMagic.size()]);
    if (version != kSketchFormatVersion) {
        throw VersionError("unsupported sketch payload version " + std::to_string(version));
    }

    const std::span<const char> body(payload.data(), payload.size() - sizeof(std::uint32_t));
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, payload.data() + body.size(), sizeof(stored_crc));
    if (crc32(body) != stored_crc) throw CorruptionError("sketch checksum mismatch");

    Reader r(body);
    r.get_array<char>(kSketchPayloadMagic.size());
    r.get<std::uint8_t>();
    LineageSketch s;
    const auto kind = r.get<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(SummaryKind::uniform)) {
        throw CorruptionError("unknown summary kind " + std::to_string(kind));
    }
    s.kind = static_cast<SummaryKind>(kind);
    s.attribute = r.get_string();
    s.total_sum = r.get<double>();
    s.budget = r.get<std::uint64_t>();
    s.seed = r.get<std::uint64_t>();
    s.source_n = r.get<std::uint64_t>();
    const auto count = r.get<std::uint64_t>();
    const auto attrs = r.get<std::uint32_t>();
    std::vector<Attribute> schema;
    for (std::uint32_t i = 0; i < attrs; ++i) {
        const auto k = r.get<std::uint8_t>();
        if (k > static_cast<std::uint8_t>(AttributeKind::categorical)) {
            throw CorruptionError("unknown attribute kind");
        }
        schema.push_back({r.get_string(), static_cast<AttributeKind>(k)});
    }
    try {
        s.entries = Table(schema);
    } catch (const ParameterError& e) {
        throw CorruptionError(e.what());
    }
    s.entries.mutable_ids() = r.get_array<std::uint64_t>(count);
    s.frequencies = r.get_array<std::uint64_t>(count);
    for (std::size_t c = 0; c < schema.size(); ++c) {
        auto& col = s.entries.mutable_column(c);
        if (auto* num = std::get_if<NumericColumn>(&col)) {
            num->values = r.get_array<double>(count);
        } else {
            const auto words = r.get<std::uint32_t>();
            std::vector<std::string> dict;
            for (std::uint32_t i = 0; i < words; ++i) dict.push_back(r.get_string());
            auto codes = r.get_array<std::uint32_t>(count);
            for (auto code : codes) {
                if (code >= dict.size()) throw CorruptionError("categorical code out of range");
            }
            std::get<CategoricalColumn>(col).assign(std::move(dict), std::move(codes));
        }
    }
    if (r.position() != body.size()) throw CorruptionError("trailing bytes in sketch payload");
    if (auto problem = check_invariants(s)) {
        throw CorruptionError("sketch invariant violated: " + *problem);
    }
    return s;
}

}  // namespace aggline
