#include "dyadlss/embeddings.hpp"

#include "dyadlss/error.hpp"
#include "dyadlss/numfmt.hpp"
#include "dyadlss/random.hpp"
#include "dyadlss/text.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace dyadlss::embeddings {
namespace {

constexpr const char* kModule = "embeddings";
constexpr std::string_view kMagic = "DYSE1";

// float-typed JSON so vector entries parse straight to float32 (bit-exact
// round trip of shortest float repr)
using json_f32 = nlohmann::basic_json<std::map, std::vector, std::string, bool, std::int64_t, std::uint64_t, float>;

void put_le(std::string& out, std::uint64_t value, std::size_t bytes) {
    for (std::size_t i = 0; i < bytes; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    template <class U>
    U get_le(const char* what) {
        need(sizeof(U), what);
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return v;
    }

    std::string_view bytes(std::size_t n, const char* what) {
        need(n, what);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n, const char* what) const {
        if (data_.size() - pos_ < n) {
            throw DataError(kModule, std::string("binary embeddings truncated while reading ") + what);
        }
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(kModule, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string describe(const TurnKey& key) {
    return "(" + key.couple_id + ", " + std::string(dyadlss::to_string(key.kind)) + ", " + std::to_string(key.turn) +
           ")";
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::imported_file: return "imported-file";
        case Provenance::test_provider: return "test-provider";
        case Provenance::external: return "external";
        case Provenance::synthetic: return "synthetic";
    }
    return "unknown";
}

EmbeddingSet::EmbeddingSet(std::size_t dim, Provenance provenance, std::string source)
    : dim_(dim), provenance_(provenance), source_(std::move(source)) {
    if (dim_ == 0) throw DataError(kModule, "embedding dimension must be positive");
}

void EmbeddingSet::insert(TurnKey key, std::vector<float> values) {
    if (values.size() != dim_) {
        throw DataError(kModule, "dimension mismatch for " + describe(key) + ": expected " + std::to_string(dim_) +
                                     ", got " + std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DataError(kModule, "non-finite entry at index " + std::to_string(i) + " of " + describe(key));
        }
    }
    const std::string name = describe(key);
    auto [it, inserted] = vectors_.emplace(std::move(key), std::move(values));
    if (!inserted) throw DataError(kModule, "duplicate vector for " + name);
}

std::span<const float> EmbeddingSet::at(const TurnKey& key) const {
    auto it = vectors_.find(key);
    if (it == vectors_.end()) throw DataError(kModule, "missing embedding for turn " + describe(key));
    return it->second;
}

std::vector<TurnKey> corpus_keys(const corpus::Corpus& corpus) {
    std::vector<TurnKey> keys;
    keys.reserve(corpus.turn_count());
    for (const auto& conv : corpus.conversations) {
        for (const auto& turn : conv.turns) {
            keys.push_back({conv.couple_id, conv.kind, static_cast<std::uint32_t>(turn.index)});
        }
    }
    return keys;
}

std::vector<std::span<const float>> conversation_vectors(const corpus::Conversation& conv, const EmbeddingSet& set) {
    std::vector<std::span<const float>> out;
    out.reserve(conv.turns.size());
    std::string missing;
    for (const auto& turn : conv.turns) {
        TurnKey key{conv.couple_id, conv.kind, static_cast<std::uint32_t>(turn.index)};
        auto it = set.entries().find(key);
        if (it == set.entries().end()) {
            missing += (missing.empty() ? "" : ", ") + describe(key);
            continue;
        }
        out.emplace_back(it->second);
    }
    if (!missing.empty()) throw DataError(kModule, "missing embedding for turn(s) " + missing);
    return out;
}

void check_coverage(const EmbeddingSet& set, std::span<const TurnKey> expected) {
    std::vector<std::string> missing;
    std::set<TurnKey> wanted;
    for (const auto& key : expected) {
        wanted.insert(key);
        if (!set.contains(key)) missing.push_back(describe(key));
    }
    std::vector<std::string> orphans;
    for (const auto& [key, _] : set.entries()) {
        if (!wanted.contains(key)) orphans.push_back(describe(key));
    }
    if (missing.empty() && orphans.empty()) return;
    std::ostringstream msg;
    msg << "embedding keys do not match the corpus:";
    if (!missing.empty()) {
        msg << " " << missing.size() << " missing turn(s):";
        for (const auto& m : missing) msg << ' ' << m;
        msg << ';';
    }
    if (!orphans.empty()) {
        msg << " " << orphans.size() << " orphan vector(s):";
        for (const auto& o : orphans) msg << ' ' << o;
        msg << ';';
    }
    throw DataError(kModule, msg.str());
}

EmbeddingSet parse_jsonl(std::string_view data, Provenance provenance, std::string source) {
    std::optional<EmbeddingSet> set;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t end = data.find('\n', pos);
        if (end == std::string_view::npos) end = data.size();
        std::string_view line = data.substr(pos, end - pos);
        pos = end + 1;
        ++lineno;
        if (text::trim(line).empty()) continue;

        json_f32 obj;
        try {
            obj = json_f32::parse(line);
        } catch (const json_f32::parse_error& e) {
            throw ParseError(kModule, lineno, std::string("malformed JSON: ") + e.what());
        }
        const auto str_field = [&](const char* name) {
            auto it = obj.find(name);
            if (it == obj.end() || !it->is_string()) {
                throw ParseError(kModule, lineno, std::string("missing string field '") + name + "'");
            }
            return it->get<std::string>();
        };
        TurnKey key;
        key.couple_id = str_field("couple_id");
        auto kind = parse_kind(str_field("kind"));
        if (!kind) throw ParseError(kModule, lineno, "unknown kind");
        key.kind = *kind;
        auto turn = obj.find("turn");
        if (turn == obj.end() || !turn->is_number_unsigned() || turn->get<std::uint64_t>() > UINT32_MAX) {
            throw ParseError(kModule, lineno, "field 'turn' must be a non-negative integer");
        }
        key.turn = static_cast<std::uint32_t>(turn->get<std::uint64_t>());
        auto vec = obj.find("vector");
        if (vec == obj.end() || !vec->is_array()) throw ParseError(kModule, lineno, "missing array field 'vector'");

        std::vector<float> values;
        values.reserve(vec->size());
        for (const auto& x : *vec) {
            if (x.is_null()) {
                // NaN and infinities serialize as null in most JSON writers
                values.push_back(std::numeric_limits<float>::quiet_NaN());
            } else if (x.is_number()) {
                values.push_back(x.get<float>());
            } else {
                throw ParseError(kModule, lineno, "vector entries must be numbers");
            }
        }
        if (!set) set.emplace(values.size(), provenance, source);
        try {
            set->insert(std::move(key), std::move(values));
        } catch (const DataError& e) {
            throw ParseError(kModule, lineno, e.what());
        }
    }
    if (!set) throw DataError(kModule, "embeddings file holds no vectors");
    return std::move(*set);
}

EmbeddingSet parse_binary(std::string_view data, Provenance provenance, std::string source) {
    Reader in(data);
    if (in.bytes(kMagic.size(), "magic") != kMagic) throw DataError(kModule, "bad magic: expected DYSE1");
    const auto dim = in.get_le<std::uint32_t>("dimension");
    const auto count = in.get_le<std::uint64_t>("record count");
    EmbeddingSet set(dim, provenance, std::move(source));
    for (std::uint64_t r = 0; r < count; ++r) {
        TurnKey key;
        const auto id_len = in.get_le<std::uint16_t>("couple_id length");
        key.couple_id = std::string(in.bytes(id_len, "couple_id"));
        const auto kind = in.get_le<std::uint8_t>("kind");
        if (kind > 1) throw DataError(kModule, "record " + std::to_string(r) + ": kind byte must be 0 or 1");
        key.kind = static_cast<Kind>(kind);
        key.turn = in.get_le<std::uint32_t>("turn");
        std::vector<float> values(dim);
        for (auto& v : values) v = std::bit_cast<float>(in.get_le<std::uint32_t>("vector"));
        set.insert(std::move(key), std::move(values));
    }
    if (!in.at_end()) throw DataError(kModule, "trailing bytes after the last record");
    return set;
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    const std::string source = path.filename().string();
    if (data.starts_with(kMagic)) return parse_binary(data, Provenance::imported_file, source);
    return parse_jsonl(data, Provenance::imported_file, source);
}

EmbeddingSet import_embeddings(const std::filesystem::path& path, std::span<const TurnKey> expected) {
    EmbeddingSet set = read_embeddings(path);
    check_coverage(set, expected);
    return set;
}

std::string serialize_jsonl(const EmbeddingSet& set) {
    std::string out;
    for (const auto& [key, values] : set.entries()) {
        out += "{\"couple_id\":";
        out += nlohmann::json(key.couple_id).dump();
        out += ",\"kind\":\"";
        out += dyadlss::to_string(key.kind);
        out += "\",\"turn\":";
        out += std::to_string(key.turn);
        out += ",\"vector\":[";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out.push_back(',');
            out += format_number(values[i]);
        }
        out += "]}\n";
    }
    return out;
}

std::string serialize_binary(const EmbeddingSet& set) {
    std::string out(kMagic);
    put_le(out, set.dim(), 4);
    put_le(out, set.size(), 8);
    for (const auto& [key, values] : set.entries()) {
        if (key.couple_id.size() > UINT16_MAX) throw DataError(kModule, "couple_id too long for binary format");
        put_le(out, key.couple_id.size(), 2);
        out += key.couple_id;
        put_le(out, static_cast<std::uint64_t>(key.kind), 1);
        put_le(out, key.turn, 4);
        for (float v : values) put_le(out, std::bit_cast<std::uint32_t>(v), 4);
    }
    return out;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set, FileFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(kModule, "cannot write " + path.string());
    const std::string data = format == FileFormat::jsonl ? serialize_jsonl(set) : serialize_binary(set);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::vector<double> normalize(std::span<const double> v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    if (!(ss > 0.0)) throw NumericError(kModule, "cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(ss);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
    return out;
}

std::vector<float> test_provider_embed(std::string_view body, std::size_t dim, std::uint64_t seed) {
    if (dim < 2) throw DataError(kModule, "test provider needs dimension >= 2");
    const auto tokens = text::tokenize(body);
    if (tokens.empty()) throw DataError(kModule, "test provider cannot embed empty text");

    std::vector<std::int64_t> counts(dim, 0);
    for (const auto& tok : tokens) {
        const std::uint64_t h = splitmix64(fnv1a64(tok) ^ splitmix64(seed));
        const std::size_t bucket = static_cast<std::size_t>(h % dim);
        counts[bucket] += (h >> 63) ? -1 : 1;
    }
    std::vector<double> v(counts.begin(), counts.end());
    std::vector<double> unit;
    try {
        unit = normalize(v);
    } catch (const NumericError&) {
        throw NumericError(kModule, "test provider: hashed tokens cancel to a zero vector");
    }
    return {unit.begin(), unit.end()};
}

EmbeddingSet embed_with_test_provider(const corpus::Corpus& corpus, std::size_t dim, std::uint64_t seed) {
    EmbeddingSet set(dim, Provenance::test_provider, "test-provider:dim=" + std::to_string(dim) + ":seed=" +
                                                         std::to_string(seed));
    for (const auto& conv : corpus.conversations) {
        for (const auto& turn : conv.turns) {
            set.insert({conv.couple_id, conv.kind, static_cast<std::uint32_t>(turn.index)},
                       test_provider_embed(turn.text, dim, seed));
        }
    }
    return set;
}

}  // namespace dyadlss::embeddings
