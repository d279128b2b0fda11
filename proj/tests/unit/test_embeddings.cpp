#include <doctest.h>

#include "dyadlss/embeddings.hpp"
#include "dyadlss/error.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

using namespace dyadlss;
using namespace dyadlss::embeddings;

namespace {

EmbeddingSet random_set(std::size_t dim, std::size_t convs, std::size_t turns, std::uint64_t seed) {
    oracle::Rng rng(seed);
    EmbeddingSet set(dim, Provenance::imported_file);
    for (std::size_t c = 0; c < convs; ++c) {
        for (Kind k : kKinds) {
            for (std::uint32_t t = 0; t < turns; ++t) {
                std::vector<float> v(dim);
                for (auto& x : v) x = static_cast<float>(rng.normal());
                set.insert({"c" + std::to_string(c), k, t}, v);
            }
        }
    }
    return set;
}

bool bit_equal(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.dim() != b.dim() || a.size() != b.size()) return false;
    auto ia = a.entries().begin();
    for (const auto& [key, vec] : b.entries()) {
        if (ia->first != key) return false;
        if (std::memcmp(ia->second.data(), vec.data(), vec.size() * sizeof(float)) != 0) return false;
        ++ia;
    }
    return true;
}

}  // namespace

TEST_CASE("normalize") {
    const std::vector<double> v{3, 4};
    const auto n = normalize(v);
    CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-15));
    const std::vector<double> unit{0, 1};
    CHECK(normalize(unit) == unit);
    const std::vector<double> zero{0, 0};
    CHECK_THROWS_AS(normalize(zero), NumericError);
}

TEST_CASE("insert validates entries") {
    EmbeddingSet set(3, Provenance::imported_file);
    set.insert({"c1", Kind::pleasant, 0}, {1, 2, 3});
    CHECK_THROWS_AS(set.insert({"c1", Kind::pleasant, 1}, {1, 2}), DataError);
    CHECK_THROWS_AS(set.insert({"c1", Kind::pleasant, 0}, {1, 2, 3}), DataError);
    try {
        set.insert({"c9", Kind::conflict, 4}, {1, std::numeric_limits<float>::quiet_NaN(), 3});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("c9") != std::string::npos);
    }
}

TEST_CASE("jsonl and binary round trip bit-exactly") {
    const auto set = random_set(17, 3, 5, 11);
    CHECK(bit_equal(parse_jsonl(serialize_jsonl(set)), set));
    const auto bin = serialize_binary(set);
    CHECK(bin.substr(0, 5) == "DYSE1");
    CHECK(bit_equal(parse_binary(bin), set));

    const auto dir = std::filesystem::temp_directory_path() / "dyadlss_emb_test";
    std::filesystem::create_directories(dir);
    write_embeddings(dir / "e.bin", set, FileFormat::binary);
    write_embeddings(dir / "e.jsonl", set, FileFormat::jsonl);
    CHECK(bit_equal(read_embeddings(dir / "e.bin"), set));
    CHECK(bit_equal(read_embeddings(dir / "e.jsonl"), set));
    std::filesystem::remove_all(dir);
}

TEST_CASE("coverage reports every missing and orphan key") {
    const auto set = random_set(4, 2, 3, 5);
    std::vector<TurnKey> expected;
    for (const auto& [k, v] : set.entries()) expected.push_back(k);
    CHECK_NOTHROW(check_coverage(set, expected));

    auto missing = expected;
    missing.push_back({"c7", Kind::pleasant, 0});
    missing.erase(missing.begin());  // c0/pleasant/0 becomes an orphan
    try {
        check_coverage(set, missing);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("c7") != std::string::npos);
        CHECK(msg.find("c0") != std::string::npos);
    }
}

TEST_CASE("binary parser rejects damage") {
    const auto bin = serialize_binary(random_set(4, 1, 2, 3));
    CHECK_THROWS_AS(parse_binary("DYSE2" + bin.substr(5)), DataError);
    CHECK_THROWS_AS(parse_binary(bin.substr(0, bin.size() - 1)), DataError);
    CHECK_THROWS_AS(parse_binary(bin + "x"), DataError);
}

TEST_CASE("test provider") {
    const auto a = test_provider_embed("a b", 256, 7);
    CHECK(a == test_provider_embed("a b", 256, 7));
    CHECK(a == test_provider_embed("b a", 256, 7));  // token multiset
    CHECK(oracle::brute_cosine(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    const auto xxx = test_provider_embed("x x x", 1024, 7);
    const auto yyy = test_provider_embed("y y y", 1024, 7);
    const auto xy = test_provider_embed("x y", 1024, 7);
    const auto xz = test_provider_embed("x z", 1024, 7);
    const double disjoint = oracle::brute_cosine(xxx, yyy);
    const double shared = oracle::brute_cosine(xy, xz);
    CHECK(std::abs(disjoint) < 1e-12);
    CHECK(shared > disjoint);
    CHECK(shared < 1.0);
    // one shared token out of two each: 1/2 when the three hashes are disjoint
    CHECK(shared == doctest::Approx(0.5).epsilon(1e-6));

    double norm = 0;
    for (float v : xy) norm += static_cast<double>(v) * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(test_provider_embed("a b", 256, 8) != a);
    CHECK_THROWS_AS(test_provider_embed("", 16, 1), DataError);
    CHECK_THROWS_AS(test_provider_embed("...", 16, 1), DataError);
    CHECK_THROWS_AS(test_provider_embed("a", 1, 1), DataError);
}

TEST_CASE("each distinct token lands in one bucket") {
    const auto v = test_provider_embed("hello world", 8, 1);
    double sum_sq = 0;
    for (float x : v) sum_sq += static_cast<double>(x) * x;
    CHECK(sum_sq == doctest::Approx(1.0).epsilon(1e-6));
    std::size_t nonzero = 0;
    for (float x : v) nonzero += x != 0.0f;
    CHECK(nonzero >= 1);
    CHECK(nonzero <= 2);
}
