#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <set>

#include "qaforge/errors.hpp"
#include "qaforge/util.hpp"

using namespace qaforge;

TEST_CASE("fnv1a64_hex is stable and distinct") {
    CHECK(fnv1a64_hex("") == fnv1a64_hex(""));
    CHECK(fnv1a64_hex("a") != fnv1a64_hex("b"));
    CHECK(fnv1a64_hex("abc").size() == 16);
}

TEST_CASE("tsv escaping round-trips control characters") {
    const std::string nasty = "a\tb\nc\rd\\e";
    CHECK(tsv_unescape(tsv_escape(nasty)) == nasty);
    CHECK(tsv_escape(nasty).find('\t') == std::string::npos);
    CHECK(tsv_escape(nasty).find('\n') == std::string::npos);
}

TEST_CASE("split_tsv_line keeps empty fields") {
    const auto f = split_tsv_line("a\t\tb");
    REQUIRE(f.size() == 3);
    CHECK(f[1].empty());
}

TEST_CASE("format_double trims exponent zeros") {
    CHECK(format_double(5e-5) == "5e-5");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(100) == "100");
    CHECK(std::stod(format_double(0.30000000000000004)) == 0.30000000000000004);
}

TEST_CASE("deterministic rng reproduces sequences") {
    DeterministicRng a(42);
    DeterministicRng b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    DeterministicRng c(43);
    CHECK(DeterministicRng(42).next() != c.next());
}

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<std::atomic<int>> hits(500);
    parallel_for(hits.size(), 8, [&](size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("parallel_for rethrows the first task exception") {
    CHECK_THROWS_AS(
        parallel_for(16, 4, [](size_t i) { if (i == 7) throw Error("boom"); }),
        Error);
}
