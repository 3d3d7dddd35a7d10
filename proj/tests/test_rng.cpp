#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "tsad/errors.hpp"
#include "tsad/rng.hpp"

using namespace tsad;

TEST_CASE("same seed reproduces the same sequence") {
    RngStream a(42);
    RngStream b(42);
    for (int i = 0; i < 100; ++i)
        CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different sequences") {
    RngStream a(1);
    RngStream b(2);
    bool any_diff = false;
    for (int i = 0; i < 10; ++i)
        any_diff |= (a.next_u64() != b.next_u64());
    CHECK(any_diff);
}

TEST_CASE("child streams depend on the construction seed, not on state") {
    RngStream fresh(7);
    RngStream drained(7);
    for (int i = 0; i < 50; ++i)
        drained.next_u64();
    RngStream c1 = fresh.child(3);
    RngStream c2 = drained.child(3);
    CHECK(c1.seed() == c2.seed());
    CHECK(c1.next_u64() == c2.next_u64());
}

TEST_CASE("children with distinct tags are distinct") {
    RngStream root(9);
    std::set<std::uint64_t> seeds;
    for (std::uint64_t tag = 0; tag < 200; ++tag)
        seeds.insert(root.child(tag).seed());
    CHECK(seeds.size() == 200);
}

TEST_CASE("child streams look independent of the parent") {
    RngStream root(1234);
    RngStream child = root.child(1);
    // Crude correlation check on 1000 paired doubles.
    double mean_p = 0.0, mean_c = 0.0;
    std::vector<double> ps, cs;
    for (int i = 0; i < 1000; ++i) {
        ps.push_back(root.next_double());
        cs.push_back(child.next_double());
        mean_p += ps.back();
        mean_c += cs.back();
    }
    mean_p /= 1000.0;
    mean_c /= 1000.0;
    double cov = 0.0, vp = 0.0, vc = 0.0;
    for (int i = 0; i < 1000; ++i) {
        cov += (ps[i] - mean_p) * (cs[i] - mean_c);
        vp += (ps[i] - mean_p) * (ps[i] - mean_p);
        vc += (cs[i] - mean_c) * (cs[i] - mean_c);
    }
    CHECK(std::abs(cov / std::sqrt(vp * vc)) < 0.1);
}

TEST_CASE("next_double lies in [0,1)") {
    RngStream rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.next_double();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("next_below stays under the bound and covers small ranges") {
    RngStream rng(11);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t v = rng.next_below(5);
        CHECK(v < 5);
        seen.insert(v);
    }
    CHECK(seen.size() == 5);
    CHECK_THROWS_AS(rng.next_below(0), ArgumentError);
}

TEST_CASE("next_below(1) is always zero") {
    RngStream rng(13);
    for (int i = 0; i < 100; ++i)
        CHECK(rng.next_below(1) == 0);
}

TEST_CASE("uniform_int is inclusive on both ends") {
    RngStream rng(17);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const std::int64_t v = rng.uniform_int(-3, 3);
        CHECK(v >= -3);
        CHECK(v <= 3);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK(rng.uniform_int(4, 4) == 4);
    CHECK_THROWS_AS(rng.uniform_int(2, 1), ArgumentError);
}

TEST_CASE("next_normal has roughly standard moments") {
    RngStream rng(23);
    const int n = 20000;
    double mean = 0.0;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = rng.next_normal();
        mean += xs[i];
    }
    mean /= n;
    double var = 0.0;
    for (double x : xs)
        var += (x - mean) * (x - mean);
    var /= n;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("stream_tag packs kind and index without collisions") {
    std::set<std::uint64_t> tags;
    for (auto kind : {StreamTag::Series, StreamTag::Member, StreamTag::FeatureSubset,
                      StreamTag::Partition, StreamTag::Subsample,
                      StreamTag::DetectorInit, StreamTag::BatchShuffle,
                      StreamTag::Synthetic})
        for (std::uint64_t idx = 0; idx < 10; ++idx)
            tags.insert(stream_tag(kind, idx));
    CHECK(tags.size() == 80);
    CHECK(stream_tag(StreamTag::Member, 3) ==
          ((std::uint64_t{2} << 32) | 3));
}
