#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "biometaphor/affect.hpp"
#include "biometaphor/errors.hpp"

using namespace biometaphor;

TEST_CASE("VAPair construction rejects out-of-range components") {
    CHECK_THROWS_AS(VAPair(-0.1, 0.5), ValidationError);
    CHECK_THROWS_AS(VAPair(0.5, 1.1), ValidationError);
    CHECK_NOTHROW(VAPair(0.0, 1.0));
    CHECK(VAPair(0.3, 0.7) == VAPair(0.3 + 1e-10, 0.7 - 1e-10));
    CHECK(VAPair(0.3, 0.7) != VAPair(0.31, 0.7));
}

TEST_CASE("geometry must fit inside the unit square") {
    CHECK_THROWS_AS(CircumplexGeometry(VAPair(0.5, 0.5), 0.6), ValidationError);
    CHECK_THROWS_AS(CircumplexGeometry(VAPair(0.3, 0.5), 0.5), ValidationError);
    CHECK_THROWS_AS(CircumplexGeometry(VAPair(0.5, 0.5), 0.0), ValidationError);
    CHECK_NOTHROW(CircumplexGeometry(VAPair(0.5, 0.5), 0.25));
}

TEST_CASE("prototypical pairs hit the demonstration anchors") {
    const auto pairs = prototypical_va_pairs(8, CircumplexGeometry{});
    REQUIRE(pairs.size() == 8);
    CHECK(pairs[1].valence() == doctest::Approx(0.854).epsilon(1e-3));
    CHECK(pairs[1].arousal() == doctest::Approx(0.854).epsilon(1e-3));
    CHECK(pairs[5].valence() == doctest::Approx(0.146).epsilon(1e-2));
    CHECK(pairs[5].arousal() == doctest::Approx(0.146).epsilon(1e-2));

    const auto quad = prototypical_va_pairs(4, CircumplexGeometry{});
    CHECK(quad[1].valence() == doctest::Approx(0.5));
    CHECK(quad[1].arousal() == doctest::Approx(1.0));

    CHECK_THROWS_AS(prototypical_va_pairs(0, CircumplexGeometry{}), ValidationError);
}

TEST_CASE("polar_of maps axes and anchors") {
    const CircumplexGeometry g;
    auto [a0, e0] = polar_of(VAPair(1.0, 0.5), g);
    CHECK(a0 == doctest::Approx(0.0));
    CHECK(e0 == doctest::Approx(1.0));

    auto [a90, e90] = polar_of(VAPair(0.5, 1.0), g);
    CHECK(a90 == doctest::Approx(90.0));
    CHECK(e90 == doctest::Approx(1.0));

    auto [a45, e45] = polar_of(VAPair(0.854, 0.854), g);
    CHECK(a45 == doctest::Approx(45.0).epsilon(1e-2));
    CHECK(e45 == doctest::Approx(1.0).epsilon(1e-2));

    auto [ac, ec] = polar_of(VAPair(0.5, 0.5), g);
    CHECK(ac == 0.0);
    CHECK(ec == 0.0);
}

TEST_CASE("infer_state reproduces the four quoted pairs") {
    const auto excited = infer_state(VAPair(0.854, 0.854));
    CHECK(excited.family == Family::PositiveActivated);
    CHECK(excited.octant_label == "excitement");
    CHECK(excited.intensity_label == Band::High);

    const auto neutral = infer_state(VAPair(0.5, 0.5));
    CHECK(neutral.family == Family::Neutral);
    CHECK(neutral.octant_label == "neutral");
    CHECK(neutral.extremity == 0.0);

    const auto distress = infer_state(VAPair(0.14, 0.85));
    CHECK(distress.family == Family::NegativeActivated);
    CHECK(distress.octant_label == "distress");
    CHECK(distress.intensity_label == Band::High);

    const auto sad = infer_state(VAPair(0.146, 0.146));
    CHECK(sad.family == Family::NegativeDeactivated);
    CHECK(sad.octant_label == "depression/sadness");
    CHECK(sad.intensity_label == Band::Low);
}

TEST_CASE("band thresholds sit at 0.35 and 0.65 inclusive for medium") {
    CHECK(band_of(0.349) == Band::Low);
    CHECK(band_of(0.35) == Band::Medium);
    CHECK(band_of(0.65) == Band::Medium);
    CHECK(band_of(0.651) == Band::High);
}

TEST_CASE("octant tie at 22.5 degrees resolves to the smaller angle") {
    const auto table = OctantTable::standard();
    CHECK(table.nearest_label(22.5) == "pleasure");
    CHECK(table.nearest_label(67.5) == "excitement");
    CHECK(table.nearest_label(350.0) == "pleasure");
}

TEST_CASE("octant table rejects malformed layouts") {
    std::vector<OctantTable::Entry> entries;
    for (int i = 0; i < 8; ++i) {
        entries.push_back({45.0 * i, "label" + std::to_string(i)});
    }
    auto dup = entries;
    dup[3].label = "label0";
    CHECK_THROWS_AS(OctantTable{dup}, ValidationError);
    auto shifted = entries;
    shifted[2].angle_center_deg = 100.0;
    CHECK_THROWS_AS(OctantTable{shifted}, ValidationError);
}

TEST_CASE("aggregate_group means and errors") {
    CHECK(aggregate_group({VAPair(0.3, 0.7)}) == VAPair(0.3, 0.7));
    CHECK(aggregate_group({VAPair(0, 0), VAPair(1, 1)}) == VAPair(0.5, 0.5));

    const std::vector<double> weights{1.0, 3.0};
    const std::vector<VAPair> pair{VAPair(0, 0), VAPair(1, 1)};
    CHECK(aggregate_group(pair, &weights) == VAPair(0.75, 0.75));

    CHECK_THROWS_AS(aggregate_group({}), ValidationError);
    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(aggregate_group(pair, &zero), ValidationError);
    const std::vector<double> negative{1.0, -1.0};
    CHECK_THROWS_AS(aggregate_group(pair, &negative), ValidationError);
}

TEST_CASE("property: polar round trip recovers angle and extremity") {
    const CircumplexGeometry g;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(0.0, 360.0);
    for (int i = 0; i < 2000; ++i) {
        const double theta = dist(rng);
        auto [angle, extremity] = polar_of(g.point_at(theta), g);
        double diff = std::abs(angle - theta);
        diff = std::min(diff, 360.0 - diff);
        CHECK(diff < 1e-6);
        CHECK(extremity == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("property: reflection about the center flips family polarity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    auto positive = [](Family f) {
        return f == Family::PositiveActivated || f == Family::PositiveDeactivated;
    };
    auto activated = [](Family f) {
        return f == Family::PositiveActivated || f == Family::NegativeActivated;
    };
    for (int i = 0; i < 500; ++i) {
        const double v = dist(rng), a = dist(rng);
        // Stay clear of the axes so the >= tie rule does not flip asymmetrically.
        if (std::abs(v - 0.5) < 0.06 || std::abs(a - 0.5) < 0.06) continue;
        const auto s = infer_state(VAPair(v, a));
        const auto sv = infer_state(VAPair(1.0 - v, a));
        const auto sa = infer_state(VAPair(v, 1.0 - a));
        CHECK(positive(s.family) != positive(sv.family));
        CHECK(activated(s.family) == activated(sv.family));
        CHECK(activated(s.family) != activated(sa.family));
        CHECK(positive(s.family) == positive(sa.family));
    }
}

TEST_CASE("property: infer_state is pure") {
    const VAPair va(0.37, 0.81);
    const auto first = infer_state(va);
    for (int i = 0; i < 10; ++i) {
        const auto again = infer_state(va);
        CHECK(again.octant_label == first.octant_label);
        CHECK(again.family == first.family);
        CHECK(again.angle_deg == first.angle_deg);
        CHECK(again.extremity == first.extremity);
    }
}

TEST_CASE("property: aggregate_group is permutation-invariant and idempotent") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<VAPair> vas;
        const int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) vas.emplace_back(dist(rng), dist(rng));
        auto shuffled = vas;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(aggregate_group(vas) == aggregate_group(shuffled));
    }
    const std::vector<VAPair> same(5, VAPair(0.21, 0.84));
    CHECK(aggregate_group(same) == VAPair(0.21, 0.84));
}
