#include <catch2/catch_amalgamated.hpp>

#include "slidereg/conv_score.hpp"
#include "slidereg/similarity.hpp"
#include "test_support.hpp"

using namespace slidereg;

TEST_CASE("ncc basics") {
    Image a = testsup::smooth_random_image(12, 10, 21);
    CHECK(ncc(a, a).value == Catch::Approx(1.0));

    Image scaled = a;
    for (auto& v : scaled.samples) v = 2.0 * v + 5.0;
    CHECK(ncc(a, scaled).value == Catch::Approx(1.0));

    Image negated = a;
    for (auto& v : negated.samples) v = -v;
    CHECK(ncc(a, negated).value == Catch::Approx(-1.0));

    NccResult flat = ncc(a, testsup::constant_image(12, 10, 50));
    CHECK(flat.value == 0.0);
    CHECK(flat.degenerate);

    Image other(5, 5, 1);
    CHECK_THROWS_AS(ncc(a, other), error);
}

TEST_CASE("ncc affine-intensity invariance has the sign of the scale", "[property]") {
    Image a = testsup::smooth_random_image(9, 9, 31);
    for (double alpha : {0.5, 3.0, -1.5, -0.25}) {
        Image b = a;
        for (auto& v : b.samples) v = alpha * v + 0.125;
        double expected = alpha > 0 ? 1.0 : -1.0;
        CHECK(ncc(a, b).value == Catch::Approx(expected).margin(1e-12));
    }
}

TEST_CASE("local ncc") {
    SimilarityConfig cfg;
    cfg.window = 5;
    Image a = testsup::smooth_random_image(16, 16, 41);

    SECTION("identical images give 1") {
        LocalNccResult r = local_ncc(a, a, cfg);
        CHECK(r.value == Catch::Approx(1.0).margin(1e-9));
        CHECK_FALSE(r.all_degenerate);
    }
    SECTION("constant images are all-degenerate") {
        Image c = testsup::constant_image(16, 16, 80);
        LocalNccResult r = local_ncc(c, c, cfg);
        CHECK(r.value == 0.0);
        CHECK(r.all_degenerate);
    }
    SECTION("full-image window reduces to ncc") {
        SimilarityConfig full;
        full.window = 15;
        Image b = testsup::smooth_random_image(15, 15, 43);
        Image a2 = testsup::smooth_random_image(15, 15, 44);
        LocalNccResult r = local_ncc(a2, b, full);
        CHECK(r.value == Catch::Approx(ncc(a2, b).value).margin(1e-9));
    }
}

TEST_CASE("mse basics") {
    Image a = testsup::constant_image(4, 4, 0);
    Image b = a;
    for (auto& v : b.samples) v = 1.0;
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(a, b) == Catch::Approx(1.0));
    Image r1 = testsup::smooth_random_image(6, 6, 51);
    Image r2 = testsup::smooth_random_image(6, 6, 52);
    CHECK(mse(r1, r2) == Catch::Approx(mse(r2, r1)));
    CHECK_THROWS_AS(mse(a, testsup::constant_image(3, 3, 0)), error);
}

TEST_CASE("conv score map examples") {
    SECTION("all-zero template gives an all-zero map") {
        Image img = testsup::random_quantized_image(8, 8, 61);
        Image zero = testsup::constant_image(3, 3, 0);
        ScoreMap map = conv_score_map(img, zero);
        for (double v : map.values) CHECK(v == 0.0);
    }
    SECTION("planted template is found at its offset") {
        Image img = testsup::constant_image(16, 16, 0);
        Image tpl = testsup::random_quantized_image(5, 4, 62);
        for (auto& v : tpl.samples) // keep it strictly positive so the peak is unique
            v = (20 + round_half_away(v * 200.0)) / 255.0;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x) img.at(x + 5, y + 3) = tpl.at(x, y);
        ScoreMap map = conv_score_map(img, tpl);
        CHECK(map.argmax_dx == 5);
        CHECK(map.argmax_dy == 3);
    }
    SECTION("template larger than image is rejected") {
        CHECK_THROWS_AS(conv_score_map(testsup::constant_image(4, 4, 0),
                                       testsup::constant_image(5, 5, 0)),
                        error);
    }
}

TEST_CASE("conv score map equals the brute-force definition exactly", "[property]") {
    for (std::uint64_t seed = 70; seed < 74; ++seed) {
        Image img = testsup::random_quantized_image(16, 16, seed);
        Image tpl = testsup::random_quantized_image(5, 5, seed + 100);
        ScoreMap map = conv_score_map(img, tpl);
        REQUIRE(map.width == 12);
        REQUIRE(map.height == 12);
        for (int dy = 0; dy < map.height; ++dy)
            for (int dx = 0; dx < map.width; ++dx) {
                long long acc = 0; // independent double loop on the 8-bit values
                for (int v = 0; v < 5; ++v)
                    for (int u = 0; u < 5; ++u)
                        acc += static_cast<long long>(tpl.at8(u, v)) * img.at8(dx + u, dy + v);
                CHECK(map.at(dx, dy) == double(acc));
            }
    }
}

TEST_CASE("conv score map argmax tie breaks row-major") {
    // two identical peaks; the smaller dy wins
    Image img = testsup::constant_image(7, 7, 0);
    img.at(1, 1) = 1.0;
    img.at(1, 5) = 1.0;
    Image tpl = testsup::constant_image(1, 1, 255);
    ScoreMap map = conv_score_map(img, tpl);
    CHECK(map.argmax_dx == 1);
    CHECK(map.argmax_dy == 1);
}

TEST_CASE("ncc score map finds a planted window") {
    Image img = testsup::smooth_random_image(20, 20, 81);
    Image tpl(6, 6, 1);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) tpl.at(x, y) = img.at(x + 9, y + 4);
    ScoreMap map = ncc_score_map(img, tpl);
    CHECK(map.argmax_dx == 9);
    CHECK(map.argmax_dy == 4);
    CHECK(map.max_value == Catch::Approx(1.0).margin(1e-9));
}
