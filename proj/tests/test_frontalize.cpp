#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lawwarp/frontalize.hpp"
#include "lawwarp/synthetic.hpp"

using namespace lawwarp;

namespace {

constexpr double kPi = 3.14159265358979323846;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

LandmarkSet random_landmarks(std::mt19937_64& rng, int count, double lo = 30.0,
                             double hi = 220.0) {
    LandmarkSet set;
    for (int i = 0; i < count; ++i) {
        set.points.push_back({uniform(rng, lo, hi), uniform(rng, lo, hi)});
    }
    return set;
}

double wrap_angle(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a < -kPi) a += 2.0 * kPi;
    return a;
}

double psnr(const FeatureMap& a, const FeatureMap& b, int margin) {
    double mse = 0.0;
    int count = 0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int r = margin; r < a.height() - margin; ++r) {
            for (int col = margin; col < a.width() - margin; ++col) {
                const double d = static_cast<double>(a.at(c, r, col)) - b.at(c, r, col);
                mse += d * d;
                ++count;
            }
        }
    }
    mse /= count;
    return -10.0 * std::log10(mse);
}

}  // namespace

TEST_CASE("similarity solver") {
    SUBCASE("identity fit") {
        std::mt19937_64 rng(1);
        const LandmarkSet m = random_landmarks(rng, 12);
        const SimilarityTransform t = solve_similarity(m, m);
        CHECK(t.s == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(t.theta) < 1e-12);
        CHECK(std::abs(t.t.x) < 1e-10);
        CHECK(std::abs(t.t.y) < 1e-10);
    }

    SUBCASE("recovers a known transform exactly") {
        std::mt19937_64 rng(2);
        const LandmarkSet m = random_landmarks(rng, 10);
        SimilarityTransform t0;
        t0.s = 2.0;
        t0.theta = 0.3;
        t0.t = {5.0, -7.0};
        const LandmarkSet tmp = apply_to_landmarks(t0, m);
        const SimilarityTransform t = solve_similarity(m, tmp);
        CHECK(t.s == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(t.theta == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(t.t.x == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(t.t.y == doctest::Approx(-7.0).epsilon(1e-9));
        CHECK(alignment_residual(m, tmp, t) <= 1e-18);
    }

    SUBCASE("quarter turn about the centroid") {
        LandmarkSet m;
        m.points = {{10, 10}, {30, 10}, {30, 40}, {10, 40}};
        const Point2 centroid{20, 25};
        LandmarkSet tmp;
        for (const Point2& p : m.points) {
            tmp.points.push_back(
                {centroid.x - (p.y - centroid.y), centroid.y + (p.x - centroid.x)});
        }
        const SimilarityTransform t = solve_similarity(m, tmp);
        CHECK(t.theta == doctest::Approx(kPi / 2.0).epsilon(1e-12));
        CHECK(t.s == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(alignment_residual(m, tmp, t) <= 1e-18);
    }

    SUBCASE("two points are enough") {
        LandmarkSet m;
        m.points = {{0, 0}, {10, 0}};
        LandmarkSet tmp;
        tmp.points = {{5, 5}, {5, 25}};
        const SimilarityTransform t = solve_similarity(m, tmp);
        CHECK(alignment_residual(m, tmp, t) <= 1e-18);
        CHECK(t.s == doctest::Approx(2.0).epsilon(1e-12));
    }

    SUBCASE("perturbing the optimum never improves the residual") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            const LandmarkSet m = random_landmarks(rng, 8);
            LandmarkSet tmp = random_landmarks(rng, 8);
            const SimilarityTransform t = solve_similarity(m, tmp);
            const double best = alignment_residual(m, tmp, t);
            for (int param = 0; param < 4; ++param) {
                for (const double delta : {1e-3, -1e-3}) {
                    SimilarityTransform p = t;
                    switch (param) {
                        case 0: p.s += delta; break;
                        case 1: p.theta += delta; break;
                        case 2: p.t.x += delta; break;
                        case 3: p.t.y += delta; break;
                    }
                    CHECK(alignment_residual(m, tmp, p) >= best - 1e-12);
                }
            }
        }
    }

    SUBCASE("mirrored targets never produce a reflection") {
        std::mt19937_64 rng(4);
        const LandmarkSet m = random_landmarks(rng, 9);
        LandmarkSet mirrored;
        for (const Point2& p : m.points) {
            mirrored.points.push_back({-p.x, p.y});
        }
        const SimilarityTransform t = solve_similarity(m, mirrored);
        CHECK(t.s > 0.0);
        // A proper similarity cannot reproduce a mirror image.
        CHECK(alignment_residual(m, mirrored, t) > 1.0);
        // The solution is still the constrained optimum.
        const double best = alignment_residual(m, mirrored, t);
        for (const double delta : {1e-3, -1e-3}) {
            SimilarityTransform p = t;
            p.theta += delta;
            CHECK(alignment_residual(m, mirrored, p) >= best - 1e-9);
        }
    }

    SUBCASE("errors") {
        std::mt19937_64 rng(5);
        const LandmarkSet m = random_landmarks(rng, 5);
        const LandmarkSet shorter = random_landmarks(rng, 4);
        CHECK_THROWS_AS(solve_similarity(m, shorter), std::invalid_argument);
        LandmarkSet single;
        single.points = {{1, 1}};
        CHECK_THROWS_AS(solve_similarity(single, single), std::invalid_argument);
        LandmarkSet coincident;
        coincident.points = {{3, 4}, {3, 4}, {3, 4}};
        const LandmarkSet tmp = random_landmarks(rng, 3);
        CHECK_THROWS_AS(solve_similarity(coincident, tmp), DegenerateInputError);
    }
}

TEST_CASE("similarity inversion and composition") {
    SUBCASE("identity inverts to identity") {
        const SimilarityTransform id;
        const SimilarityTransform inv = invert_similarity(id);
        CHECK(inv.s == 1.0);
        CHECK(inv.theta == 0.0);
        CHECK(inv.t.x == 0.0);
        CHECK(inv.t.y == 0.0);
    }

    SUBCASE("hand-checked inverse") {
        SimilarityTransform t;
        t.s = 2.0;
        t.t = {4.0, 0.0};
        const SimilarityTransform inv = invert_similarity(t);
        CHECK(inv.s == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(inv.theta == 0.0);
        CHECK(inv.t.x == doctest::Approx(-2.0).epsilon(1e-15));
        CHECK(inv.t.y == doctest::Approx(0.0).epsilon(1e-15));
    }

    SUBCASE("compose with inverse is the identity") {
        std::mt19937_64 rng(6);
        for (int trial = 0; trial < 100; ++trial) {
            SimilarityTransform t;
            t.s = uniform(rng, 0.5, 2.0);
            t.theta = uniform(rng, -3.1, 3.1);
            t.t = {uniform(rng, -20, 20), uniform(rng, -20, 20)};
            const SimilarityTransform id = compose(t, invert_similarity(t));
            CHECK(id.s == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(wrap_angle(id.theta)) < 1e-12);
            CHECK(std::abs(id.t.x) < 1e-12 * std::max(1.0, std::abs(t.t.x)) + 1e-12);
            CHECK(std::abs(id.t.y) < 1e-12 * std::max(1.0, std::abs(t.t.y)) + 1e-12);
        }
    }

    SUBCASE("landmarks transform as p' = sRp + t") {
        SimilarityTransform t;
        t.s = 1.5;
        t.theta = kPi / 2.0;
        t.t = {1.0, 2.0};
        const Point2 q = t.apply({2.0, 0.0});
        CHECK(q.x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(q.y == doctest::Approx(5.0).epsilon(1e-12));
    }
}

TEST_CASE("image warping through a similarity") {
    SUBCASE("identity transform reproduces the image bit for bit") {
        const FeatureMap img = smooth_test_image(31, 3, 24, 31, 3);
        const FeatureMap out = apply_similarity(img, SimilarityTransform{});
        CHECK(out.raw() == img.raw());
    }

    SUBCASE("integer translation shifts the image") {
        const FeatureMap img = smooth_test_image(32, 1, 20, 20, 3);
        SimilarityTransform t;
        t.t = {3.0, -2.0};
        const FeatureMap out = apply_similarity(img, t);
        for (int r = 0; r < 20; ++r) {
            for (int c = 0; c < 20; ++c) {
                const int sr = r + 2, sc = c - 3;
                if (sr >= 0 && sr < 20 && sc >= 0 && sc < 20) {
                    CHECK(out.at(0, r, c) == img.at(0, sr, sc));
                }
            }
        }
    }

    SUBCASE("apply then invert round trip keeps 40 dB on the interior") {
        const FeatureMap img = smooth_test_image(33, 1, 128, 128, 2);
        SimilarityTransform t;
        t.s = 1.03;
        t.theta = 0.12;
        t.t = {2.5, -1.5};
        const FeatureMap once = apply_similarity(img, t);
        const FeatureMap back = apply_similarity(once, invert_similarity(t));
        CHECK(psnr(img, back, 13) >= 40.0);
    }
}

TEST_CASE("gaussian soft mask") {
    SUBCASE("tiny sigma approximates the indicator") {
        const RectF rect{8, 6, 10, 9};
        const FeatureMap mask = gaussian_soft_mask(24, 28, rect, 0.1);
        for (int r = 0; r < 24; ++r) {
            for (int c = 0; c < 28; ++c) {
                // more than one pixel inside the rect boundary
                if (c >= 9 && c < 17 && r >= 7 && r < 14) {
                    CHECK(mask.at(0, r, c) == doctest::Approx(1.0).epsilon(1e-6));
                }
                // more than one pixel outside
                if (c < 7 || c > 18 || r < 5 || r > 15) {
                    CHECK(mask.at(0, r, c) == doctest::Approx(0.0).epsilon(1e-6));
                }
            }
        }
    }

    SUBCASE("full-image rect is one on the eroded interior") {
        const int n = 40;
        const double sigma = 2.0;
        const FeatureMap mask = gaussian_soft_mask(n, n, RectF{0, 0, n, n}, sigma);
        const int erode = static_cast<int>(std::ceil(3.0 * sigma));
        for (int r = erode; r < n - erode; ++r) {
            for (int c = erode; c < n - erode; ++c) {
                CHECK(mask.at(0, r, c) == doctest::Approx(1.0).epsilon(1e-9));
            }
        }
    }

    SUBCASE("edge cross-section follows the truncated gaussian cdf") {
        const int h = 200, w = 200;
        const double sigma = 6.0;
        const RectF rect{60, 20, 80, 160};
        const FeatureMap mask = gaussian_soft_mask(h, w, rect, sigma);
        auto phi = [](double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); };
        const double z3 = phi(3.0), zm3 = phi(-3.0);
        auto truncated_cdf = [&](double d) {
            const double z = d / sigma;
            if (z <= -3.0) return 0.0;
            if (z >= 3.0) return 1.0;
            return (phi(z) - zm3) / (z3 - zm3);
        };
        // The discrete step edge sits half a pixel outside the first
        // inside column.
        for (int c = 30; c <= 110; ++c) {
            const double expected = truncated_cdf(c - 59.5);
            CHECK(std::abs(mask.at(0, 100, c) - expected) <= 1e-3);
        }
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(gaussian_soft_mask(20, 20, RectF{-1, 0, 5, 5}, 1.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(gaussian_soft_mask(20, 20, RectF{0, 0, 25, 5}, 1.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(gaussian_soft_mask(20, 20, RectF{0, 0, 5, 5}, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("compositing") {
    const FeatureMap a = smooth_test_image(41, 2, 16, 18, 3);
    const FeatureMap b = smooth_test_image(42, 2, 16, 18, 3);

    SUBCASE("mask zero keeps the original") {
        const FeatureMap mask(1, 16, 18, 0.0f);
        const FeatureMap out = composite(a, b, mask);
        CHECK(out.raw() == a.raw());
    }

    SUBCASE("mask one takes the generated image") {
        const FeatureMap mask(1, 16, 18, 1.0f);
        const FeatureMap out = composite(a, b, mask);
        CHECK(out.raw() == b.raw());
    }

    SUBCASE("constant half blends to the mean") {
        const FeatureMap mask(1, 16, 18, 0.5f);
        const FeatureMap out = composite(a, b, mask);
        for (size_t i = 0; i < out.raw().size(); ++i) {
            CHECK(out.raw()[i] ==
                  doctest::Approx(0.5 * (a.raw()[i] + b.raw()[i])).epsilon(1e-7));
        }
    }

    SUBCASE("partition identity") {
        std::mt19937_64 rng(43);
        FeatureMap mask(1, 16, 18);
        for (float& v : mask.raw()) {
            v = static_cast<float>(uniform(rng, 0, 1));
        }
        const FeatureMap ab = composite(a, b, mask);
        const FeatureMap ba = composite(b, a, mask);
        for (size_t i = 0; i < ab.raw().size(); ++i) {
            const double sum = static_cast<double>(ab.raw()[i]) + ba.raw()[i];
            const double expected = static_cast<double>(a.raw()[i]) + b.raw()[i];
            CHECK(sum == doctest::Approx(expected).epsilon(1e-6));
        }
    }

    SUBCASE("errors") {
        const FeatureMap small_mask(1, 8, 8, 0.0f);
        CHECK_THROWS_AS(composite(a, b, small_mask), std::invalid_argument);
        FeatureMap bad_mask(1, 16, 18, 0.0f);
        bad_mask.at(0, 0, 0) = 1.5f;
        CHECK_THROWS_AS(composite(a, b, bad_mask), std::invalid_argument);
        const FeatureMap c(1, 16, 18, 0.0f);
        const FeatureMap mask(1, 16, 18, 0.0f);
        CHECK_THROWS_AS(composite(a, c, mask), std::invalid_argument);
    }
}

TEST_CASE("lip rect helper") {
    LandmarkSet lm;
    lm.points = {{0, 0}, {100, 40}, {20, 30}, {60, 10}};
    const std::vector<int> mouth{1, 2, 3};
    const RectF rect = lip_rect_from_landmarks(lm, mouth, 0.2);
    // bbox of points 1..3 is x in [20,100], y in [10,40]
    CHECK(rect.w == doctest::Approx(80.0 * 1.2).epsilon(1e-12));
    CHECK(rect.h == doctest::Approx(30.0 * 1.2).epsilon(1e-12));
    CHECK(rect.x == doctest::Approx(60.0 - 48.0).epsilon(1e-12));
    CHECK(rect.y == doctest::Approx(25.0 - 18.0).epsilon(1e-12));
    CHECK(default_mask_sigma(rect) == doctest::Approx(0.05 * 36.0).epsilon(1e-12));

    CHECK_THROWS_AS(lip_rect_from_landmarks(lm, std::vector<int>{7}), std::invalid_argument);
    CHECK_THROWS_AS(lip_rect_from_landmarks(lm, std::vector<int>{}), std::invalid_argument);
}
