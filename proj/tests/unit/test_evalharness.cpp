#include <algorithm>
#include <cmath>
#include <numbers>

#include "ccnn/evalharness.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace ccnn;
using ccnn::testing::Gen;

namespace {

using Matrix = std::vector<std::vector<double>>;

// repeatedly take the strictly largest remaining entry, scanning in (a, d) order
std::vector<MatchPair> argmax_greedy(Matrix m, double thr) {
    std::vector<MatchPair> out;
    for (;;) {
        MatchPair best{-1, -1, -1.0};
        for (std::size_t a = 0; a < m.size(); ++a)
            for (std::size_t d = 0; d < m[a].size(); ++d)
                if (m[a][d] >= thr && m[a][d] > 0.0 && m[a][d] > best.iou)
                    best = {static_cast<int>(a), static_cast<int>(d), m[a][d]};
        if (best.annotation < 0) return out;
        out.push_back(best);
        for (auto& v : m[static_cast<std::size_t>(best.annotation)]) v = -1.0;
        for (auto& row : m) row[static_cast<std::size_t>(best.detection)] = -1.0;
    }
}

std::size_t max_matching(const Matrix& m, double thr, std::size_t a = 0, std::vector<char>* used = nullptr) {
    std::vector<char> local;
    if (!used) {
        local.assign(m.empty() ? 0 : m[0].size(), 0);
        used = &local;
    }
    if (a == m.size()) return 0;
    std::size_t best = max_matching(m, thr, a + 1, used);
    for (std::size_t d = 0; d < m[a].size(); ++d)
        if (!(*used)[d] && m[a][d] >= thr && m[a][d] > 0.0) {
            (*used)[d] = 1;
            best = std::max(best, 1 + max_matching(m, thr, a + 1, used));
            (*used)[d] = 0;
        }
    return best;
}

double raster_rect_iou(const Box& a, const Box& b, double step) {
    long ia = 0, ib = 0, both = 0;
    for (double y = -50 + step / 2; y < 150; y += step)
        for (double x = -50 + step / 2; x < 150; x += step) {
            const bool pa = x >= a.x && x < a.right() && y >= a.y && y < a.bottom();
            const bool pb = x >= b.x && x < b.right() && y >= b.y && y < b.bottom();
            ia += pa;
            ib += pb;
            both += pa && pb;
        }
    return ia + ib - both ? static_cast<double>(both) / static_cast<double>(ia + ib - both) : 0.0;
}

}  // namespace

TEST_CASE("rect iou examples and properties") {
    CHECK(iou_rect({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
    CHECK(iou_rect({0, 0, 10, 10}, {10, 0, 10, 10}) == 0.0);
    CHECK(iou_rect({0, 0, 10, 10}, {5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0));
    CHECK(iou_rect({0, 0, 10, 10}, {2.5, 2.5, 5, 5}) == doctest::Approx(0.25));
    CHECK(iou_rect({0, 0, 0, 10}, {0, 0, 0, 10}) == 0.0);

    Gen g(401);
    for (int trial = 0; trial < 500; ++trial) {
        const Box a = g.box(), b = g.box();
        const double v = iou_rect(a, b);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v == iou_rect(b, a));
        const double k = g.real(0.1, 5.0);
        const Box as{a.x * k, a.y * k, a.w * k, a.h * k}, bs{b.x * k, b.y * k, b.w * k, b.h * k};
        CHECK(iou_rect(as, bs) == doctest::Approx(v).epsilon(1e-9));
        if (trial < 20) CHECK(std::abs(raster_rect_iou(a, b, 0.1) - v) < 0.03);
    }
}

TEST_CASE("ellipse geometry") {
    const Ellipse e{20, 10, 0, 50, 50};
    CHECK(e.contains(50, 50));
    CHECK(e.contains(69, 50));
    CHECK_FALSE(e.contains(50, 61));
    const Box b = e.bounds();
    CHECK(b.w == doctest::Approx(40));
    CHECK(b.h == doctest::Approx(20));
    CHECK(e.area() == doctest::Approx(std::numbers::pi * 200));

    const Ellipse r{20, 10, std::numbers::pi / 2, 50, 50};
    CHECK(r.bounds().w == doctest::Approx(20));
    CHECK(r.bounds().h == doctest::Approx(40));
    CHECK(r.contains(50, 69));
}

TEST_CASE("ellipse-rect iou converges to the analytic values") {
    // circle inscribed in its bounding square
    const Ellipse c{50, 50, 0.3, 100, 100};
    CHECK(std::abs(iou_ellipse_rect(c, {50, 50, 100, 100}, 0.5) - std::numbers::pi / 4) < 0.02);
    // ellipse wholly inside a box: iou = ellipse area / box area
    Gen g(402);
    for (int trial = 0; trial < 10; ++trial) {
        const Ellipse e{g.real(10, 30), g.real(5, 10), g.real(-3, 3), 100, 100};
        const Box big{40, 40, 120, 120};
        CHECK(std::abs(iou_ellipse_rect(e, big, 0.5) - e.area() / big.area()) < 0.01);
        CHECK(iou_ellipse_rect(e, {300, 300, 10, 10}) == 0.0);
        const double coarse = iou_ellipse_rect(e, {90, 90, 25, 20}, 1.0);
        const double fine = iou_ellipse_rect(e, {90, 90, 25, 20}, 0.25);
        CHECK(std::abs(coarse - fine) < 0.05);
    }
    CHECK_THROWS_AS(iou_ellipse_rect(c, {0, 0, 1, 1}, 0.0), std::invalid_argument);
}

TEST_CASE("greedy matching agrees with an independent greedy and bounds the optimum") {
    // the classic greedy trap: greedy takes 0.9 and loses two moderate pairs
    const Matrix trap{{0.9, 0.6}, {0.7, 0.0}};
    const auto r = match_greedy(trap);
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0] == MatchPair{0, 0, 0.9});
    CHECK(r.missed == std::vector<int>{1});
    CHECK(r.spurious == std::vector<int>{1});
    CHECK(max_matching(trap, 0.5) == 2);

    const Matrix tie{{0.6, 0.6}, {0.6, 0.6}};
    const auto t = match_greedy(tie);
    REQUIRE(t.pairs.size() == 2);
    CHECK(t.pairs[0] == MatchPair{0, 0, 0.6});
    CHECK(t.pairs[1] == MatchPair{1, 1, 0.6});

    CHECK(match_greedy(Matrix{}).pairs.empty());
    CHECK(match_greedy(Matrix{{}, {}}).missed.size() == 2);
    CHECK_THROWS_AS(match_greedy(Matrix{{0.5}, {0.5, 0.7}}), std::invalid_argument);

    Gen g(403);
    for (int trial = 0; trial < 400; ++trial) {
        const int na = g.integer(0, 5), nd = g.integer(0, 5);
        Matrix m(static_cast<std::size_t>(na), std::vector<double>(static_cast<std::size_t>(nd)));
        for (auto& row : m)
            for (auto& v : row) v = g.coin(0.4) ? 0.0 : std::round(g.real(0, 1) * 10) / 10;
        const double thr = g.coin() ? 0.5 : 0.3;
        const auto got = match_greedy(m, thr);
        CHECK(got.pairs == argmax_greedy(m, thr));
        CHECK(got.pairs.size() + got.missed.size() == static_cast<std::size_t>(na));
        if (na > 0) CHECK(got.pairs.size() + got.spurious.size() == static_cast<std::size_t>(nd));
        const std::size_t opt = max_matching(m, thr);
        CHECK(got.pairs.size() <= opt);
        CHECK(2 * got.pairs.size() >= opt);
        // maximal: no unmatched pair above threshold remains
        for (int a : got.missed)
            for (int d : got.spurious)
                CHECK_FALSE(m[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)] >= thr);
    }
}

TEST_CASE("discrete matching with mixed shapes") {
    const std::vector<Shape> anns{Box{0, 0, 20, 20}, Ellipse{10, 10, 0, 100, 100}};
    const std::vector<Box> dets{{90, 90, 20, 20}, {1, 1, 20, 20}, {400, 400, 5, 5}};
    const auto r = match_discrete(anns, dets);
    CHECK(r.pairs.size() == 2);
    CHECK(r.spurious == std::vector<int>{2});
    CHECK(r.missed.empty());
}

TEST_CASE("fddb scoring on a small fixture") {
    // image 0: one face, one exact hit (0.9) and one far miss (0.2)
    // image 1: two faces, one hit at 0.5
    // image 2: no faces, one detection at 0.7
    std::vector<ImageEval> imgs(3);
    imgs[0] = {"a", {Box{0, 0, 10, 10}}, {{{0, 0, 10, 10}, 0.9f, 1}, {{50, 50, 10, 10}, 0.2f, 1}}};
    imgs[1] = {"b", {Box{0, 0, 10, 10}, Box{30, 30, 10, 10}}, {{{0, 0, 10, 10}, 0.5f, 1}}};
    imgs[2] = {"c", {}, {{{0, 0, 10, 10}, 0.7f, 1}}};
    const auto th = score_thresholds(imgs);
    REQUIRE(th.size() == 4);
    CHECK(th.front() == doctest::Approx(0.2));
    const auto rep = score_fddb(imgs, th);
    CHECK(rep.annotations == 3);
    REQUIRE(rep.roc.size() == 4);
    // threshold 0.2: everything kept -> 2 tp, 2 fp
    CHECK(rep.roc[0].fp == 2);
    CHECK(rep.roc[0].tpr == doctest::Approx(2.0 / 3.0));
    // 0.5: tp 2, fp 1 (image c)
    CHECK(rep.roc[1].fp == 1);
    CHECK(rep.roc[1].tpr == doctest::Approx(2.0 / 3.0));
    // 0.7: tp 1, fp 1
    CHECK(rep.roc[2].fp == 1);
    CHECK(rep.roc[2].tpr == doctest::Approx(1.0 / 3.0));
    // 0.9: tp 1, fp 0
    CHECK(rep.roc[3].fp == 0);
    CHECK(rep.continuous == doctest::Approx(2.0 / 3.0));

    const auto pr = score_prf1(imgs, Matcher::Discrete, 1);
    CHECK(pr.precision == doctest::Approx(0.5));
    CHECK(pr.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("roc is monotone on random data") {
    Gen g(404);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<ImageEval> imgs(static_cast<std::size_t>(g.integer(1, 5)));
        for (auto& im : imgs) {
            for (int k = g.integer(0, 3); k > 0; --k) im.annotations.emplace_back(g.box(200, 10, 40));
            for (int k = g.integer(0, 6); k > 0; --k)
                im.detections.push_back({g.box(200, 10, 40), static_cast<float>(g.real(-1, 1)), 1});
        }
        const auto rep = score_fddb(imgs, score_thresholds(imgs));
        for (std::size_t k = 1; k < rep.roc.size(); ++k) {
            CHECK(rep.roc[k].fp <= rep.roc[k - 1].fp);
            CHECK(rep.roc[k].tpr <= rep.roc[k - 1].tpr + 1e-12);
        }
        CHECK(rep.continuous >= 0.0);
        CHECK(rep.continuous <= 1.0);
    }
}

TEST_CASE("multiscale variants") {
    const Box a{10, 20, 30, 40};
    const auto v = multiscale_variants(a);
    REQUIRE(v.size() == 44);
    CHECK(v.front().w == doctest::Approx(27));
    CHECK(v.back().w == doctest::Approx(36));
    CHECK(v.back().h == doctest::Approx(48));
    for (const auto& b : v) {
        CHECK(b.cx() == doctest::Approx(a.cx()));
        CHECK(b.cy() == doctest::Approx(a.cy()));
        CHECK(b.w / b.h == doctest::Approx(a.w / a.h));
    }
    // a detection 1.2x larger than the annotation is matched exactly by the top variant
    CHECK(best_variant_iou(a, a.scaled(1.2)) == doctest::Approx(1.0));
    CHECK(best_variant_iou(a, a.scaled(1.5)) == doctest::Approx(1.0 / (1.25 * 1.25)));
    // 0.6x is outside the family: the best is the 0.9 variant
    CHECK(best_variant_iou(a, a.scaled(0.6)) == doctest::Approx(0.36 / 0.81));
    CHECK_FALSE(match_multiscale(a, a.scaled(0.6)));
    CHECK(match_multiscale(a, a.scaled(1.3)));
    CHECK_THROWS_AS(multiscale_variants(a, 0), std::invalid_argument);

    Gen g(405);
    for (int trial = 0; trial < 300; ++trial) {
        const Box ann = g.box(), det = g.box();
        const double plain = iou_rect(ann, det);
        const double best = best_variant_iou(ann, det);
        CHECK(best >= plain);
        // more variants over a wider range never lowers the best score
        const auto wide = multiscale_variants(ann, 88, 0.8, 1.3);
        CHECK(best_variant_iou(ann, det, wide) >= plain);
    }
}

TEST_CASE("precision recall f1") {
    const auto s = score_prf1(3, 1, 2);
    CHECK(s.precision == doctest::Approx(0.75));
    CHECK(s.recall == doctest::Approx(0.6));
    CHECK(s.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
    const auto z = score_prf1(0, 0, 0);
    CHECK(z.precision == 0.0);
    CHECK(z.recall == 0.0);
    CHECK(z.f1 == 0.0);
    CHECK(score_prf1(0, 5, 0).f1 == 0.0);

    std::vector<ImageEval> imgs(1);
    imgs[0] = {"x", {Box{0, 0, 30, 30}}, {{{0, 0, 30, 30}, 1.f, 3}, {{100, 0, 30, 30}, 1.f, 1}}};
    const auto sweep = sweep_min_neighbors(imgs, Matcher::Multiscale);
    REQUIRE(sweep.scores.size() == 3);
    CHECK(sweep.scores[0].precision == doctest::Approx(0.5));
    CHECK(sweep.scores[1].precision == doctest::Approx(1.0));
    CHECK(sweep.scores[2].f1 == doctest::Approx(1.0));
    CHECK(sweep.mean_f1 == doctest::Approx((2.0 / 3.0 + 1.0 + 1.0) / 3.0));
}
