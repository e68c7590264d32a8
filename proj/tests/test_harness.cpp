#include "certlab/bounds.hpp"
#include "certlab/harness.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

using namespace certlab;

namespace {

const NormOrder kInf = NormOrder::infinity();

SyntheticTask constant_task(const ResolutionSpec& res) {
    return {SyntheticClassifier(ConstantRule{0}), {std::vector<double>(res.d(), 0.0)}, {0}, res};
}

}  // namespace

TEST_CASE("pooling") {
    const ResolutionSpec two{2, 1};
    CHECK(pool_resolution(std::vector<double>{1, 3, 5, 7}, two, 2) == std::vector<double>{4.0});
    const ResolutionSpec four{4, 3};
    const std::vector<double> c(four.d(), 2.5);
    CHECK(pool_resolution(c, four, 2) == std::vector<double>(12, 2.5));
    CHECK(pool_resolution(c, four, 1) == c);
    CHECK_THROWS_AS(pool_resolution(c, four, 3), std::invalid_argument);
    CHECK_THROWS_AS(pool_resolution(std::vector<double>(5, 0.0), four, 2), std::invalid_argument);

    // Channel-major layout: channel 1 of a 2x2 image pools separately.
    const ResolutionSpec rgb{2, 3};
    const std::vector<double> img{0, 0, 0, 0, 1, 2, 3, 4, 8, 8, 8, 8};
    CHECK(pool_resolution(img, rgb, 2) == std::vector<double>{0.0, 2.5, 8.0});
}

TEST_CASE("property: upsample then pool is the identity") {
    RngStream rng(1, 0);
    const ResolutionSpec base{4, 3};
    std::vector<double> x(base.d());
    for (double& v : x) v = rng.uniform_open();
    for (std::size_t k : {1u, 2u, 4u}) {
        const auto up = upsample_repeat(x, base, k);
        CHECK(up.size() == base.d() * k * k);
        const auto back = pool_resolution(up, ResolutionSpec{4 * k, 3}, k);
        REQUIRE(back.size() == x.size());
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-15));
    }
}

TEST_CASE("pooled noise variance shrinks by k^2") {
    const ResolutionSpec res{2, 1};
    RngStream rng(2, 0);
    const auto noise = SmoothingDistribution::gaussian(1.0);
    const std::size_t n = 100'000;
    double sum = 0, sum2 = 0;
    std::vector<double> img(4);
    for (std::size_t i = 0; i < n; ++i) {
        sample_into(noise, img, rng);
        const double v = pool_resolution(img, res, 2)[0];
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // stderr of a normal sample variance: var sqrt(2 / n)
    CHECK(std::fabs(var - 0.25) <= 3.0 * 0.25 * std::sqrt(2.0 / n));
}

TEST_CASE("synthetic classifiers") {
    const SyntheticClassifier lin(LinearRule{{1.0, -1.0}, 0.5});
    CHECK(lin.num_classes() == 2);
    CHECK(lin.classify(std::vector<double>{0.5, 0.0}) == 0);
    CHECK(lin.classify(std::vector<double>{0.6, 0.0}) == 1);
    CHECK_THROWS_AS(SyntheticClassifier(LinearRule{{0.0, 0.0}, 0.0}), std::invalid_argument);

    const SyntheticClassifier cst(ConstantRule{3});
    CHECK(cst.classify(std::vector<double>{9.0}) == 3);
    CHECK(cst.num_classes() >= 4);

    const SyntheticClassifier proto(PrototypeRule{{{0.0, 0.0}, {2.0, 0.0}}, {0, 1}});
    CHECK(proto.classify(std::vector<double>{0.9, 5.0}) == 0);
    CHECK(proto.classify(std::vector<double>{1.1, 5.0}) == 1);
    CHECK(proto.classify(std::vector<double>{1.0, 0.0}) == 0);
    CHECK_THROWS_AS(SyntheticClassifier(PrototypeRule{{{0.0}, {0.0}}, {0, 1}}), std::invalid_argument);

    const auto parsed = SyntheticClassifier::parse("linear:t=1", 3);
    CHECK(std::get<LinearRule>(parsed.rule()).w == std::vector<double>(3, 1.0));
    CHECK(SyntheticClassifier::parse("linear:t=0,w=1;2;3", 3).classify(std::vector<double>{0, 0, 0.1}) == 1);
    CHECK(SyntheticClassifier::parse("constant:2", 7).classify(std::vector<double>(7, 0.0)) == 2);
    CHECK_THROWS_AS(SyntheticClassifier::parse("linear:t=0,w=1;2", 3), std::invalid_argument);
    CHECK_THROWS_AS(SyntheticClassifier::parse("constant:1.5", 3), std::invalid_argument);
    CHECK_THROWS_AS(SyntheticClassifier::parse("tree:depth=3", 3), std::invalid_argument);
    CHECK_THROWS_AS(SyntheticClassifier::parse("prototype:classes=3,sep=0.5", 10), std::invalid_argument);
    CHECK(SyntheticClassifier::parse("prototype:classes=3,sep=0.5", 192).num_classes() == 3);
}

TEST_CASE("prototype task") {
    for (std::size_t side : {8u, 16u, 32u}) {
        const ResolutionSpec res{side, 3};
        const auto task = make_prototype_task(PrototypeTaskSpec{}, res);
        CHECK(task.points.size() == 10);
        CHECK(task.points.front().size() == res.d());
        for (std::size_t i = 0; i < task.points.size(); ++i) {
            CHECK(task.classifier.classify(task.points[i]) == task.labels[i]);
        }
        // The same task across resolutions: pooling recovers the base pattern.
        const auto base = make_prototype_task(PrototypeTaskSpec{}, ResolutionSpec{8, 3});
        CHECK(pool_resolution(task.points[3], res, side / 8) == base.points[3]);
    }
    CHECK(ResolutionSpec{32, 3}.d() == 3072);
    CHECK_THROWS_AS(make_prototype_task(PrototypeTaskSpec{}, ResolutionSpec{12, 3}), std::invalid_argument);
    CHECK_THROWS_AS(make_prototype_task(PrototypeTaskSpec{1, 0.5, 7, 8}, ResolutionSpec{8, 3}),
                    std::invalid_argument);
}

TEST_CASE("matched noise pairs q with p") {
    CHECK(matched_noise(NormOrder(2.0), 0.5).is_gaussian());
    CHECK(std::get<GeneralizedGaussian>(matched_noise(NormOrder(4.0), 0.5).params()).q == 4.0);
    const auto u = matched_noise(kInf, 0.5);
    CHECK(std::get<UniformLinf>(u.params()).b == doctest::Approx(0.5 * std::sqrt(3.0)).epsilon(1e-15));
    CHECK(*u.coordinate_sigma() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("bound vs certificate for a constant classifier") {
    const SyntheticClassifier h(ConstantRule{0});
    const std::vector<std::vector<double>> pts{std::vector<double>(64, 0.0)};
    const std::vector<NormOrder> ps{NormOrder(2.0), NormOrder(4.0), kInf};
    SUBCASE("low p1: iid bound is tighter") {
        CertifyConfig cfg;
        cfg.n = 100;
        const auto rows = run_bound_vs_certificate(pts, h, 0.5, ps, cfg);
        REQUIRE(rows.size() == ps.size());
        for (const auto& r : rows) {
            CHECK_FALSE(r.abstain);
            CHECK(r.p1_lower == doctest::Approx(oracle::ref::cp_lower_100).epsilon(1e-13));
            CHECK(r.p1_lower < crossing_scan(1e-4));
            CHECK(r.tighter_bound_id == "IID");
            REQUIRE(r.ratio.has_value());
            CHECK(*r.ratio > 1.0);
            CHECK(*r.gaussian_radius <= std::min(*r.iid_bound, *r.gengauss_bound));
        }
    }
    SUBCASE("high p1: generalized Gaussian bound is tighter") {
        CertifyConfig cfg;
        cfg.n = 100'000;
        const auto rows = run_bound_vs_certificate(pts, h, 0.5, ps, cfg);
        for (const auto& r : rows) {
            CHECK(r.p1_lower > crossing_scan(1e-4));
            CHECK(r.tighter_bound_id == "GENGAUSS");
            CHECK(std::isfinite(*r.iid_bound));
            CHECK(std::isfinite(*r.gengauss_bound));
            CHECK(*r.ratio > 1.0);
            CHECK(*r.gaussian_radius <= std::min(*r.iid_bound, *r.gengauss_bound));
        }
    }
}

TEST_CASE("bound vs certificate carries abstentions with empty numeric fields") {
    const SyntheticClassifier h(LinearRule{{1.0, 1.0}, 0.0});
    CertifyConfig cfg;
    cfg.n = 2000;
    const auto rows = run_bound_vs_certificate({{0.0, 0.0}}, h, 1.0, {NormOrder(2.0)}, cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].abstain);
    CHECK_FALSE(rows[0].iid_bound.has_value());
    CHECK_FALSE(rows[0].gaussian_radius.has_value());
    CHECK_FALSE(rows[0].ratio.has_value());
    CHECK(rows[0].tighter_bound_id.empty());
    CHECK_THROWS_AS(run_bound_vs_certificate({{0.0, 0.0}}, h, 1.0, {NormOrder(1.5)}, cfg), std::invalid_argument);
}

TEST_CASE("bound vs certificate rows do not depend on scheduling") {
    const auto task = make_prototype_task(PrototypeTaskSpec{3, 0.05, 1, 2}, ResolutionSpec{2, 3});
    CertifyConfig cfg;
    cfg.n = 5000;
    cfg.seed = 77;
    const std::vector<NormOrder> ps{NormOrder(2.0), kInf};
    const auto all = run_bound_vs_certificate(task.points, task.classifier, 0.3, ps, cfg);
    const auto last = bound_vs_certificate_for_point(2, task.points[2], task.classifier, 0.3, ps, cfg);
    REQUIRE(all.size() == 6);
    for (std::size_t k = 0; k < ps.size(); ++k) {
        CHECK(all[4 + k].p1_lower == last[k].p1_lower);
        CHECK(all[4 + k].gaussian_radius == last[k].gaussian_radius);
    }
}

TEST_CASE("dimension sweep projections") {
    CertifyConfig cfg;
    cfg.n = 1000;
    const std::vector<ResolutionSpec> res{{8, 3}, {16, 3}, {32, 3}};
    const std::vector<NormOrder> ps{NormOrder(2.0), kInf};
    const auto rows = run_dimension_sweep(constant_task, res, 0.25, ps, cfg);
    REQUIRE(rows.size() == 6);
    for (const auto& r : rows) {
        REQUIRE(r.radius.has_value());
        REQUIRE(r.projected_radius.has_value());
        // Fixed p1 across d: measured and projected coincide.
        CHECK(*r.projected_radius == doctest::Approx(*r.radius).epsilon(1e-12));
        if (r.p == NormOrder(2.0)) CHECK(*r.radius == doctest::Approx(oracle::ref::radius_1000).epsilon(1e-12));
    }
    // p = inf from 192 to 3072 shrinks by (3072 / 192)^(1/2) = 4.
    CHECK(*rows[1].projected_radius / *rows[5].projected_radius == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rows[0].d == 192);
    CHECK(rows[5].d == 3072);

    // Anchor is the smallest d even when listed last.
    const std::vector<ResolutionSpec> rev{{16, 3}, {8, 3}};
    const auto rrows = run_dimension_sweep(constant_task, rev, 0.25, ps, cfg);
    CHECK(rrows[3].d == 192);
    CHECK(*rrows[1].projected_radius == doctest::Approx(*rrows[3].radius / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(run_dimension_sweep(constant_task, {}, 0.25, ps, cfg), std::invalid_argument);
}

TEST_CASE("project radii leaves rows without an anchor empty") {
    std::vector<DimensionSweepRow> rows{{8, 192, 0, kInf, true, 0.4, std::nullopt, std::nullopt},
                                        {16, 768, 0, kInf, false, 0.9, 0.5, std::nullopt},
                                        {8, 192, 1, kInf, false, 0.9, 0.2, std::nullopt},
                                        {16, 768, 1, kInf, false, 0.9, 0.1, std::nullopt}};
    project_radii(rows);
    CHECK_FALSE(rows[0].projected_radius.has_value());
    CHECK_FALSE(rows[1].projected_radius.has_value());
    CHECK(*rows[2].projected_radius == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(*rows[3].projected_radius == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("shape comparison") {
    const SyntheticClassifier h(LinearRule{{1.0, 1.0, 1.0, 1.0}, 1.0});
    CertifyConfig cfg;
    cfg.n = 20'000;
    const auto rows = run_shape_comparison({{0, 0, 0, 0}, {0.1, 0, 0, 0}}, h, 0.5, {1.0, 2.0, 4.0, 8.0}, cfg);
    REQUIRE(rows.size() == 8);
    for (const auto& r : rows) {
        CHECK_FALSE(r.abstain);
        // Sum of four coordinates with sd 0.5 each: P(S <= 1) is near Phi(1).
        CHECK(r.p1_lower < oracle::ref::phi_1 + 0.03);
        CHECK(r.p1_lower > 0.8);
        CHECK(shape_row(r.point_id, std::vector<double>{r.point_id == 0 ? 0.0 : 0.1, 0, 0, 0}, h, 0.5, r.q, cfg)
                  .p1_lower == r.p1_lower);
    }
}

TEST_CASE("crossing scan") {
    const double c = crossing_scan(1e-4);
    CHECK(c > 0.95);
    CHECK(c < 0.999);
    CHECK(c > 0.99);
    CHECK(c < 0.995);
    CHECK(ratio_gengauss_to_gaussian(0.9) > ratio_iid_to_gaussian(0.9));
    for (double p1 = c; p1 < 1.0 - 1e-6; p1 += 1e-4) {
        CHECK(ratio_gengauss_to_gaussian(p1) < ratio_iid_to_gaussian(p1));
    }
    CHECK(crossing_scan(1e-3) >= c);
    CHECK(crossing_scan(1e-3) - c < 1e-3);
    CHECK_THROWS_AS(crossing_scan(2e-3), std::invalid_argument);
    CHECK_THROWS_AS(crossing_scan(0.0), std::invalid_argument);
}
