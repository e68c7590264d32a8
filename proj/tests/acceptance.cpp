// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "certlab/bounds.hpp"
#include "certlab/certify.hpp"
#include "certlab/distributions.hpp"
#include "certlab/harness.hpp"
#include "certlab/worstcase.hpp"
#include "oracles.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

using namespace certlab;

namespace {

const double kInfP = std::numeric_limits<double>::infinity();

struct Outcome {
    bool pass;
    std::string detail;
};

double rel_err(double got, double want) { return std::fabs(got - want) / std::fabs(want); }

// 1. Closed-form bounds and the Gaussian lp certificate at the headline
//    configuration against 50-digit reference values.
Outcome formula_fidelity() {
    const ProbabilityPair pair(0.999, 0.001);
    const NormOrder inf = NormOrder::infinity();
    const std::pair<double, double> cells[] = {
        {iid_upper_bound(1.0, 3072, inf, pair).value, oracle::ref::iid_inf_3072},
        {gengauss_upper_bound(1.0, 3072, inf, pair).value, oracle::ref::gengauss_inf_3072},
        {linf_uniform_upper_bound(1.0, 3072, inf).value, oracle::ref::uniform_inf_3072},
        {l1_uniform_upper_bound(1.0, 3072).value, oracle::ref::uniform_inf_3072},
        {gaussian_lp_radius(0.12, 3072, inf, pair), oracle::ref::gaussian_lp_012_3072},
    };
    double worst = 0;
    for (const auto& [got, want] : cells) worst = std::max(worst, rel_err(got, want));
    return {worst <= 1e-9, fmt::format("max relative error {:.3g} (tol 1e-9) over 5 values", worst)};
}

// 2. bound(d) / bound(4d) equals the exponent ratio.
Outcome scaling_law() {
    const ProbabilityPair pair(0.9, 0.05);
    double worst = 0;
    int cells = 0;
    for (std::size_t d : {16u, 64u, 256u, 1024u}) {
        for (double p : {2.0, 4.0, kInfP}) {
            const NormOrder np(p);
            const double half = std::pow(4.0L, 0.5L - 1.0L / p);
            const double one = std::pow(4.0L, 1.0L - 1.0L / p);
            worst = std::max(worst, rel_err(iid_upper_bound(1, d, np, pair).value /
                                                iid_upper_bound(1, 4 * d, np, pair).value,
                                            half));
            worst = std::max(worst, rel_err(gengauss_upper_bound(1, d, np, pair).value /
                                                gengauss_upper_bound(1, 4 * d, np, pair).value,
                                            half));
            worst = std::max(worst, rel_err(linf_uniform_upper_bound(1, d, np).value /
                                                linf_uniform_upper_bound(1, 4 * d, np).value,
                                            one));
            worst = std::max(worst,
                             rel_err(l1_uniform_upper_bound(1, d).value / l1_uniform_upper_bound(1, 4 * d).value, 4.0));
            cells += 4;
        }
    }
    return {worst <= 1e-12, fmt::format("{} ratios, max relative deviation {:.3g} (tol 1e-12)", cells, worst)};
}

// 3. Half-space flips at 0.9 and 1.1 times eps_star; Gaussian MC matches the
//    normal closed form.
Outcome flip_suite() {
    struct Family {
        const char* name;
        SmoothingDistribution dist;
    };
    const Family families[] = {
        {"q=1", SmoothingDistribution::generalized_gaussian_sigma(1.0, 1.0)},
        {"q=2", SmoothingDistribution::gaussian(1.0)},
        {"q=4", SmoothingDistribution::generalized_gaussian_sigma(4.0, 1.0)},
        {"linf", SmoothingDistribution::uniform_linf(std::sqrt(3.0))},
    };
    const std::vector<double> ms{0.9, 1.1};
    const std::size_t n = 100'000;
    int cells = 0;
    int sign_failures = 0;
    int oracle_failures = 0;
    std::string first_failure;
    std::uint64_t cell = 0;
    for (const auto& f : families) {
        for (std::size_t d : {4u, 16u, 64u}) {
            for (double p1 : {0.7, 0.9}) {
                const auto c = build_halfspace(f.dist, d, ProbabilityPair::binary(p1),
                                               HalfSpaceOptions{1'000'000, 1000 + cell, 1});
                const auto rows = verify_flip(c, ms, n, RngStream(2024, cell), 1);
                ++cell;
                for (const auto& r : rows) {
                    ++cells;
                    const int want = r.multiplier < 1.0 ? 1 : -1;
                    if (r.sign != want) {
                        ++sign_failures;
                        if (first_failure.empty()) {
                            first_failure = fmt::format("{} d={} p1={} m={} diff={:.4f} se={:.4f}", f.name, d, p1,
                                                        r.multiplier, r.p1_hat - r.p2_hat, r.diff_stderr);
                        }
                    }
                    if (f.dist.is_gaussian()) {
                        const long double sd = std::sqrt(static_cast<long double>(d));
                        const long double mean = r.multiplier * c.eps_star * d;
                        const double e1 = static_cast<double>(oracle::phi((c.s1 - mean) / sd));
                        const double e2 = 1.0 - static_cast<double>(oracle::phi((c.s2 - mean) / sd));
                        if (std::fabs(r.p1_hat - e1) > 3.0 * std::sqrt(e1 * (1 - e1) / n) ||
                            std::fabs(r.p2_hat - e2) > 3.0 * std::sqrt(e2 * (1 - e2) / n)) {
                            ++oracle_failures;
                        }
                    }
                }
            }
        }
    }
    std::string detail = fmt::format("{} cells, {} wrong signs, {} gaussian cells outside 3 stderr of closed form",
                                     cells, sign_failures, oracle_failures);
    if (!first_failure.empty()) detail += "; first: " + first_failure;
    return {sign_failures == 0 && oracle_failures == 0, detail};
}

// 4. flip_lp_norm <= iid bound and Gaussian certificate <= min applicable bound.
Outcome dominance() {
    int cells = 0;
    int violations = 0;
    for (std::size_t d : {1u, 4u, 16u, 64u, 192u, 768u, 3072u}) {
        for (double p1 : {0.5, 0.55, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.995, 0.999, 0.9999, 0.999999}) {
            for (double frac : {1.0, 0.5, 0.1, 0.01}) {
                const ProbabilityPair pair(p1, (1.0 - p1) * frac);
                for (double sigma : {0.12, 1.0}) {
                    const auto c = build_halfspace(SmoothingDistribution::gaussian(sigma), d, pair);
                    for (double p : {2.0, 2.5, 3.0, 4.0, 8.0, 16.0, kInfP}) {
                        const NormOrder np(p);
                        const auto iid = iid_upper_bound(sigma, d, np, pair);
                        ++cells;
                        if (flip_lp_norm(c, np) > iid.value) ++violations;
                        if (pair.p1 > pair.p2) {
                            double bound = iid.value;
                            const auto gg = gengauss_upper_bound(sigma, d, np, pair, 2.0);
                            if (gg.preconditions_met) bound = std::min(bound, gg.value);
                            ++cells;
                            if (gaussian_lp_radius(sigma, d, np, pair) > bound) ++violations;
                        }
                    }
                }
            }
        }
    }
    return {violations == 0, fmt::format("{} comparisons, {} violations", cells, violations)};
}

// 5. Moment-generating-function bound with c = 1.85, and the constant itself.
Outcome mgf_bound() {
    int failures = 0;
    double worst_gap = -1.0;
    double worst_quad = 0.0;
    for (double q : {1.0, 1.5, 2.0, 4.0, 8.0}) {
        for (double ts : {0.05, 0.1, 0.2, 0.4}) {
            const double b = scale_from_sigma(q, 1.0);
            const auto chk = mgf_bound_check(q, b, ts);
            const double quad = static_cast<double>(oracle::gengauss_mgf(q, b, ts));
            worst_quad = std::max(worst_quad, rel_err(chk.lhs, quad));
            const double rhs = 1.0 / (1.0 - 1.85 * 1.85 * ts * ts);
            worst_gap = std::max(worst_gap, chk.lhs - rhs);
            if (!(chk.lhs <= rhs + 1e-9) || !(quad <= rhs + 1e-9) || !chk.holds) ++failures;
        }
    }
    double worst_constant = 0;
    for (int i = 0; i <= 9900; ++i) {
        const double q = 1.0 + 0.01 * i;
        const double c = std::sqrt(static_cast<double>(std::tgamma(1.0L / q) / std::tgamma(3.0L / q)));
        worst_constant = std::max({worst_constant, c, lemma1_constant(q)});
    }
    const bool pass = failures == 0 && worst_quad < 1e-7 && worst_constant < 1.85;
    return {pass, fmt::format("20 cells, {} failures, max lhs - rhs {:.3g}, quadrature agreement {:.2g}, "
                              "sup constant on q in [1,100] = {:.6f} < 1.85",
                              failures, worst_gap, worst_quad, worst_constant)};
}

// 6. Exhaustive containment grid and Monte-Carlo l1 overlap mass.
Outcome l1_containment() {
    std::uint64_t points = 0;
    std::uint64_t violations = 0;
    int mc_failures = 0;
    std::string mc;
    std::uint64_t cell = 0;
    for (std::size_t d : {2u, 3u}) {
        for (double eps : {0.3, 1.0}) {
            const auto g = lemma2_grid_check(1.0, d, eps, 0.02);
            points += g.points;
            violations += g.violations;
            const auto r = l1_overlap_mc(ShiftedL1Construction(1.0, d, eps), 1'000'000, RngStream(606, cell++));
            const double lower = 1.0 - std::pow(1.0 - eps / 2.0, static_cast<double>(d));
            if (!(r.rho_hat >= lower - 3.0 * r.stderr_)) ++mc_failures;
            mc += fmt::format(" d={} eps={}: {:.4f}>={:.4f}", d, eps, r.rho_hat, lower);
        }
    }
    return {violations == 0 && mc_failures == 0,
            fmt::format("{} grid points, {} violations; MC{}", points, violations, mc)};
}

// 7. Box overlap mass and the flip threshold.
Outcome rho_exactness() {
    int failures = 0;
    double worst_z = 0;
    std::uint64_t cell = 0;
    for (std::size_t d : {2u, 5u, 16u}) {
        for (double eps : {0.05, 0.3, box_flip_threshold(1.0, d)}) {
            const auto r = box_flip_verify(ShiftedBoxConstruction(1.0, d, eps), 1'000'000, RngStream(707, cell++));
            const double want = 1.0 - std::pow(1.0L - eps / 2.0L, static_cast<long double>(d));
            const double z = std::max(std::fabs(r.rho_hat_x - want) / r.stderr_x,
                                      std::fabs(r.rho_hat_xprime - want) / r.stderr_xprime);
            worst_z = std::max(worst_z, z);
            if (z > 3.0) ++failures;
        }
    }
    int threshold_failures = 0;
    for (std::size_t d = 1; d <= 1024; ++d) {
        if (!(box_flip_threshold(1.0, d) < 2.0 / static_cast<double>(d))) ++threshold_failures;
    }
    return {failures == 0 && threshold_failures == 0,
            fmt::format("9 MC cells, max |z| {:.2f} (tol 3); threshold < 2b/d fails at {} of 1024 dims", worst_z,
                        threshold_failures)};
}

// 8. Where the generalized Gaussian bound overtakes the i.i.d. bound.
Outcome crossing() {
    const double c = crossing_scan(1e-4);
    double worst = 0;
    for (int i = 0; i <= 900; ++i) {
        const double p1 = 1.0 - std::pow(10.0, -3.0 - 0.01 * i);
        // Independent evaluation of 4 sqrt(ln 1/(1-p1)) / Phi^-1(p1).
        const double oracle_ratio =
            4.0 * std::sqrt(-std::log1p(-p1)) / oracle::phi_inv(p1);
        worst = std::max({worst, ratio_gengauss_to_gaussian(p1), oracle_ratio});
    }
    return {c > 0.95 && c < 0.999 && worst < 16.0,
            fmt::format("crossing at p1 = {:.4f} (in (0.95, 0.999)); max ratio on [0.999, 1-1e-12] = {:.4f} < 16", c,
                        worst)};
}

// 9. Clopper-Pearson miscoverage through the full certify pipeline, and
//    worker-count reproducibility.
Outcome statistical_validity() {
    const int trials = 10'000;
    const double sigma = 1.0;
    const double t = 0.8416;  // Phi(t) ~ 0.8
    const double p_true = static_cast<double>(oracle::phi(t / sigma));
    const SyntheticClassifier h(LinearRule{{1.0}, t});
    const auto noise = SmoothingDistribution::gaussian(sigma);
    const std::vector<double> x{0.0};
    std::string detail;
    bool pass = true;
    for (double alpha : {0.001, 0.05}) {
        int misses = 0;
        CertifyConfig cfg;
        cfg.n0 = 20;
        cfg.n = 200;
        cfg.alpha = ConfidenceLevel(alpha);
        for (int i = 0; i < trials; ++i) {
            cfg.seed = 9'000'000 + static_cast<std::uint64_t>(i);
            const auto r = certify(h, x, noise, cfg, {});
            const double truth = r.candidate == 0 ? p_true : 1.0 - p_true;
            if (r.p1_lower > truth) ++misses;
        }
        const double rate = static_cast<double>(misses) / trials;
        const double limit = alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / trials);
        pass = pass && rate <= limit;
        detail += fmt::format("alpha={}: miscoverage {:.4f} <= {:.4f}; ", alpha, rate, limit);
    }

    const auto task = make_prototype_task(PrototypeTaskSpec{}, ResolutionSpec{8, 3});
    const std::vector<NormOrder> ps{NormOrder(2.0), NormOrder::infinity()};
    int mismatches = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        CertifyConfig cfg;
        cfg.n = 50'000;
        cfg.seed = 99;
        cfg.workers = 1;
        const auto a = certify(task.classifier, task.points[i], SmoothingDistribution::gaussian(2.0), cfg, ps);
        for (unsigned w : {2u, 4u}) {
            cfg.workers = w;
            const auto b = certify(task.classifier, task.points[i], SmoothingDistribution::gaussian(2.0), cfg, ps);
            if (a.p1_lower != b.p1_lower || a.predicted_class != b.predicted_class ||
                a.radii.size() != b.radii.size()) {
                ++mismatches;
                continue;
            }
            for (std::size_t k = 0; k < a.radii.size(); ++k) mismatches += a.radii[k].radius != b.radii[k].radius;
        }
    }
    pass = pass && mismatches == 0;
    detail += fmt::format("workers 1/2/4 mismatches: {}", mismatches);
    return {pass, detail};
}

// 10. Shape of the noise has almost no effect on p1 on the prototype task.
Outcome shape_insensitivity() {
    const auto task = make_prototype_task(PrototypeTaskSpec{}, ResolutionSpec{8, 3});
    const double sigma = 2.0;
    CertifyConfig cfg;
    cfg.seed = 10;
    const std::vector<double> qs{1.0, 2.0, 4.0, 8.0};
    const auto rows = run_shape_comparison(task.points, task.classifier, sigma, qs, cfg);
    const std::size_t points = task.points.size();
    double worst_ratio = 0;
    double p_min = 1, p_max = 0;
    for (std::size_t i = 0; i < points; ++i) {
        double lo = 1, hi = 0;
        for (const auto& r : rows) {
            if (r.point_id != i) continue;
            lo = std::min(lo, r.p1_lower);
            hi = std::max(hi, r.p1_lower);
        }
        const double mid = 0.5 * (lo + hi);
        const double se = std::sqrt(mid * (1 - mid) / static_cast<double>(cfg.n));
        worst_ratio = std::max(worst_ratio, (hi - lo) / se);
        p_min = std::min(p_min, lo);
        p_max = std::max(p_max, hi);
    }
    return {worst_ratio < 5.0,
            fmt::format("d=192, sigma={}, {} points, p1_lower in [{:.4f}, {:.4f}]; max spread across q = {:.2f} "
                        "binomial stderr (tol 5)",
                        sigma, points, p_min, p_max, worst_ratio)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {"formula fidelity", formula_fidelity},
        {"dimensional scaling law", scaling_law},
        {"worst-case flip suite", flip_suite},
        {"bound dominance", dominance},
        {"mgf bound", mgf_bound},
        {"l1 containment", l1_containment},
        {"rho exactness", rho_exactness},
        {"bound crossing", crossing},
        {"statistical validity", statistical_validity},
        {"noise-shape insensitivity", shape_insensitivity},
    };
    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s [%d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%d criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
