#include "certlab/verify.hpp"

#include "certlab/bounds.hpp"
#include "certlab/certify.hpp"
#include "certlab/distributions.hpp"
#include "certlab/harness.hpp"
#include "certlab/io.hpp"
#include "certlab/statkernel.hpp"
#include "certlab/worstcase.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace certlab {

using nlohmann::json;

bool VerifyReport::pass() const {
    return !cells.empty() && std::all_of(cells.begin(), cells.end(), [](const VerifyCell& c) { return c.pass; });
}

json VerifyReport::to_json() const {
    json arr = json::array();
    for (const auto& c : cells) {
        arr.push_back({{"params", c.params},
                       {"statistic", io::json_num(c.statistic)},
                       {"stderr", io::json_num(c.stderr_)},
                       {"expected", io::json_num(c.expected)},
                       {"pass", c.pass}});
    }
    return {{"suite", suite}, {"pass", pass()}, {"cells", arr}};
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"lemma1", "lemma2", "box",       "l1",
                                                "flip",   "scaling", "dominance", "crossing"};
    return names;
}

namespace {

std::vector<std::size_t> dims_or(const VerifyParams& p, std::vector<std::size_t> fallback) {
    return p.dims.empty() ? fallback : p.dims;
}

std::vector<double> eps_or(const VerifyParams& p, std::vector<double> fallback) {
    return p.eps.empty() ? fallback : p.eps;
}

VerifyReport lemma1(const VerifyParams&) {
    VerifyReport r{"lemma1", {}};
    for (double q : {1.0, 1.5, 2.0, 4.0, 8.0}) {
        for (double t_sigma : {0.05, 0.1, 0.2, 0.4}) {
            // Unit sigma, so t equals t * sigma.
            const double b = scale_from_sigma(q, 1.0);
            const auto check = mgf_bound_check(q, b, t_sigma);
            r.cells.push_back({{{"q", q}, {"t_sigma", t_sigma}}, check.lhs, 0.0, check.rhs, check.holds});
        }
    }
    double worst = 0.0;
    double worst_q = 1.0;
    for (int i = 0; i <= 9900; ++i) {
        const double q = 1.0 + 0.01 * i;
        const double c = lemma1_constant(q);
        if (c > worst) {
            worst = c;
            worst_q = q;
        }
    }
    r.cells.push_back({{{"check", "sup lemma1_constant on q in [1, 100]"}, {"argmax_q", worst_q}},
                       worst, 0.0, kMgfConstant, worst < kMgfConstant});
    return r;
}

VerifyReport lemma2(const VerifyParams& p) {
    VerifyReport r{"lemma2", {}};
    const RngStream root(p.seed, 0x12);
    std::uint64_t cell = 0;
    for (std::size_t d : dims_or(p, {2, 3})) {
        for (double eps : eps_or(p, {0.3, 1.0})) {
            const auto grid = lemma2_grid_check(p.b, d, eps, p.step);
            r.cells.push_back({{{"check", "grid containment"}, {"d", d}, {"b", p.b}, {"eps", eps},
                                {"step", p.step}, {"points", grid.points}, {"in_intersection", grid.in_intersection}},
                               static_cast<double>(grid.violations), 0.0, 0.0, grid.violations == 0});
            const auto mc = l1_overlap_mc(ShiftedL1Construction(p.b, d, eps), p.n, root.substream(cell++), p.workers);
            r.cells.push_back({{{"check", "l1 overlap mass >= lower bound"}, {"d", d}, {"b", p.b}, {"eps", eps},
                                {"n", p.n}},
                               mc.rho_hat, mc.stderr_, mc.lower_bound, mc.holds});
        }
    }
    return r;
}

VerifyReport box(const VerifyParams& p) {
    VerifyReport r{"box", {}};
    const RngStream root(p.seed, 0x13);
    std::uint64_t cell = 0;
    for (std::size_t d : dims_or(p, {2, 5, 16})) {
        for (double eps : eps_or(p, {0.05, 0.2})) {
            const auto rep = box_flip_verify(ShiftedBoxConstruction(p.b, d, eps), p.n, root.substream(cell++), p.workers);
            r.cells.push_back({{{"check", "overlap mass"}, {"d", d}, {"b", p.b}, {"eps", eps}, {"n", p.n},
                                {"rho_hat_xprime", rep.rho_hat_xprime}},
                               rep.rho_hat_x, rep.stderr_x, rep.expected, rep.consistent && rep.matches_expected});
        }
    }
    std::size_t violations = 0;
    double worst_gap = 0.0;
    for (std::size_t d = 1; d <= 1024; ++d) {
        const double thr = box_flip_threshold(p.b, d);
        if (!(thr < 2.0 * p.b / static_cast<double>(d))) ++violations;
        worst_gap = std::max(worst_gap, std::fabs(box_overlap_prob(p.b, d, thr) - 0.5));
    }
    r.cells.push_back({{{"check", "threshold < 2b/d for d in [1, 1024]"}, {"b", p.b}},
                       static_cast<double>(violations), 0.0, 0.0, violations == 0});
    r.cells.push_back({{{"check", "overlap at threshold equals 1/2"}, {"b", p.b}}, worst_gap, 0.0, 0.0,
                       worst_gap <= 1e-12});
    return r;
}

VerifyReport l1(const VerifyParams& p) {
    VerifyReport r{"l1", {}};
    const RngStream root(p.seed, 0x14);
    std::uint64_t cell = 0;
    for (std::size_t d : dims_or(p, {2, 3, 5})) {
        for (double eps : eps_or(p, {0.2, 1.0})) {
            const auto mc = l1_overlap_mc(ShiftedL1Construction(p.b, d, eps), p.n, root.substream(cell++), p.workers);
            r.cells.push_back({{{"d", d}, {"b", p.b}, {"eps", eps}, {"n", p.n}}, mc.rho_hat, mc.stderr_,
                               mc.lower_bound, mc.holds});
        }
    }
    return r;
}

std::vector<std::pair<std::string, SmoothingDistribution>> flip_families() {
    return {{"gengauss q=1", SmoothingDistribution::generalized_gaussian_sigma(1.0, 1.0)},
            {"gengauss q=2", SmoothingDistribution::gaussian(1.0)},
            {"gengauss q=4", SmoothingDistribution::generalized_gaussian_sigma(4.0, 1.0)},
            {"uniform-linf", SmoothingDistribution::uniform_linf(std::sqrt(3.0))}};
}

VerifyReport flip(const VerifyParams& p) {
    VerifyReport r{"flip", {}};
    const RngStream root(p.seed, 0x15);
    std::uint64_t cell = 0;
    const std::vector<double> multipliers{0.9, 1.1};
    for (const auto& [name, dist] : flip_families()) {
        for (std::size_t d : dims_or(p, {4, 16, 64})) {
            for (double p1 : {0.7, 0.9}) {
                HalfSpaceOptions opts;
                opts.seed = mix_seed(p.seed, cell);
                opts.workers = p.workers;
                const auto c = build_halfspace(dist, d, ProbabilityPair::binary(p1), opts);
                const auto rows = verify_flip(c, multipliers, p.n, root.substream(cell++), p.workers);
                for (const auto& row : rows) {
                    const int want = row.multiplier < 1.0 ? 1 : -1;
                    r.cells.push_back({{{"family", name}, {"d", d}, {"p1", p1}, {"multiplier", row.multiplier},
                                        {"eps_star", c.eps_star}, {"p1_hat", row.p1_hat}, {"p2_hat", row.p2_hat}},
                                       row.p1_hat - row.p2_hat, row.diff_stderr, static_cast<double>(want),
                                       row.sign == want});
                    if (c.exact) {
                        const double sd = *dist.coordinate_sigma() * std::sqrt(static_cast<double>(d));
                        const double mean = row.multiplier * c.eps_star * static_cast<double>(d);
                        const double p1_exact = std_normal_cdf((c.s1 - mean) / sd);
                        const double se = binomial_stderr(p1_exact, p.n);
                        r.cells.push_back({{{"family", name}, {"d", d}, {"p1", p1}, {"multiplier", row.multiplier},
                                            {"check", "p1_hat vs closed form"}},
                                           row.p1_hat, se, p1_exact, std::fabs(row.p1_hat - p1_exact) <= 3.0 * se});
                    }
                }
            }
        }
    }
    return r;
}

VerifyReport scaling(const VerifyParams&) {
    VerifyReport r{"scaling", {}};
    const auto pair = ProbabilityPair(0.9, 0.05);
    for (std::size_t d : {16, 64, 256, 1024}) {
        for (double pv : {2.0, 4.0, std::numeric_limits<double>::infinity()}) {
            const NormOrder p(pv);
            const double e_half = std::pow(4.0, 0.5 - p.reciprocal());
            const double e_one = std::pow(4.0, 1.0 - p.reciprocal());
            const std::pair<const char*, std::pair<double, double>> checks[] = {
                {"iid", {iid_upper_bound(1.0, d, p, pair).value / iid_upper_bound(1.0, 4 * d, p, pair).value, e_half}},
                {"gengauss",
                 {gengauss_upper_bound(1.0, d, p, pair).value / gengauss_upper_bound(1.0, 4 * d, p, pair).value,
                  e_half}},
                {"uniform-linf",
                 {linf_uniform_upper_bound(1.0, d, p).value / linf_uniform_upper_bound(1.0, 4 * d, p).value, e_one}},
                {"uniform-l1", {l1_uniform_upper_bound(1.0, d).value / l1_uniform_upper_bound(1.0, 4 * d).value, 4.0}},
            };
            for (const auto& [family, vals] : checks) {
                r.cells.push_back({{{"family", family}, {"d", d}, {"p", p.str()}}, vals.first, 0.0, vals.second,
                                   std::fabs(vals.first - vals.second) <= 1e-12 * vals.second});
            }
        }
    }
    return r;
}

VerifyReport dominance(const VerifyParams&) {
    VerifyReport r{"dominance", {}};
    std::size_t flip_violations = 0;
    std::size_t cert_violations = 0;
    std::size_t flip_cells = 0;
    std::size_t cert_cells = 0;
    const auto gaussian = SmoothingDistribution::gaussian(1.0);
    for (std::size_t d : {16, 64, 256, 1024, 3072}) {
        for (double p1 : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999, 0.9999}) {
            for (double p2_frac : {1.0, 0.5, 0.1}) {
                const double p2 = (1.0 - p1) * p2_frac;
                const ProbabilityPair pair(p1, p2);
                const auto c = build_halfspace(gaussian, d, pair);
                for (double pv : {2.0, 3.0, 4.0, 8.0, std::numeric_limits<double>::infinity()}) {
                    const NormOrder p(pv);
                    const auto iid = iid_upper_bound(1.0, d, p, pair);
                    ++flip_cells;
                    if (flip_lp_norm(c, p) > iid.value) ++flip_violations;
                    if (p1 > p2) {
                        const double radius = gaussian_lp_radius(1.0, d, p, pair);
                        double bound = iid.value;
                        const auto gg = gengauss_upper_bound(1.0, d, p, pair, 2.0);
                        if (gg.preconditions_met) bound = std::min(bound, gg.value);
                        ++cert_cells;
                        if (radius > bound) ++cert_violations;
                    }
                }
            }
        }
    }
    r.cells.push_back({{{"check", "flip_lp_norm <= iid bound"}, {"cells", flip_cells}},
                       static_cast<double>(flip_violations), 0.0, 0.0, flip_violations == 0});
    r.cells.push_back({{{"check", "gaussian certificate <= min applicable bound"}, {"cells", cert_cells}},
                       static_cast<double>(cert_violations), 0.0, 0.0, cert_violations == 0});
    return r;
}

VerifyReport crossing(const VerifyParams&) {
    VerifyReport r{"crossing", {}};
    const double cross = crossing_scan(1e-4);
    r.cells.push_back({{{"check", "crossing in (0.95, 0.999)"}, {"step", 1e-4}}, cross, 0.0, 0.99,
                       cross > 0.95 && cross < 0.999});
    std::size_t reversals = 0;
    for (double p1 = cross; p1 < 1.0 - 1e-6; p1 += 1e-4) {
        if (!(ratio_gengauss_to_gaussian(p1) < ratio_iid_to_gaussian(p1))) ++reversals;
    }
    r.cells.push_back({{{"check", "gengauss stays tighter up to 1 - 1e-6"}}, static_cast<double>(reversals), 0.0,
                       0.0, reversals == 0});
    double worst = 0.0;
    // Log-spaced tail 1 - p1 from 1e-3 down to 1e-12.
    for (int i = 0; i <= 900; ++i) {
        const double p1 = 1.0 - std::pow(10.0, -3.0 - 0.01 * i);
        worst = std::max(worst, ratio_gengauss_to_gaussian(p1));
    }
    r.cells.push_back({{{"check", "gengauss ratio < 16 on [0.999, 1 - 1e-12]"}}, worst, 0.0, 16.0, worst < 16.0});
    return r;
}

}  // namespace

VerifyReport run_suite(const std::string& name, const VerifyParams& params) {
    if (name == "lemma1") return lemma1(params);
    if (name == "lemma2") return lemma2(params);
    if (name == "box") return box(params);
    if (name == "l1") return l1(params);
    if (name == "flip") return flip(params);
    if (name == "scaling") return scaling(params);
    if (name == "dominance") return dominance(params);
    if (name == "crossing") return crossing(params);
    throw std::invalid_argument(fmt::format("unknown verification suite '{}'", name));
}

}  // namespace certlab
