#include "certlab/bounds.hpp"

#include "certlab/certify.hpp"
#include "certlab/statkernel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace certlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// d^exponent evaluated in log space.
double dim_power(std::size_t d, double exponent) {
    return std::exp(exponent * std::log(static_cast<double>(d)));
}

void require_dim(std::size_t d) {
    if (d < 1) throw std::invalid_argument("dimension d must be at least 1");
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(fmt::format("{} must be positive and finite (got {})", what, v));
    }
}

class Notes {
public:
    void fail(std::string note) {
        met_ = false;
        add(std::move(note));
    }
    void add(std::string note) {
        if (!text_.empty()) text_ += "; ";
        text_ += note;
    }
    bool met() const { return met_; }
    const std::string& text() const { return text_; }

private:
    bool met_ = true;
    std::string text_;
};

}  // namespace

std::string_view family_name(BoundFamily f) {
    switch (f) {
        case BoundFamily::Iid: return "iid";
        case BoundFamily::GenGauss: return "gengauss";
        case BoundFamily::UniformLinf: return "uniform-linf";
        case BoundFamily::UniformL1: return "uniform-l1";
    }
    return "unknown";
}

BoundFamily parse_family(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    std::replace(lower.begin(), lower.end(), '_', '-');
    if (lower == "iid") return BoundFamily::Iid;
    if (lower == "gengauss") return BoundFamily::GenGauss;
    if (lower == "uniform-linf" || lower == "linf") return BoundFamily::UniformLinf;
    if (lower == "uniform-l1" || lower == "l1") return BoundFamily::UniformL1;
    throw std::invalid_argument(fmt::format("unknown bound family '{}'", name));
}

BoundResult iid_upper_bound(double sigma, std::size_t d, NormOrder p, ProbabilityPair pair) {
    require_positive(sigma, "sigma");
    require_dim(d);
    Notes notes;
    if (p.value() < 2.0) notes.fail("p < 2");
    if (pair.p1 < 0.5) notes.fail("p1 < 1/2");
    if (pair.p1 + pair.p2 > 1.0) notes.fail("p1 + p2 > 1");
    if (pair.p2 <= 0.0) notes.fail("p2 = 0 (bound infinite)");
    if (pair.p1 >= 1.0) notes.fail("p1 = 1 (bound infinite)");

    const double spread = (pair.p1 < 1.0 ? 1.0 / std::sqrt(1.0 - pair.p1) : kInf) +
                          (pair.p2 > 0.0 ? 1.0 / std::sqrt(pair.p2) : kInf);
    const double value = sigma / (2.0 * std::numbers::sqrt2 * dim_power(d, 0.5 - p.reciprocal())) * spread;
    return {value, "iid-chebyshev", notes.met(), notes.text()};
}

BoundResult gengauss_upper_bound(double sigma, std::size_t d, NormOrder p, ProbabilityPair pair,
                                 std::optional<double> q) {
    require_positive(sigma, "sigma");
    require_dim(d);
    Notes notes;
    if (p.value() < 2.0) notes.fail("p < 2");
    const double edge = std::exp(-static_cast<double>(d) / 4.0);
    if (!(pair.p2 > edge)) notes.fail(fmt::format("p2 <= exp(-d/4) = {}", edge));
    if (!(pair.p2 <= pair.p1)) notes.fail("p2 > p1");
    if (!(pair.p1 < 1.0 - edge)) notes.fail(fmt::format("p1 >= 1 - exp(-d/4) = {}", 1.0 - edge));
    if (pair.p1 + pair.p2 > 1.0) notes.fail("p1 + p2 > 1");
    if (q.has_value()) {
        if (*q < 1.0) notes.fail(fmt::format("shape q = {} < 1", *q));
    } else {
        notes.add("requires generalized Gaussian with q >= 1");
    }

    auto root_log_inv = [](double v) { return v > 0.0 ? std::sqrt(std::log(1.0 / v)) : kInf; };
    const double spread = root_log_inv(1.0 - pair.p1) + root_log_inv(pair.p2);
    const double value = 2.0 * sigma / dim_power(d, 0.5 - p.reciprocal()) * spread;
    return {value, "gengauss-chernoff", notes.met(), notes.text()};
}

BoundResult linf_uniform_upper_bound(double b, std::size_t d, NormOrder p) {
    require_positive(b, "half-width b");
    require_dim(d);
    return {2.0 * b / dim_power(d, 1.0 - p.reciprocal()), "uniform-linf-shift", true, ""};
}

BoundResult l1_uniform_upper_bound(double b, std::size_t d) {
    require_positive(b, "l1 radius b");
    require_dim(d);
    return {2.0 * b / static_cast<double>(d), "uniform-l1-shift", true, ""};
}

double ratio_iid_to_gaussian(double p1) {
    if (!(p1 > 0.5 && p1 < 1.0)) throw std::invalid_argument("ratio_iid_to_gaussian: p1 must lie in (1/2, 1)");
    return 1.0 / (std_normal_inv_cdf(p1) * std::sqrt(2.0 * (1.0 - p1)));
}

double ratio_gengauss_to_gaussian(double p1) {
    if (!(p1 > 0.5 && p1 < 1.0)) {
        throw std::invalid_argument("ratio_gengauss_to_gaussian: p1 must lie in (1/2, 1)");
    }
    return 4.0 * std::sqrt(-std::log1p(-p1)) / std_normal_inv_cdf(p1);
}

namespace {

struct Scales {
    std::optional<double> sigma;
    std::optional<double> b;
};

// Resolves the (sigma, b) pair a family needs from what the caller supplied.
Scales resolve_scales(BoundFamily family, std::optional<double> sigma, std::optional<double> b,
                      std::optional<double> q) {
    switch (family) {
        case BoundFamily::Iid:
        case BoundFamily::GenGauss:
            if (sigma) return {sigma, q ? std::optional(scale_from_sigma(*q, *sigma)) : std::nullopt};
            if (b && q) return {sigma_from_scale(*q, *b), b};
            throw std::invalid_argument(
                fmt::format("{} bound needs sigma (or b together with q)", family_name(family)));
        case BoundFamily::UniformLinf:
            if (b) return {*b / std::sqrt(3.0), b};
            if (sigma) return {sigma, std::sqrt(3.0) * *sigma};
            throw std::invalid_argument("uniform-linf bound needs b or sigma");
        case BoundFamily::UniformL1:
            if (b) return {std::nullopt, b};
            throw std::invalid_argument("uniform-l1 bound needs b");
    }
    throw std::invalid_argument("unknown family");
}

BoundResult evaluate_resolved(BoundFamily family, const Scales& s, std::optional<double> q, std::size_t d,
                              NormOrder p, const std::optional<ProbabilityPair>& pair) {
    switch (family) {
        case BoundFamily::Iid:
            if (!pair) throw std::invalid_argument("iid bound needs (p1, p2)");
            return iid_upper_bound(*s.sigma, d, p, *pair);
        case BoundFamily::GenGauss:
            if (!pair) throw std::invalid_argument("gengauss bound needs (p1, p2)");
            return gengauss_upper_bound(*s.sigma, d, p, *pair, q);
        case BoundFamily::UniformLinf: return linf_uniform_upper_bound(*s.b, d, p);
        case BoundFamily::UniformL1: return l1_uniform_upper_bound(*s.b, d);
    }
    throw std::invalid_argument("unknown family");
}

}  // namespace

BoundResult evaluate_bound(const BoundQuery& query) {
    if (query.sigma.has_value() == query.b.has_value()) {
        throw std::invalid_argument("bound query needs exactly one of sigma or b");
    }
    const Scales s = resolve_scales(query.family, query.sigma, query.b, query.q);
    return evaluate_resolved(query.family, s, query.q, query.d, query.p, query.pair);
}

std::vector<SweepRow> bound_sweep(const SweepTemplate& tmpl, const std::vector<std::size_t>& dims,
                                  const std::vector<NormOrder>& ps, const std::vector<double>& p1s) {
    if (dims.empty() || ps.empty()) throw std::invalid_argument("bound_sweep: dims and ps must be nonempty");
    if (tmpl.families.empty()) throw std::invalid_argument("bound_sweep: no families requested");

    std::vector<SweepRow> rows;
    for (BoundFamily family : tmpl.families) {
        const bool uses_pair = family == BoundFamily::Iid || family == BoundFamily::GenGauss;
        // Uniform families still carry p1 so the Gaussian column can be filled.
        std::vector<std::optional<double>> p1_cells(p1s.begin(), p1s.end());
        if (p1_cells.empty()) p1_cells.emplace_back(std::nullopt);
        for (std::size_t d : dims) {
            for (NormOrder p : ps) {
                for (const auto& p1 : p1_cells) {
                    SweepRow row{family, std::nullopt, std::nullopt, d, p, p1, std::nullopt,
                                 std::nullopt, std::nullopt, {}};
                    try {
                        const Scales s = resolve_scales(family, tmpl.sigma, tmpl.b, tmpl.q);
                        row.sigma = s.sigma;
                        row.b = s.b;
                        std::optional<ProbabilityPair> pair;
                        if (p1) {
                            pair = ProbabilityPair::binary(*p1);
                            row.p2 = pair->p2;
                        } else if (uses_pair) {
                            throw std::invalid_argument("p1 required for this family");
                        }
                        row.bound = evaluate_resolved(family, s, tmpl.q, d, p, pair);
                        if (p.value() >= 2.0 && pair && s.sigma && pair->p2 > 0.0 && pair->p2 <= pair->p1 &&
                            pair->p1 < 1.0) {
                            row.gaussian_radius = gaussian_lp_radius(*s.sigma, d, p, *pair);
                        }
                    } catch (const std::exception& e) {
                        row.error = e.what();
                    }
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

}  // namespace certlab
