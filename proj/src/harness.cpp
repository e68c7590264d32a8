#include "certlab/harness.hpp"

#include "certlab/statkernel.hpp"
#include "parse_util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace certlab {

namespace {

int count_classes_of(const SyntheticClassifier::Rule& rule) {
    return std::visit(
        [](const auto& r) -> int {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, LinearRule>) {
                return 2;
            } else if constexpr (std::is_same_v<T, PrototypeRule>) {
                return *std::max_element(r.labels.begin(), r.labels.end()) + 1;
            } else {
                return std::max(2, r.label + 1);
            }
        },
        rule);
}

void validate(const SyntheticClassifier::Rule& rule) {
    std::visit(
        [](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, LinearRule>) {
                const double norm = std::sqrt(std::inner_product(r.w.begin(), r.w.end(), r.w.begin(), 0.0));
                if (!(norm > 0.0)) throw std::invalid_argument("linear classifier needs a nonzero weight vector");
            } else if constexpr (std::is_same_v<T, PrototypeRule>) {
                if (r.centers.empty() || r.centers.size() != r.labels.size()) {
                    throw std::invalid_argument("prototype classifier needs one label per centre");
                }
                std::set<std::vector<double>> seen(r.centers.begin(), r.centers.end());
                if (seen.size() != r.centers.size()) throw std::invalid_argument("prototype centres must be distinct");
                for (int l : r.labels) {
                    if (l < 0) throw std::invalid_argument("prototype labels must be nonnegative");
                }
            } else {
                if (r.label < 0) throw std::invalid_argument("constant label must be nonnegative");
            }
        },
        rule);
}

std::uint64_t bits_of(double v) { return std::bit_cast<std::uint64_t>(v); }

std::uint64_t row_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> words) {
    for (std::uint64_t w : words) seed = mix_seed(seed, w);
    return seed;
}

}  // namespace

SyntheticClassifier::SyntheticClassifier(Rule rule) : rule_(std::move(rule)) {
    validate(rule_);
    num_classes_ = count_classes_of(rule_);
}

int SyntheticClassifier::classify(std::span<const double> z) const {
    return std::visit(
        [&](const auto& r) -> int {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, LinearRule>) {
                if (z.size() != r.w.size()) throw std::invalid_argument("linear classifier: dimension mismatch");
                return std::inner_product(r.w.begin(), r.w.end(), z.begin(), 0.0) <= r.t ? 0 : 1;
            } else if constexpr (std::is_same_v<T, PrototypeRule>) {
                std::size_t best = 0;
                double best_dist = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < r.centers.size(); ++i) {
                    const auto& c = r.centers[i];
                    if (c.size() != z.size()) throw std::invalid_argument("prototype classifier: dimension mismatch");
                    double acc = 0.0;
                    for (std::size_t j = 0; j < c.size(); ++j) {
                        const double diff = z[j] - c[j];
                        acc += diff * diff;
                    }
                    if (acc < best_dist) {
                        best_dist = acc;
                        best = i;
                    }
                }
                return r.labels[best];
            } else {
                return r.label;
            }
        },
        rule_);
}

SyntheticClassifier SyntheticClassifier::parse(std::string_view spec, std::size_t d) {
    const auto colon = spec.find(':');
    const std::string_view kind = spec.substr(0, colon);
    const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    if (kind == "constant") {
        const double label = detail::parse_double(rest.empty() ? "0" : rest, "constant label");
        if (label != std::floor(label)) throw std::invalid_argument("constant label must be an integer");
        return SyntheticClassifier(ConstantRule{static_cast<int>(label)});
    }
    const auto kv = detail::parse_key_values(rest);
    auto get = [&](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        return it == kv.end() ? std::nullopt : std::optional(it->second);
    };
    if (kind == "linear") {
        LinearRule rule;
        rule.t = get("t") ? detail::parse_double(*get("t"), "t") : 0.0;
        if (auto w = get("w")) {
            for (auto item : detail::split(*w, ';')) rule.w.push_back(detail::parse_double(item, "w"));
            if (rule.w.size() != d) {
                throw std::invalid_argument(fmt::format("linear classifier: w has {} entries, d = {}", rule.w.size(), d));
            }
        } else {
            rule.w.assign(d, 1.0);
        }
        return SyntheticClassifier(std::move(rule));
    }
    if (kind == "prototype") {
        PrototypeTaskSpec task;
        if (auto v = get("classes")) task.classes = static_cast<int>(detail::parse_double(*v, "classes"));
        if (auto v = get("sep")) task.separation = detail::parse_double(*v, "sep");
        if (auto v = get("seed")) task.seed = static_cast<std::uint64_t>(detail::parse_double(*v, "seed"));
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d) / 3.0)));
        if (3 * side * side != d) {
            throw std::invalid_argument(fmt::format("prototype classifier needs d = 3 * side^2 (got d = {})", d));
        }
        task.base_side = std::min<std::size_t>(task.base_side, side);
        return make_prototype_task(task, ResolutionSpec{side, 3}).classifier;
    }
    throw std::invalid_argument(fmt::format("unknown classifier kind '{}'", kind));
}

std::vector<double> pool_resolution(std::span<const double> x, ResolutionSpec res, std::size_t k) {
    if (k < 1 || res.side % k != 0) {
        throw std::invalid_argument(fmt::format("pool_resolution: side {} not divisible by {}", res.side, k));
    }
    if (x.size() != res.d()) throw std::invalid_argument("pool_resolution: input size does not match resolution");
    const std::size_t out_side = res.side / k;
    std::vector<double> out(res.channels * out_side * out_side, 0.0);
    const double inv_block = 1.0 / static_cast<double>(k * k);
    for (std::size_t c = 0; c < res.channels; ++c) {
        for (std::size_t r = 0; r < res.side; ++r) {
            for (std::size_t col = 0; col < res.side; ++col) {
                out[(c * out_side + r / k) * out_side + col / k] += x[(c * res.side + r) * res.side + col];
            }
        }
    }
    for (double& v : out) v *= inv_block;
    return out;
}

std::vector<double> upsample_repeat(std::span<const double> x, ResolutionSpec res, std::size_t k) {
    if (k < 1) throw std::invalid_argument("upsample_repeat: factor must be at least 1");
    if (x.size() != res.d()) throw std::invalid_argument("upsample_repeat: input size does not match resolution");
    const std::size_t out_side = res.side * k;
    std::vector<double> out(res.channels * out_side * out_side);
    for (std::size_t c = 0; c < res.channels; ++c) {
        for (std::size_t r = 0; r < out_side; ++r) {
            for (std::size_t col = 0; col < out_side; ++col) {
                out[(c * out_side + r) * out_side + col] = x[(c * res.side + r / k) * res.side + col / k];
            }
        }
    }
    return out;
}

SyntheticTask make_prototype_task(const PrototypeTaskSpec& spec, ResolutionSpec res) {
    if (spec.classes < 2) throw std::invalid_argument("prototype task needs at least two classes");
    if (!(spec.separation > 0.0)) throw std::invalid_argument("prototype task needs a positive separation");
    if (spec.base_side < 1 || res.side % spec.base_side != 0) {
        throw std::invalid_argument(
            fmt::format("prototype task: side {} is not a multiple of base side {}", res.side, spec.base_side));
    }
    const ResolutionSpec base{spec.base_side, res.channels};
    const std::size_t factor = res.side / spec.base_side;
    RngStream rng(spec.seed, 0x7A5C);
    PrototypeRule rule;
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    for (int k = 0; k < spec.classes; ++k) {
        std::vector<double> pattern(base.d());
        for (double& v : pattern) v = rng.coin() ? spec.separation : -spec.separation;
        auto center = upsample_repeat(pattern, base, factor);
        rule.centers.push_back(center);
        rule.labels.push_back(k);
        points.push_back(std::move(center));
        labels.push_back(k);
    }
    return {SyntheticClassifier(std::move(rule)), std::move(points), std::move(labels), res};
}

SmoothingDistribution matched_noise(NormOrder p, double sigma) {
    if (p.is_infinite()) return SmoothingDistribution::uniform_linf(std::sqrt(3.0) * sigma);
    return SmoothingDistribution::generalized_gaussian_sigma(p.value(), sigma);
}

std::vector<BoundVsCertificateRow> bound_vs_certificate_for_point(std::size_t point_id, std::span<const double> x,
                                                                  const BaseClassifier& classifier, double sigma,
                                                                  const std::vector<NormOrder>& p_list,
                                                                  const CertifyConfig& config) {
    for (const auto& p : p_list) {
        if (p.value() < 2.0) throw std::invalid_argument("bound_vs_certificate: p must lie in [2, inf]");
    }
    CertifyConfig gconf = config;
    gconf.seed = row_seed(config.seed, {point_id, 0x6A55});
    const auto gcert = certify(classifier, x, SmoothingDistribution::gaussian(sigma), gconf, {});

    std::vector<BoundVsCertificateRow> rows;
    for (const auto& p : p_list) {
        const auto noise = matched_noise(p, sigma);
        CertifyConfig pconf = config;
        pconf.seed = row_seed(config.seed, {point_id, bits_of(p.value())});
        const auto est = certify(classifier, x, noise, pconf, {});

        BoundVsCertificateRow row{.point_id = point_id,
                                  .p = p,
                                  .noise = noise.to_string(),
                                  .d = x.size(),
                                  .abstain = est.abstain,
                                  .p1_lower = est.p1_lower};
        if (!gcert.abstain) row.gaussian_p1_lower = gcert.p1_lower;
        if (!est.abstain) {
            const auto pair = ProbabilityPair::binary(est.p1_lower);
            const auto iid = iid_upper_bound(sigma, x.size(), p, pair);
            const auto gg = gengauss_upper_bound(sigma, x.size(), p, pair,
                                                 p.is_infinite() ? std::nullopt : std::optional(p.value()));
            row.iid_bound = iid.value;
            row.gengauss_bound = gg.value;
            row.bounds_preconditions_met = iid.preconditions_met && gg.preconditions_met;
            row.tighter_bound_id = gg.value < iid.value ? "GENGAUSS" : "IID";
            if (!gcert.abstain) {
                const double radius =
                    gaussian_lp_radius(sigma, x.size(), p, ProbabilityPair(gcert.p1_lower, gcert.p2_upper));
                row.gaussian_radius = radius;
                row.ratio = std::min(iid.value, gg.value) / radius;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<BoundVsCertificateRow> run_bound_vs_certificate(const std::vector<std::vector<double>>& points,
                                                            const BaseClassifier& classifier, double sigma,
                                                            const std::vector<NormOrder>& p_list,
                                                            const CertifyConfig& config) {
    std::vector<BoundVsCertificateRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto part = bound_vs_certificate_for_point(i, points[i], classifier, sigma, p_list, config);
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return rows;
}

std::vector<DimensionSweepRow> dimension_rows(const SyntheticTask& task, double sigma,
                                              const std::vector<NormOrder>& p_list, const CertifyConfig& config) {
    for (const auto& p : p_list) {
        if (p.value() < 2.0) throw std::invalid_argument("run_dimension_sweep: p must lie in [2, inf]");
    }
    const auto gaussian = SmoothingDistribution::gaussian(sigma);
    const auto& res = task.resolution;
    std::vector<DimensionSweepRow> rows;
    for (std::size_t i = 0; i < task.points.size(); ++i) {
        CertifyConfig c = config;
        c.seed = row_seed(config.seed, {res.side, res.channels, i});
        const auto cert = certify(task.classifier, task.points[i], gaussian, c, p_list);
        for (std::size_t k = 0; k < p_list.size(); ++k) {
            DimensionSweepRow row{res.side, res.d(), i, p_list[k], cert.abstain, cert.p1_lower, std::nullopt,
                                  std::nullopt};
            if (!cert.abstain) row.radius = cert.radii[k].radius;
            rows.push_back(row);
        }
    }
    return rows;
}

void project_radii(std::vector<DimensionSweepRow>& rows) {
    if (rows.empty()) return;
    std::size_t d0 = rows.front().d;
    for (const auto& r : rows) d0 = std::min(d0, r.d);
    std::map<std::pair<std::size_t, NormOrder>, double> anchor;
    for (const auto& r : rows) {
        if (r.d == d0 && r.radius) anchor.emplace(std::make_pair(r.point_id, r.p), *r.radius);
    }
    for (auto& r : rows) {
        r.projected_radius.reset();
        const auto it = anchor.find({r.point_id, r.p});
        if (it == anchor.end()) continue;
        const double exponent = 0.5 - r.p.reciprocal();
        r.projected_radius =
            it->second * std::exp(exponent * std::log(static_cast<double>(d0) / static_cast<double>(r.d)));
    }
}

std::vector<DimensionSweepRow> run_dimension_sweep(
    const std::function<SyntheticTask(const ResolutionSpec&)>& make_task,
    const std::vector<ResolutionSpec>& resolutions, double sigma, const std::vector<NormOrder>& p_list,
    const CertifyConfig& config) {
    if (resolutions.empty()) throw std::invalid_argument("run_dimension_sweep: no resolutions");
    std::vector<DimensionSweepRow> rows;
    for (const auto& res : resolutions) {
        auto part = dimension_rows(make_task(res), sigma, p_list, config);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    project_radii(rows);
    return rows;
}

ShapeRow shape_row(std::size_t point_id, std::span<const double> x, const BaseClassifier& classifier, double sigma,
                   double q, const CertifyConfig& config) {
    const auto noise = SmoothingDistribution::generalized_gaussian_sigma(q, sigma);
    CertifyConfig c = config;
    c.seed = row_seed(config.seed, {point_id, bits_of(q)});
    const auto cert = certify(classifier, x, noise, c, {});
    return {q, point_id, cert.p1_lower, cert.abstain};
}

std::vector<ShapeRow> run_shape_comparison(const std::vector<std::vector<double>>& points,
                                           const BaseClassifier& classifier, double sigma,
                                           const std::vector<double>& q_list, const CertifyConfig& config) {
    std::vector<ShapeRow> rows;
    for (double q : q_list) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            rows.push_back(shape_row(i, points[i], classifier, sigma, q, config));
        }
    }
    return rows;
}

double crossing_scan(double step) {
    if (!(step > 0.0 && step <= 1e-3)) throw std::invalid_argument("crossing_scan: step must lie in (0, 1e-3]");
    for (std::size_t k = 1;; ++k) {
        const double p1 = 0.5 + static_cast<double>(k) * step;
        if (p1 >= 1.0) break;
        if (ratio_gengauss_to_gaussian(p1) < ratio_iid_to_gaussian(p1)) return p1;
    }
    throw std::runtime_error("crossing_scan: no crossing found on the grid");
}

}  // namespace certlab
