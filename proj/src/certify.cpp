#include "certlab/certify.hpp"

#include "certlab/montecarlo.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace certlab {

namespace {

constexpr std::uint64_t kSelectionStream = 1;
constexpr std::uint64_t kEstimationStream = 2;

}  // namespace

std::vector<std::uint64_t> count_classes(const BaseClassifier& h, std::span<const double> x,
                                         const SmoothingDistribution& dist, std::size_t n,
                                         const RngStream& rng, unsigned workers) {
    if (x.empty()) throw std::invalid_argument("count_classes: input point is empty");
    const int classes = h.num_classes();
    if (classes < 1) throw std::invalid_argument("count_classes: classifier reports no classes");

    // Indexed by chunk, then summed in order; integer sums commute anyway.
    std::vector<std::vector<std::uint64_t>> per_chunk(chunk_count(n));
    for_each_chunk(n, workers, rng, [&](std::size_t c, std::size_t count, RngStream& stream) {
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(classes), 0);
        std::vector<double> z(x.size());
        for (std::size_t i = 0; i < count; ++i) {
            sample_into(dist, z, stream);
            for (std::size_t j = 0; j < z.size(); ++j) z[j] += x[j];
            const int label = h.classify(z);
            if (label < 0 || label >= classes) {
                throw std::out_of_range(fmt::format("classifier returned label {} outside [0, {})", label, classes));
            }
            ++counts[static_cast<std::size_t>(label)];
        }
        per_chunk[c] = std::move(counts);
    });
    std::vector<std::uint64_t> total(static_cast<std::size_t>(classes), 0);
    for (const auto& counts : per_chunk) {
        for (std::size_t k = 0; k < counts.size(); ++k) total[k] += counts[k];
    }
    return total;
}

int smoothed_predict(const BaseClassifier& h, std::span<const double> x, const SmoothingDistribution& dist,
                     std::size_t n0, const RngStream& rng, unsigned workers) {
    if (n0 < 1) throw std::invalid_argument("smoothed_predict: n0 must be at least 1");
    const auto counts = count_classes(h, x, dist, n0, rng, workers);
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double estimate_p1_lower(const BaseClassifier& h, std::span<const double> x, const SmoothingDistribution& dist,
                         int candidate, std::size_t n, ConfidenceLevel alpha, const RngStream& rng,
                         unsigned workers) {
    if (n < 1) throw std::invalid_argument("estimate_p1_lower: n must be at least 1");
    const auto counts = count_classes(h, x, dist, n, rng, workers);
    const std::uint64_t k =
        (candidate >= 0 && candidate < static_cast<int>(counts.size())) ? counts[static_cast<std::size_t>(candidate)] : 0;
    return clopper_pearson_lower(k, n, alpha);
}

double p2_upper_from_p1(double p1_lower) {
    if (!(p1_lower >= 0.0 && p1_lower <= 1.0)) {
        throw std::invalid_argument("p2_upper_from_p1: p1_lower must lie in [0, 1]");
    }
    return 1.0 - p1_lower;
}

double gaussian_l2_radius(double sigma, ProbabilityPair pair) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_l2_radius: sigma must be positive");
    if (!(pair.p1 > 0.0 && pair.p1 < 1.0 && pair.p2 > 0.0 && pair.p2 < 1.0)) {
        throw std::invalid_argument("gaussian_l2_radius: p1 and p2 must lie strictly inside (0, 1)");
    }
    if (!pair.ordered()) throw std::invalid_argument("gaussian_l2_radius: requires p2 <= p1");
    return 0.5 * sigma * (std_normal_inv_cdf(pair.p1) - std_normal_inv_cdf(pair.p2));
}

double gaussian_lp_radius(double sigma, std::size_t d, NormOrder p, ProbabilityPair pair) {
    if (p.value() < 2.0) {
        throw std::invalid_argument(fmt::format(
            "gaussian_lp_radius: p = {} < 2; norm equivalence only converts l2 certificates to p >= 2", p.str()));
    }
    if (d < 1) throw std::invalid_argument("gaussian_lp_radius: d must be at least 1");
    const double exponent = 0.5 - p.reciprocal();
    return gaussian_l2_radius(sigma, pair) / std::exp(exponent * std::log(static_cast<double>(d)));
}

CertificateResult certify(const BaseClassifier& h, std::span<const double> x, const SmoothingDistribution& dist,
                          const CertifyConfig& config, std::span<const NormOrder> p_list) {
    for (const auto& p : p_list) {
        if (p.value() < 2.0) {
            throw std::invalid_argument(fmt::format("certify: requested p = {} < 2", p.str()));
        }
    }
    if (config.n0 < 1 || config.n < 1) throw std::invalid_argument("certify: n0 and n must be at least 1");

    CertificateResult result;
    result.n0 = config.n0;
    result.n = config.n;
    result.alpha = config.alpha.alpha();
    result.seed = config.seed;
    result.dimension = x.size();

    const RngStream root(config.seed, 0);
    result.candidate =
        smoothed_predict(h, x, dist, config.n0, root.substream(kSelectionStream), config.workers);
    result.p1_lower = estimate_p1_lower(h, x, dist, result.candidate, config.n, config.alpha,
                                        root.substream(kEstimationStream), config.workers);
    result.p2_upper = p2_upper_from_p1(result.p1_lower);
    result.certificate_available = dist.is_gaussian();

    if (result.p1_lower <= 0.5) {
        result.abstain = true;
        result.predicted_class = kAbstain;
        return result;
    }
    result.abstain = false;
    result.predicted_class = result.candidate;
    if (!result.certificate_available) return result;

    const double sigma = *dist.coordinate_sigma();
    const ProbabilityPair pair(result.p1_lower, result.p2_upper);
    for (const auto& p : p_list) {
        result.radii.push_back({p, gaussian_lp_radius(sigma, x.size(), p, pair)});
    }
    return result;
}

}  // namespace certlab
