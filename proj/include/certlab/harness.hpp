#pragma once

#include "certlab/bounds.hpp"
#include "certlab/certify.hpp"
#include "certlab/classifier.hpp"
#include "certlab/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace certlab {

// Class 0 when w.z <= t, class 1 otherwise.
struct LinearRule {
    std::vector<double> w;
    double t = 0.0;
};

// Nearest centre (Euclidean), ties to the lowest centre index.
struct PrototypeRule {
    std::vector<std::vector<double>> centers;
    std::vector<int> labels;
};

struct ConstantRule {
    int label = 0;
};

class SyntheticClassifier final : public BaseClassifier {
public:
    using Rule = std::variant<LinearRule, PrototypeRule, ConstantRule>;

    explicit SyntheticClassifier(Rule rule);

    /// "constant:<label>", "linear:t=<t>[,w=<w1;w2;...>]" (w defaults to the
    /// all-ones vector of length d), "prototype:classes=<k>,sep=<a>[,seed=<s>]"
    /// (the blob task of make_prototype_task at a single-channel side
    /// matching d when d is a perfect square times 3, else flat).
    static SyntheticClassifier parse(std::string_view spec, std::size_t d);

    const Rule& rule() const { return rule_; }
    int num_classes() const override { return num_classes_; }
    int classify(std::span<const double> z) const override;

private:
    Rule rule_;
    int num_classes_;
};

struct ResolutionSpec {
    std::size_t side;
    std::size_t channels = 3;

    std::size_t d() const { return channels * side * side; }
};

/// Non-overlapping k x k block means per channel. Layout is channel-major:
/// index = (c * side + row) * side + col.
std::vector<double> pool_resolution(std::span<const double> x, ResolutionSpec res, std::size_t k);

// Inverse layout helper: every pixel repeated into a k x k block.
std::vector<double> upsample_repeat(std::span<const double> x, ResolutionSpec res, std::size_t k);

struct SyntheticTask {
    SyntheticClassifier classifier;
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    ResolutionSpec resolution;
};

struct PrototypeTaskSpec {
    int classes = 10;
    // Per-pixel amplitude of the +-a blob patterns at the base resolution.
    double separation = 0.5;
    std::uint64_t seed = 7;
    std::size_t base_side = 8;
};

/// Gaussian-blob prototype task: random +-separation patterns drawn at
/// base_side and upsampled by pixel repetition to `res`, so the same task is
/// observed at several resolutions. The points are the centres themselves,
/// which the unsmoothed classifier labels perfectly.
SyntheticTask make_prototype_task(const PrototypeTaskSpec& spec, ResolutionSpec res);

// Noise used to target the l_p norm: generalized Gaussian with q = p at the
// given sigma, uniform-linf for p = inf.
SmoothingDistribution matched_noise(NormOrder p, double sigma);

struct BoundVsCertificateRow {
    std::size_t point_id;
    NormOrder p;
    std::string noise;
    std::size_t d;
    bool abstain;
    double p1_lower;
    std::optional<double> iid_bound{};
    std::optional<double> gengauss_bound{};
    bool bounds_preconditions_met = false;
    std::optional<double> gaussian_p1_lower{};
    std::optional<double> gaussian_radius{};
    std::string tighter_bound_id{};  // "IID" or "GENGAUSS"
    std::optional<double> ratio{};   // tighter bound / gaussian radius
};

/// For each point and p: estimate p1_lower under q = p noise, evaluate both
/// i.i.d. bounds at (p1_lower, 1 - p1_lower), and compare against the
/// Gaussian certificate at the same sigma. Seeds are derived from
/// (config.seed, point_id, p) so row results never depend on scheduling.
// Rows for a single point; run_bound_vs_certificate loops over this.
std::vector<BoundVsCertificateRow> bound_vs_certificate_for_point(std::size_t point_id, std::span<const double> x,
                                                                  const BaseClassifier& classifier, double sigma,
                                                                  const std::vector<NormOrder>& p_list,
                                                                  const CertifyConfig& config);

std::vector<BoundVsCertificateRow> run_bound_vs_certificate(const std::vector<std::vector<double>>& points,
                                                            const BaseClassifier& classifier, double sigma,
                                                            const std::vector<NormOrder>& p_list,
                                                            const CertifyConfig& config);

struct DimensionSweepRow {
    std::size_t side;
    std::size_t d;
    std::size_t point_id;
    NormOrder p;
    bool abstain;
    double p1_lower;
    std::optional<double> radius;
    // Anchor radius at the smallest d, rescaled by (d0/d)^(1/2 - 1/p).
    std::optional<double> projected_radius;
};

// Gaussian certificates for every point of one task; projections left unset.
std::vector<DimensionSweepRow> dimension_rows(const SyntheticTask& task, double sigma,
                                              const std::vector<NormOrder>& p_list, const CertifyConfig& config);

// Fills projected_radius from the rows at the smallest d present.
void project_radii(std::vector<DimensionSweepRow>& rows);

std::vector<DimensionSweepRow> run_dimension_sweep(
    const std::function<SyntheticTask(const ResolutionSpec&)>& make_task,
    const std::vector<ResolutionSpec>& resolutions, double sigma, const std::vector<NormOrder>& p_list,
    const CertifyConfig& config);

struct ShapeRow {
    double q;
    std::size_t point_id;
    double p1_lower;
    bool abstain;
};

ShapeRow shape_row(std::size_t point_id, std::span<const double> x, const BaseClassifier& classifier, double sigma,
                   double q, const CertifyConfig& config);

/// p1_lower under generalized Gaussian noise of fixed sigma for each shape q.
std::vector<ShapeRow> run_shape_comparison(const std::vector<std::vector<double>>& points,
                                           const BaseClassifier& classifier, double sigma,
                                           const std::vector<double>& q_list, const CertifyConfig& config);

/// Smallest p1 on the grid 1/2 + k * step where the generalized Gaussian
/// bound becomes tighter than the i.i.d. bound. Requires step <= 1e-3.
double crossing_scan(double step);

}  // namespace certlab
