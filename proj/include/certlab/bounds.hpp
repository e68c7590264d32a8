#pragma once

#include "certlab/types.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace certlab {

enum class BoundFamily { Iid, GenGauss, UniformLinf, UniformL1 };

std::string_view family_name(BoundFamily f);
// Accepts "iid", "gengauss", "uniform-linf", "uniform-l1" (case-insensitive).
BoundFamily parse_family(std::string_view name);

/// Upper bound on the largest lp radius certifiable from (p1, p2) alone.
struct BoundResult {
    double value = 0.0;
    std::string theorem;
    bool preconditions_met = false;
    // Semicolon-separated list of violated (or conditional) hypotheses.
    std::string precondition_notes;
};

/// Any symmetric i.i.d. noise with per-coordinate std sigma:
///   sigma / (2 sqrt(2) d^(1/2 - 1/p)) * (1/sqrt(1 - p1) + 1/sqrt(p2)).
/// Hypothesis violations are flagged, never thrown.
BoundResult iid_upper_bound(double sigma, std::size_t d, NormOrder p, ProbabilityPair pair);

/// Generalized Gaussian (q >= 1) with per-coordinate std sigma:
///   2 sigma / d^(1/2 - 1/p) * (sqrt(ln 1/(1 - p1)) + sqrt(ln 1/p2)),
/// valid for exp(-d/4) < p2 <= p1 < 1 - exp(-d/4) and p1 + p2 <= 1. When q
/// is known it is checked against q >= 1, otherwise the requirement is noted.
BoundResult gengauss_upper_bound(double sigma, std::size_t d, NormOrder p, ProbabilityPair pair,
                                 std::optional<double> q = std::nullopt);

// Uniform on [-b, b]^d: 2b / d^(1 - 1/p). Independent of (p1, p2).
BoundResult linf_uniform_upper_bound(double b, std::size_t d, NormOrder p);

// Uniform on the l1 ball of radius b: 2b / d for every p.
BoundResult l1_uniform_upper_bound(double b, std::size_t d);

// Binary case (p2 = 1 - p1): iid bound over the Gaussian lp certificate.
double ratio_iid_to_gaussian(double p1);
// Binary case: generalized Gaussian bound over the Gaussian lp certificate.
double ratio_gengauss_to_gaussian(double p1);

struct BoundQuery {
    BoundFamily family = BoundFamily::Iid;
    std::optional<double> sigma;
    std::optional<double> b;
    // Only used to convert b <-> sigma for the generalized Gaussian.
    std::optional<double> q;
    std::size_t d = 1;
    NormOrder p = NormOrder::infinity();
    // Ignored by the uniform families.
    std::optional<ProbabilityPair> pair;
};

/// Dispatches on family. Exactly one of sigma/b must be set; the other is
/// derived (uniform-linf: sigma = b / sqrt(3); gengauss/iid need q to use b).
BoundResult evaluate_bound(const BoundQuery& query);

struct SweepTemplate {
    std::vector<BoundFamily> families;
    // Families take what they need: iid/gengauss use sigma (or b with q),
    // uniform-linf uses b (or sqrt(3) sigma), uniform-l1 uses b.
    std::optional<double> sigma;
    std::optional<double> b;
    std::optional<double> q;
};

struct SweepRow {
    BoundFamily family;
    std::optional<double> sigma;
    std::optional<double> b;
    std::size_t d;
    NormOrder p;
    std::optional<double> p1;
    std::optional<double> p2;
    std::optional<BoundResult> bound;
    // Gaussian lp certificate at the same sigma, attached when p >= 2.
    std::optional<double> gaussian_radius;
    std::string error;
};

/// Cartesian product families x dims x ps x p1s (p2 = 1 - p1). Uniform
/// bounds do not depend on p1; their rows carry it for the Gaussian column.
/// Per-cell failures land in SweepRow::error; the sweep itself only throws
/// on empty dims/ps.
std::vector<SweepRow> bound_sweep(const SweepTemplate& tmpl, const std::vector<std::size_t>& dims,
                                  const std::vector<NormOrder>& ps, const std::vector<double>& p1s);

}  // namespace certlab
