#pragma once

#include "certlab/bounds.hpp"
#include "certlab/certify.hpp"
#include "certlab/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace certlab::io {

// Shortest round-trip decimal; "inf"/"-inf"/"nan" for non-finite values.
std::string num(double v);
std::string num(const std::optional<double>& v);

// JSON number, or the string "inf" for infinities (JSON has no infinity).
nlohmann::json json_num(double v);
nlohmann::json json_num(const std::optional<double>& v);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Rows of comma-separated reals. Blank lines and lines starting with '#'
/// are skipped; every row must have the same length.
std::vector<std::vector<double>> read_points_csv(const std::filesystem::path& path);

// ---- certify ---------------------------------------------------------------
inline constexpr std::string_view kCertificateCsvHeader = "point_id,class,abstain,p1_lower,p2_upper,p,radius";
nlohmann::json certificate_json(std::size_t point_id, const CertificateResult& r);
// One line per radius (or a single line with empty p/radius).
std::vector<std::string> certificate_csv_lines(std::size_t point_id, const CertificateResult& r);

// ---- bounds ----------------------------------------------------------------
inline constexpr std::string_view kSweepCsvHeader =
    "family,sigma,b,d,p,p1,p2,theorem,bound,preconditions_met,gaussian_radius";
std::string sweep_csv_line(const SweepRow& row);
nlohmann::json sweep_json(const SweepRow& row);

// ---- harness ---------------------------------------------------------------
inline constexpr std::string_view kBoundVsCertificateCsvHeader =
    "point_id,p,q,noise,d,abstain,p1_lower,iid_bound,gengauss_bound,bounds_preconditions_met,"
    "gaussian_p1_lower,gaussian_radius,tighter_bound_id,ratio";
std::string bound_vs_certificate_csv_line(const BoundVsCertificateRow& row);
nlohmann::json bound_vs_certificate_json(const BoundVsCertificateRow& row);

inline constexpr std::string_view kDimensionCsvHeader =
    "resolution,d,point_id,p,abstain,p1_lower,radius,projected_radius";
std::string dimension_csv_line(const DimensionSweepRow& row);
nlohmann::json dimension_json(const DimensionSweepRow& row);
DimensionSweepRow dimension_from_json(const nlohmann::json& j);

inline constexpr std::string_view kShapeCsvHeader = "q,point_id,abstain,p1_lower";
std::string shape_csv_line(const ShapeRow& row);
nlohmann::json shape_json(const ShapeRow& row);

/// Table assembled from keyed jobs. Finished jobs are appended to
/// "<path>.partial" as they complete; with `resume` set, jobs already present
/// there are loaded so callers can skip them.
class ResumableTable {
public:
    ResumableTable(std::filesystem::path path, std::string header, bool resume);

    bool has(const std::string& key) const { return done_.count(key) != 0; }
    void add(const std::string& key, const std::vector<std::string>& lines, const nlohmann::json& records);

    struct Assembled {
        std::vector<std::string> lines;
        nlohmann::json records;
    };
    // Lines and records of every job, in key order.
    Assembled assemble(const std::vector<std::string>& key_order) const;
    // Removes the partial file once the final outputs are written.
    void finish();

    std::size_t resumed_jobs() const { return resumed_; }

private:
    std::filesystem::path path_;
    std::filesystem::path partial_;
    std::string header_;
    std::map<std::string, std::pair<std::vector<std::string>, nlohmann::json>> done_;
    std::size_t resumed_ = 0;
};

}  // namespace certlab::io
