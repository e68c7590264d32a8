#include "certlab/io.hpp"

#include "parse_util.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace certlab::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

json json_num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

json json_num(const std::optional<double>& v) { return v ? json_num(*v) : json(nullptr); }

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", tmp.string()));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error(fmt::format("failed writing {}", tmp.string()));
    }
    fs::rename(tmp, path);
}

std::vector<std::vector<double>> read_points_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument(fmt::format("cannot read points file {}", path.string()));
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        std::vector<double> row;
        for (auto cell : detail::split(trimmed, ',')) {
            const double v = detail::parse_double(cell, fmt::format("{}:{}", path.string(), lineno));
            if (!std::isfinite(v)) {
                throw std::invalid_argument(fmt::format("{}:{}: non-finite coordinate", path.string(), lineno));
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::invalid_argument(fmt::format("{}:{}: expected {} values, found {}", path.string(), lineno,
                                                    rows.front().size(), row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument(fmt::format("points file {} has no rows", path.string()));
    return rows;
}

json certificate_json(std::size_t point_id, const CertificateResult& r) {
    json radii = json::array();
    for (const auto& e : r.radii) radii.push_back({{"p", e.p.str()}, {"radius", json_num(e.radius)}});
    json j = {{"point_id", point_id},
              {"class", r.abstain ? json(nullptr) : json(r.predicted_class)},
              {"abstain", r.abstain},
              {"p1_lower", json_num(r.p1_lower)},
              {"p2_upper", json_num(r.p2_upper)},
              {"radii", radii},
              {"n0", r.n0},
              {"n", r.n},
              {"alpha", r.alpha},
              {"seed", r.seed}};
    if (!r.certificate_available) j["certificate"] = "no certificate available";
    return j;
}

std::vector<std::string> certificate_csv_lines(std::size_t point_id, const CertificateResult& r) {
    const std::string cls = r.abstain ? std::string("ABSTAIN") : std::to_string(r.predicted_class);
    const std::string prefix = fmt::format("{},{},{},{},{}", point_id, cls, r.abstain ? "true" : "false",
                                           num(r.p1_lower), num(r.p2_upper));
    std::vector<std::string> lines;
    for (const auto& e : r.radii) lines.push_back(fmt::format("{},{},{}", prefix, e.p.str(), num(e.radius)));
    if (lines.empty()) lines.push_back(prefix + ",,");
    return lines;
}

std::string sweep_csv_line(const SweepRow& row) {
    const auto bound = row.bound ? std::optional(row.bound->value) : std::nullopt;
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", family_name(row.family), num(row.sigma), num(row.b), row.d,
                       row.p.str(), num(row.p1), num(row.p2), row.bound ? row.bound->theorem : std::string(),
                       num(bound), row.bound && row.bound->preconditions_met ? "true" : "false",
                       num(row.gaussian_radius));
}

json sweep_json(const SweepRow& row) {
    json j = {{"family", family_name(row.family)},
              {"sigma", json_num(row.sigma)},
              {"b", json_num(row.b)},
              {"d", row.d},
              {"p", row.p.str()},
              {"p1", json_num(row.p1)},
              {"p2", json_num(row.p2)},
              {"theorem", row.bound ? json(row.bound->theorem) : json(nullptr)},
              {"bound", row.bound ? json_num(row.bound->value) : json(nullptr)},
              {"preconditions_met", row.bound && row.bound->preconditions_met},
              {"gaussian_radius", json_num(row.gaussian_radius)}};
    if (row.bound && !row.bound->precondition_notes.empty()) j["precondition_notes"] = row.bound->precondition_notes;
    if (!row.error.empty()) j["error"] = row.error;
    return j;
}

namespace {

std::string q_of(const BoundVsCertificateRow& row) { return row.p.str(); }

}  // namespace

std::string bound_vs_certificate_csv_line(const BoundVsCertificateRow& row) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}", row.point_id, row.p.str(), q_of(row), row.noise,
                       row.d, row.abstain ? "true" : "false", num(row.p1_lower), num(row.iid_bound),
                       num(row.gengauss_bound), row.bounds_preconditions_met ? "true" : "false",
                       num(row.gaussian_p1_lower), num(row.gaussian_radius), row.tighter_bound_id, num(row.ratio));
}

json bound_vs_certificate_json(const BoundVsCertificateRow& row) {
    return {{"point_id", row.point_id},
            {"p", row.p.str()},
            {"q", q_of(row)},
            {"noise", row.noise},
            {"d", row.d},
            {"abstain", row.abstain},
            {"p1_lower", json_num(row.p1_lower)},
            {"iid_bound", json_num(row.iid_bound)},
            {"gengauss_bound", json_num(row.gengauss_bound)},
            {"bounds_preconditions_met", row.bounds_preconditions_met},
            {"gaussian_p1_lower", json_num(row.gaussian_p1_lower)},
            {"gaussian_radius", json_num(row.gaussian_radius)},
            {"tighter_bound_id", row.tighter_bound_id.empty() ? json(nullptr) : json(row.tighter_bound_id)},
            {"ratio", json_num(row.ratio)}};
}

std::string dimension_csv_line(const DimensionSweepRow& row) {
    return fmt::format("{},{},{},{},{},{},{},{}", row.side, row.d, row.point_id, row.p.str(),
                       row.abstain ? "true" : "false", num(row.p1_lower), num(row.radius), num(row.projected_radius));
}

json dimension_json(const DimensionSweepRow& row) {
    return {{"resolution", row.side},        {"d", row.d},
            {"point_id", row.point_id},      {"p", row.p.str()},
            {"abstain", row.abstain},        {"p1_lower", json_num(row.p1_lower)},
            {"radius", json_num(row.radius)}, {"projected_radius", json_num(row.projected_radius)}};
}

std::string shape_csv_line(const ShapeRow& row) {
    return fmt::format("{},{},{},{}", num(row.q), row.point_id, row.abstain ? "true" : "false", num(row.p1_lower));
}

json shape_json(const ShapeRow& row) {
    return {{"q", json_num(row.q)},
            {"point_id", row.point_id},
            {"abstain", row.abstain},
            {"p1_lower", json_num(row.p1_lower)}};
}

ResumableTable::ResumableTable(fs::path path, std::string header, bool resume)
    : path_(std::move(path)), header_(std::move(header)) {
    partial_ = path_;
    partial_ += ".partial";
    if (!resume) {
        fs::remove(partial_);
        return;
    }
    std::ifstream in(partial_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json entry;
        try {
            entry = json::parse(line);
        } catch (const json::parse_error&) {
            break;  // torn final line from an interrupted run
        }
        if (entry.value("header", std::string()) != header_) {
            throw std::invalid_argument(
                fmt::format("{} was written with a different table schema; remove it to start over", partial_.string()));
        }
        done_[entry.at("key").get<std::string>()] = {entry.at("lines").get<std::vector<std::string>>(),
                                                     entry.at("records")};
        ++resumed_;
    }
}

void ResumableTable::add(const std::string& key, const std::vector<std::string>& lines, const json& records) {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    std::ofstream out(partial_, std::ios::app);
    if (!out) throw std::runtime_error(fmt::format("cannot append to {}", partial_.string()));
    out << json{{"header", header_}, {"key", key}, {"lines", lines}, {"records", records}}.dump() << '\n';
    done_[key] = {lines, records};
}

ResumableTable::Assembled ResumableTable::assemble(const std::vector<std::string>& key_order) const {
    Assembled out{{}, json::array()};
    for (const auto& key : key_order) {
        const auto it = done_.find(key);
        if (it == done_.end()) throw std::logic_error(fmt::format("table job '{}' never completed", key));
        out.lines.insert(out.lines.end(), it->second.first.begin(), it->second.first.end());
        for (const auto& r : it->second.second) out.records.push_back(r);
    }
    return out;
}

void ResumableTable::finish() { fs::remove(partial_); }

DimensionSweepRow dimension_from_json(const json& j) {
    auto opt = [](const json& v) -> std::optional<double> {
        if (v.is_null()) return std::nullopt;
        if (v.is_string()) return detail::parse_double(v.get<std::string>(), "radius");
        return v.get<double>();
    };
    DimensionSweepRow row{j.at("resolution").get<std::size_t>(), j.at("d").get<std::size_t>(),
                          j.at("point_id").get<std::size_t>(), NormOrder::parse(j.at("p").get<std::string>()),
                          j.at("abstain").get<bool>(), j.at("p1_lower").get<double>(), opt(j.at("radius")),
                          opt(j.at("projected_radius"))};
    return row;
}

}  // namespace certlab::io
