#include "certlab/cli.hpp"

#include "certlab/bounds.hpp"
#include "certlab/certify.hpp"
#include "certlab/distributions.hpp"
#include "certlab/harness.hpp"
#include "certlab/io.hpp"
#include "certlab/verify.hpp"
#include "certlab/worstcase.hpp"
#include "parse_util.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifndef CERTLAB_VERSION
#define CERTLAB_VERSION "0.1.0"
#endif

namespace certlab::cli {

std::string version() { return CERTLAB_VERSION; }

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Common {
    std::string format = "both";
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    bool wants_csv() const { return format != "json"; }
    bool wants_json() const { return format != "csv"; }
};

void add_common(CLI::App* sub, Common& c, bool with_seed = true) {
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json", "both"}));
    sub->add_option("--out", c.out, "Output path prefix; files <out>.csv, <out>.json, <out>.manifest.json");
    if (with_seed) sub->add_option("--seed", c.seed, "RNG seed (falls back to CERTLAB_SEED, then 0)");
    sub->add_option("--workers", c.workers, "Sampling threads")->check(CLI::Range(1u, 1024u));
}

std::uint64_t resolve_seed(const Common& c) {
    if (c.seed) return *c.seed;
    if (const char* env = std::getenv("CERTLAB_SEED"); env != nullptr && *env != '\0') {
        const std::string text(env);
        std::size_t used = 0;
        std::uint64_t v = 0;
        try {
            v = std::stoull(text, &used, 0);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != text.size() || text.front() == '-') {
            throw std::invalid_argument(fmt::format("CERTLAB_SEED must be a non-negative integer, got '{}'", text));
        }
        return v;
    }
    return 0;
}

std::vector<NormOrder> parse_norms(const std::vector<std::string>& texts) {
    std::vector<NormOrder> ps;
    for (const auto& t : texts) ps.push_back(NormOrder::parse(t));
    return ps;
}

// Result of one subcommand: CSV table and JSON document.
struct Output {
    std::string csv;
    json doc;
    // Extra lines printed to stdout regardless of --out.
    std::string summary;
};

std::string csv_table(std::string_view header, const std::vector<std::string>& lines) {
    std::string s(header);
    s += '\n';
    for (const auto& l : lines) s += l + '\n';
    return s;
}

// Parsed-option snapshot for the manifest.
json option_params(const CLI::App* sub) {
    json params = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
        const std::string key = opt->get_name(false, true).empty() ? opt->get_name() : opt->get_name(false, true);
        if (opt->count() > 0) {
            const auto& res = opt->results();
            params[key] = res.size() == 1 ? json(res.front()) : json(res);
        } else if (!opt->get_default_str().empty()) {
            params[key] = opt->get_default_str();
        }
    }
    return params;
}

// ---------------------------------------------------------------------------
// Input points and classifiers.
// ---------------------------------------------------------------------------

struct PointSource {
    std::string points_file;
    std::size_t d = 1;
    std::string task;
    std::string classifier;
};

void add_point_source(CLI::App* sub, PointSource& src) {
    sub->add_option("--points", src.points_file, "CSV file of input points, one per row")->check(CLI::ExistingFile);
    sub->add_option("--d", src.d, "Dimension of the single origin point used without --points/--task")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
    sub->add_option("--task", src.task,
                    "Prototype task 'prototype:side=<s>[,channels=<c>,classes=<k>,sep=<a>,seed=<n>,base=<s0>]'");
    sub->add_option("--classifier", src.classifier,
                    "Base classifier 'constant:<label>', 'linear:t=<t>[,w=..]' or 'prototype:..'");
}

PrototypeTaskSpec parse_task_spec(std::string_view spec, ResolutionSpec& res, bool need_side) {
    const auto colon = spec.find(':');
    const auto kind = detail::trim(spec.substr(0, colon));
    if (kind != "prototype") throw std::invalid_argument(fmt::format("unknown task kind '{}'", kind));
    PrototypeTaskSpec t;
    bool have_side = false;
    if (colon != std::string_view::npos) {
        for (const auto& [k, v] : detail::parse_key_values(spec.substr(colon + 1))) {
            const double x = detail::parse_double(v, k);
            auto as_count = [&](double lo) {
                if (!(x >= lo) || x != std::floor(x) || x > 1e9) {
                    throw std::invalid_argument(fmt::format("task {} must be an integer >= {}", k, lo));
                }
                return static_cast<std::size_t>(x);
            };
            if (k == "side") {
                res.side = as_count(1);
                have_side = true;
            } else if (k == "channels") {
                res.channels = as_count(1);
            } else if (k == "classes") {
                t.classes = static_cast<int>(as_count(2));
            } else if (k == "sep") {
                if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("task sep must be positive");
                t.separation = x;
            } else if (k == "seed") {
                t.seed = as_count(0);
            } else if (k == "base") {
                t.base_side = as_count(1);
            } else {
                throw std::invalid_argument(fmt::format("unknown task key '{}'", k));
            }
        }
    }
    if (need_side && !have_side) throw std::invalid_argument("task needs side=<pixels>");
    return t;
}

struct Inputs {
    std::vector<std::vector<double>> points;
    std::optional<SyntheticClassifier> classifier;
};

Inputs load_inputs(const PointSource& src) {
    Inputs in;
    if (!src.task.empty() && !src.points_file.empty()) {
        throw std::invalid_argument("--task and --points are mutually exclusive");
    }
    std::size_t d = src.d;
    if (!src.task.empty()) {
        ResolutionSpec res{8, 3};
        const auto spec = parse_task_spec(src.task, res, true);
        auto task = make_prototype_task(spec, res);
        in.points = task.points;
        d = res.d();
        in.classifier = task.classifier;
    } else if (!src.points_file.empty()) {
        in.points = io::read_points_csv(src.points_file);
        if (in.points.empty()) throw std::invalid_argument(fmt::format("{} holds no points", src.points_file));
        d = in.points.front().size();
    } else {
        in.points.assign(1, std::vector<double>(d, 0.0));
    }
    if (!src.classifier.empty()) {
        in.classifier = SyntheticClassifier::parse(src.classifier, d);
    }
    if (!in.classifier) throw std::invalid_argument("--classifier is required unless --task is given");
    return in;
}

struct SamplingOpts {
    std::size_t n0 = 100;
    std::size_t n = 100'000;
    double alpha = 0.001;
};

void add_sampling(CLI::App* sub, SamplingOpts& s) {
    sub->add_option("--n0", s.n0, "Selection samples")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    sub->add_option("--n", s.n, "Estimation samples")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    sub->add_option("--alpha", s.alpha, "Failure probability of the confidence bound")
        ->check(CLI::Range(std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0)));
}

CertifyConfig make_config(const SamplingOpts& s, std::uint64_t seed, unsigned workers) {
    CertifyConfig c;
    c.n0 = s.n0;
    c.n = s.n;
    c.alpha = ConfidenceLevel(s.alpha);
    c.seed = seed;
    c.workers = workers;
    return c;
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

struct CertifyArgs {
    Common common;
    PointSource src;
    SamplingOpts sampling;
    std::string dist;
    std::vector<std::string> ps{"2"};
};

Output run_certify(const CertifyArgs& a, std::uint64_t seed) {
    const auto dist = SmoothingDistribution::parse(a.dist);
    const auto ps = parse_norms(a.ps);
    const auto config = make_config(a.sampling, seed, a.common.workers);
    const auto in = load_inputs(a.src);

    Output out{"", json::array(), ""};
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < in.points.size(); ++i) {
        const auto r = certify(*in.classifier, in.points[i], dist, config, ps);
        out.doc.push_back(io::certificate_json(i, r));
        for (auto& l : io::certificate_csv_lines(i, r)) lines.push_back(std::move(l));
    }
    out.csv = csv_table(io::kCertificateCsvHeader, lines);
    return out;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsArgs {
    Common common;
    std::string family;
    std::optional<double> sigma;
    std::optional<double> b;
    std::optional<double> q;
    std::size_t d = 1;
    std::string p = "inf";
    std::optional<double> p1;
    std::optional<double> p2;
};

Output run_bounds(const BoundsArgs& a) {
    BoundQuery q;
    q.family = parse_family(a.family);
    q.sigma = a.sigma;
    q.b = a.b;
    q.q = a.q;
    q.d = a.d;
    q.p = NormOrder::parse(a.p);
    const bool uniform = q.family == BoundFamily::UniformLinf || q.family == BoundFamily::UniformL1;
    if (a.p1 || a.p2) {
        const double p1 = a.p1.value_or(a.p2 ? 1.0 - *a.p2 : 0.0);
        const double p2 = a.p2.value_or(1.0 - p1);
        q.pair = ProbabilityPair(p1, p2);
    } else if (!uniform) {
        throw std::invalid_argument("--p1 (and optionally --p2) is required for this family");
    }

    SweepRow row{q.family, q.sigma, q.b, q.d, q.p, std::nullopt, std::nullopt, evaluate_bound(q), std::nullopt, ""};
    if (q.pair) {
        row.p1 = q.pair->p1;
        row.p2 = q.pair->p2;
    }
    std::optional<double> sigma = q.sigma;
    if (!sigma && q.b) {
        if (q.family == BoundFamily::UniformLinf) sigma = *q.b / std::sqrt(3.0);
        if (q.q && (q.family == BoundFamily::Iid || q.family == BoundFamily::GenGauss)) {
            sigma = sigma_from_scale(*q.q, *q.b);
        }
    }
    if (sigma && q.pair && q.p.value() >= 2.0 && q.pair->p1 > q.pair->p2 && q.pair->p2 > 0.0 && q.pair->p1 < 1.0) {
        row.gaussian_radius = gaussian_lp_radius(*sigma, q.d, q.p, *q.pair);
    }
    Output out{csv_table(io::kSweepCsvHeader, {io::sweep_csv_line(row)}), io::sweep_json(row), ""};
    return out;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    Common common;
    std::string kind = "bounds";
    bool resume = false;
    // bounds
    std::vector<std::string> families{"iid", "gengauss", "uniform-linf", "uniform-l1"};
    std::optional<double> sigma;
    std::optional<double> b;
    std::optional<double> q;
    std::vector<std::size_t> dims{192, 768, 3072};
    std::vector<std::string> ps{"2", "inf"};
    std::vector<double> p1s{0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999};
    // certificate sweeps
    PointSource src;
    SamplingOpts sampling;
    std::vector<std::size_t> sides{8, 16, 32};
    std::size_t channels = 3;
    std::vector<double> qs{1, 2, 4, 8};
};

// Runs keyed jobs through a resumable table when writing to disk.
class JobRunner {
public:
    JobRunner(const Common& c, std::string header, bool resume) {
        if (!c.out.empty()) table_.emplace(fs::path(c.out + ".csv"), std::move(header), resume);
    }
    void run(const std::string& key, const std::function<std::pair<std::vector<std::string>, json>()>& job) {
        keys_.push_back(key);
        if (table_) {
            if (table_->has(key)) return;
            auto [lines, records] = job();
            table_->add(key, lines, records);
        } else {
            auto [lines, records] = job();
            mem_.lines.insert(mem_.lines.end(), lines.begin(), lines.end());
            for (auto& r : records) mem_.records.push_back(std::move(r));
        }
    }
    io::ResumableTable::Assembled assemble() const { return table_ ? table_->assemble(keys_) : mem_; }
    void finish() {
        if (table_) table_->finish();
    }
    std::size_t resumed() const { return table_ ? table_->resumed_jobs() : 0; }

private:
    std::optional<io::ResumableTable> table_;
    std::vector<std::string> keys_;
    io::ResumableTable::Assembled mem_{{}, json::array()};
};

double require_sigma(const std::optional<double>& sigma, std::string_view kind) {
    if (!sigma) throw std::invalid_argument(fmt::format("sweep --kind {} needs --sigma", kind));
    return *sigma;
}

Output finish_table(JobRunner& runner, std::string_view header) {
    auto all = runner.assemble();
    return {csv_table(header, all.lines), all.records, ""};
}

Output run_sweep(const SweepArgs& a, std::uint64_t seed, JobRunner*& runner_out,
                 std::unique_ptr<JobRunner>& holder) {
    if (a.kind == "bounds") {
        SweepTemplate tmpl;
        for (const auto& f : a.families) tmpl.families.push_back(parse_family(f));
        tmpl.sigma = a.sigma;
        tmpl.b = a.b;
        tmpl.q = a.q;
        const auto ps = parse_norms(a.ps);
        for (double p1 : a.p1s) ProbabilityPair::binary(p1);
        holder = std::make_unique<JobRunner>(a.common, std::string(io::kSweepCsvHeader), a.resume);
        runner_out = holder.get();
        holder->run("all", [&] {
            std::pair<std::vector<std::string>, json> res{{}, json::array()};
            for (const auto& row : bound_sweep(tmpl, a.dims, ps, a.p1s)) {
                res.first.push_back(io::sweep_csv_line(row));
                res.second.push_back(io::sweep_json(row));
            }
            return res;
        });
        return finish_table(*holder, io::kSweepCsvHeader);
    }

    const auto config = make_config(a.sampling, seed, a.common.workers);

    if (a.kind == "bound-vs-cert") {
        const double sigma = require_sigma(a.sigma, a.kind);
        SmoothingDistribution::gaussian(sigma);
        const auto ps = parse_norms(a.ps);
        for (const auto& p : ps) {
            if (p.value() < 2.0) throw std::invalid_argument("bound-vs-cert needs every --p in [2, inf]");
        }
        const auto in = load_inputs(a.src);
        holder = std::make_unique<JobRunner>(a.common, std::string(io::kBoundVsCertificateCsvHeader), a.resume);
        runner_out = holder.get();
        for (std::size_t i = 0; i < in.points.size(); ++i) {
            holder->run(fmt::format("point={}", i), [&] {
                std::pair<std::vector<std::string>, json> res{{}, json::array()};
                for (const auto& row : bound_vs_certificate_for_point(i, in.points[i], *in.classifier, sigma, ps,
                                                                      config)) {
                    res.first.push_back(io::bound_vs_certificate_csv_line(row));
                    res.second.push_back(io::bound_vs_certificate_json(row));
                }
                return res;
            });
        }
        return finish_table(*holder, io::kBoundVsCertificateCsvHeader);
    }

    if (a.kind == "dimension") {
        const double sigma = require_sigma(a.sigma, a.kind);
        SmoothingDistribution::gaussian(sigma);
        const auto ps = parse_norms(a.ps);
        for (const auto& p : ps) {
            if (p.value() < 2.0) throw std::invalid_argument("dimension sweep needs every --p in [2, inf]");
        }
        if (a.sides.empty()) throw std::invalid_argument("--sides must not be empty");
        ResolutionSpec unused{8, a.channels};
        const auto spec = a.src.task.empty() ? PrototypeTaskSpec{} : parse_task_spec(a.src.task, unused, false);
        holder = std::make_unique<JobRunner>(a.common, std::string(io::kDimensionCsvHeader), a.resume);
        runner_out = holder.get();
        for (std::size_t side : a.sides) {
            const ResolutionSpec res{side, a.channels};
            holder->run(fmt::format("side={},channels={}", side, a.channels), [&] {
                std::pair<std::vector<std::string>, json> res_rows{{}, json::array()};
                for (const auto& row : dimension_rows(make_prototype_task(spec, res), sigma, ps, config)) {
                    res_rows.second.push_back(io::dimension_json(row));
                }
                return res_rows;
            });
        }
        auto all = holder->assemble();
        std::vector<DimensionSweepRow> rows;
        for (const auto& r : all.records) rows.push_back(io::dimension_from_json(r));
        project_radii(rows);
        Output out{"", json::array(), ""};
        std::vector<std::string> lines;
        for (const auto& row : rows) {
            lines.push_back(io::dimension_csv_line(row));
            out.doc.push_back(io::dimension_json(row));
        }
        out.csv = csv_table(io::kDimensionCsvHeader, lines);
        return out;
    }

    if (a.kind == "shape") {
        const double sigma = require_sigma(a.sigma, a.kind);
        for (double q : a.qs) SmoothingDistribution::generalized_gaussian_sigma(q, sigma);
        const auto in = load_inputs(a.src);
        holder = std::make_unique<JobRunner>(a.common, std::string(io::kShapeCsvHeader), a.resume);
        runner_out = holder.get();
        for (double q : a.qs) {
            for (std::size_t i = 0; i < in.points.size(); ++i) {
                holder->run(fmt::format("q={},point={}", io::num(q), i), [&] {
                    std::pair<std::vector<std::string>, json> res{{}, json::array()};
                    const auto row = shape_row(i, in.points[i], *in.classifier, sigma, q, config);
                    res.first.push_back(io::shape_csv_line(row));
                    res.second.push_back(io::shape_json(row));
                    return res;
                });
            }
        }
        return finish_table(*holder, io::kShapeCsvHeader);
    }
    throw std::invalid_argument(fmt::format("unknown sweep kind '{}'", a.kind));
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyArgs {
    Common common;
    std::string suite = "all";
    VerifyParams params;
};

std::pair<Output, bool> run_verify(const VerifyArgs& a, std::uint64_t seed) {
    VerifyParams params = a.params;
    params.seed = seed;
    params.workers = a.common.workers;
    if (!(params.b > 0.0) || !std::isfinite(params.b)) throw std::invalid_argument("--b must be positive");
    for (double e : params.eps) {
        if (!(e > 0.0 && e <= 2.0 * params.b)) throw std::invalid_argument("--eps must lie in (0, 2b]");
    }
    if (!(params.step > 0.0)) throw std::invalid_argument("--step must be positive");
    std::vector<std::string> suites;
    if (a.suite == "all") {
        suites = suite_names();
    } else {
        for (auto s : detail::split(a.suite, ',')) suites.emplace_back(detail::trim(s));
        for (const auto& s : suites) {
            if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end()) {
                throw std::invalid_argument(fmt::format("unknown verification suite '{}'", s));
            }
        }
    }
    Output out{"suite,cell,params,statistic,stderr,expected,pass\n", json::array(), ""};
    bool all_pass = true;
    for (const auto& name : suites) {
        const auto report = run_suite(name, params);
        const bool ok = report.pass();
        all_pass = all_pass && ok;
        const auto j = report.to_json();
        out.doc.push_back(j);
        for (std::size_t i = 0; i < report.cells.size(); ++i) {
            const auto& c = report.cells[i];
            std::string params_text = c.params.dump();
            std::string quoted;
            for (char ch : params_text) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            out.csv += fmt::format("{},{},\"{}\",{},{},{},{}\n", name, i, quoted, io::num(c.statistic),
                                   io::num(c.stderr_), io::num(c.expected), c.pass ? "true" : "false");
        }
        std::size_t failed = 0;
        for (const auto& c : report.cells) failed += c.pass ? 0 : 1;
        out.summary += fmt::format("{} {} ({} cells, {} failed)\n", ok ? "PASS" : "FAIL", name, report.cells.size(),
                                   failed);
    }
    if (suites.size() == 1) out.doc = out.doc.front();
    return {out, all_pass};
}

// ---------------------------------------------------------------------------
// worstcase
// ---------------------------------------------------------------------------

struct WorstcaseArgs {
    Common common;
    std::string construction = "halfspace";
    std::string dist = "gengauss:q=2,sigma=1";
    std::size_t d = 16;
    double p1 = 0.9;
    std::optional<double> p2;
    double b = 1.0;
    std::optional<double> eps;
    std::vector<double> multipliers{0.9, 1.0, 1.1};
    std::vector<std::string> ps{"2", "inf"};
    std::size_t n = 100'000;
    std::size_t quantile_samples = 1'000'000;
};

Output run_worstcase(const WorstcaseArgs& a, std::uint64_t seed) {
    const RngStream root(seed, 0x77);
    Output out{"", json::object(), ""};
    if (a.construction == "halfspace") {
        const auto dist = SmoothingDistribution::parse(a.dist);
        const ProbabilityPair pair(a.p1, a.p2.value_or(1.0 - a.p1));
        const auto ps = parse_norms(a.ps);
        for (double m : a.multipliers) {
            if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("--multipliers must be >= 0");
        }
        if (a.n < 10'000) throw std::invalid_argument("--n must be at least 10000 for flip verification");
        HalfSpaceOptions opts;
        opts.quantile_samples = a.quantile_samples;
        opts.seed = seed;
        opts.workers = a.common.workers;
        const auto c = build_halfspace(dist, a.d, pair, opts);
        json norms = json::array();
        for (const auto& p : ps) {
            json entry{{"p", p.str()}, {"flip_lp_norm", io::json_num(flip_lp_norm(c, p))}};
            if (p.value() >= 2.0 && dist.coordinate_sigma()) {
                entry["iid_bound"] = io::json_num(iid_upper_bound(*dist.coordinate_sigma(), a.d, p, pair).value);
            }
            norms.push_back(entry);
        }
        const auto rows = verify_flip(c, a.multipliers, a.n, root, a.common.workers);
        json flips = json::array();
        std::vector<std::string> lines;
        for (const auto& r : rows) {
            flips.push_back({{"multiplier", io::json_num(r.multiplier)},
                             {"p1_hat", io::json_num(r.p1_hat)},
                             {"p2_hat", io::json_num(r.p2_hat)},
                             {"diff_stderr", io::json_num(r.diff_stderr)},
                             {"sign", r.sign}});
            lines.push_back(fmt::format("{},{},{},{},{}", io::num(r.multiplier), io::num(r.p1_hat),
                                        io::num(r.p2_hat), io::num(r.diff_stderr), r.sign));
        }
        out.doc = {{"construction", "halfspace"},
                   {"dist", dist.to_string()},
                   {"d", a.d},
                   {"p1", io::json_num(pair.p1)},
                   {"p2", io::json_num(pair.p2)},
                   {"s1", io::json_num(c.s1)},
                   {"s2", io::json_num(c.s2)},
                   {"s1_stderr", io::json_num(c.s1_stderr)},
                   {"s2_stderr", io::json_num(c.s2_stderr)},
                   {"eps_star", io::json_num(c.eps_star)},
                   {"exact", c.exact},
                   {"norms", norms},
                   {"flip", flips},
                   {"n", a.n},
                   {"seed", seed}};
        out.csv = csv_table("multiplier,p1_hat,p2_hat,diff_stderr,sign", lines);
        return out;
    }
    if (a.construction == "box") {
        const double eps = a.eps.value_or(box_flip_threshold(a.b, a.d));
        const ShiftedBoxConstruction box(a.b, a.d, eps);
        const auto rep = box_flip_verify(box, a.n, root, a.common.workers);
        out.doc = {{"construction", "box"},
                   {"b", io::json_num(a.b)},
                   {"d", a.d},
                   {"eps", io::json_num(eps)},
                   {"flip_threshold", io::json_num(box_flip_threshold(a.b, a.d))},
                   {"expected", io::json_num(rep.expected)},
                   {"rho_hat_x", io::json_num(rep.rho_hat_x)},
                   {"rho_hat_xprime", io::json_num(rep.rho_hat_xprime)},
                   {"stderr_x", io::json_num(rep.stderr_x)},
                   {"stderr_xprime", io::json_num(rep.stderr_xprime)},
                   {"consistent", rep.consistent},
                   {"matches_expected", rep.matches_expected},
                   {"n", a.n},
                   {"seed", seed}};
        out.csv = csv_table("b,d,eps,expected,rho_hat_x,rho_hat_xprime,stderr_x,stderr_xprime",
                            {fmt::format("{},{},{},{},{},{},{},{}", io::num(a.b), a.d, io::num(eps),
                                         io::num(rep.expected), io::num(rep.rho_hat_x), io::num(rep.rho_hat_xprime),
                                         io::num(rep.stderr_x), io::num(rep.stderr_xprime))});
        return out;
    }
    if (a.construction == "l1") {
        if (!a.eps) throw std::invalid_argument("--eps is required for the l1 construction");
        const ShiftedL1Construction c(a.b, a.d, *a.eps);
        const auto rep = l1_overlap_mc(c, a.n, root, a.common.workers);
        out.doc = {{"construction", "l1"},
                   {"b", io::json_num(a.b)},
                   {"d", a.d},
                   {"eps", io::json_num(*a.eps)},
                   {"volume", io::json_num(l1_ball_volume(a.b, a.d))},
                   {"lower_bound", io::json_num(rep.lower_bound)},
                   {"rho_hat", io::json_num(rep.rho_hat)},
                   {"stderr", io::json_num(rep.stderr_)},
                   {"holds", rep.holds},
                   {"n", a.n},
                   {"seed", seed}};
        out.csv = csv_table("b,d,eps,lower_bound,rho_hat,stderr,holds",
                            {fmt::format("{},{},{},{},{},{},{}", io::num(a.b), a.d, io::num(*a.eps),
                                         io::num(rep.lower_bound), io::num(rep.rho_hat), io::num(rep.stderr_),
                                         rep.holds ? "true" : "false")});
        return out;
    }
    throw std::invalid_argument(fmt::format("unknown construction '{}'", a.construction));
}

// ---------------------------------------------------------------------------
// Output and manifest.
// ---------------------------------------------------------------------------

std::vector<std::string> emit(const Common& c, const Output& o, std::ostream& out) {
    std::vector<std::string> written;
    out << o.summary;
    if (c.out.empty()) {
        if (c.format == "csv") {
            out << o.csv;
        } else {
            out << o.doc.dump(2) << '\n';
        }
        return written;
    }
    if (c.wants_csv()) {
        io::write_file_atomic(c.out + ".csv", o.csv);
        written.push_back(c.out + ".csv");
    }
    if (c.wants_json()) {
        io::write_file_atomic(c.out + ".json", o.doc.dump(2) + "\n");
        written.push_back(c.out + ".json");
    }
    return written;
}

void write_manifest(const Common& c, const std::string& subcommand, std::vector<std::string> argv,
                    const CLI::App* sub, std::uint64_t seed, const std::vector<std::string>& outputs,
                    double seconds) {
    if (c.out.empty()) return;
    if (!c.seed) {
        argv.push_back("--seed");
        argv.push_back(std::to_string(seed));
    }
    json m{{"subcommand", subcommand},
           {"argv", argv},
           {"params", option_params(sub)},
           {"seed", seed},
           {"version", version()},
           {"outputs", outputs},
           {"duration_seconds", seconds}};
    io::write_file_atomic(c.out + ".manifest.json", m.dump(2) + "\n");
}

std::vector<std::string> replay_argv(const std::string& manifest_path, const std::string& out_override) {
    std::ifstream in(manifest_path);
    if (!in) throw std::invalid_argument(fmt::format("cannot open manifest {}", manifest_path));
    json m;
    try {
        m = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(fmt::format("{}: {}", manifest_path, e.what()));
    }
    auto argv = m.at("argv").get<std::vector<std::string>>();
    if (argv.empty() || argv.front() == "replay") throw std::invalid_argument("manifest has no replayable argv");
    if (!out_override.empty()) {
        bool replaced = false;
        for (std::size_t i = 0; i + 1 < argv.size(); ++i) {
            if (argv[i] == "--out") {
                argv[i + 1] = out_override;
                replaced = true;
            }
        }
        if (!replaced) {
            argv.push_back("--out");
            argv.push_back(out_override);
        }
    }
    return argv;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Randomized-smoothing certification and certified-radius upper bounds", "certlab"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    CertifyArgs ca;
    auto* certify_cmd = app.add_subcommand("certify", "Certify points with a smoothed classifier");
    add_common(certify_cmd, ca.common);
    add_point_source(certify_cmd, ca.src);
    add_sampling(certify_cmd, ca.sampling);
    certify_cmd->add_option("--dist", ca.dist, "Smoothing distribution spec")->required();
    certify_cmd->add_option("--p", ca.ps, "Norm orders for the emitted radii (real >= 2 or 'inf')");

    BoundsArgs ba;
    auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate one certified-radius upper bound");
    add_common(bounds_cmd, ba.common, false);
    bounds_cmd->add_option("--family", ba.family, "iid, gengauss, uniform-linf or uniform-l1")->required();
    bounds_cmd->add_option("--sigma", ba.sigma, "Per-coordinate standard deviation")->check(CLI::PositiveNumber);
    bounds_cmd->add_option("--b", ba.b, "Scale parameter")->check(CLI::PositiveNumber);
    bounds_cmd->add_option("--q", ba.q, "Generalized Gaussian shape (converts --b to sigma)")
        ->check(CLI::PositiveNumber);
    bounds_cmd->add_option("--d", ba.d, "Dimension")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    bounds_cmd->add_option("--p", ba.p, "Norm order (real > 0 or 'inf')");
    bounds_cmd->add_option("--p1", ba.p1, "Top-class probability")->check(CLI::Range(0.0, 1.0));
    bounds_cmd->add_option("--p2", ba.p2, "Runner-up probability (default 1 - p1)")->check(CLI::Range(0.0, 1.0));

    SweepArgs sa;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a table sweep");
    add_common(sweep_cmd, sa.common);
    sweep_cmd->add_option("--kind", sa.kind, "Sweep kind")
        ->check(CLI::IsMember({"bounds", "bound-vs-cert", "dimension", "shape"}));
    sweep_cmd->add_flag("--resume", sa.resume, "Skip jobs already recorded in <out>.csv.partial");
    sweep_cmd->add_option("--families", sa.families, "Bound families (bounds sweep)");
    sweep_cmd->add_option("--sigma", sa.sigma, "Noise standard deviation")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--b", sa.b, "Scale parameter (bounds sweep)")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--q", sa.q, "Shape used to convert --b (bounds sweep)")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--dims", sa.dims, "Dimensions (bounds sweep)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    sweep_cmd->add_option("--p", sa.ps, "Norm orders");
    sweep_cmd->add_option("--p1", sa.p1s, "Top-class probabilities, p2 = 1 - p1 (bounds sweep)")
        ->check(CLI::Range(0.0, 1.0));
    sweep_cmd->add_option("--sides", sa.sides, "Resolutions in pixels per side (dimension sweep)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{4096}));
    sweep_cmd->add_option("--channels", sa.channels, "Channels (dimension sweep)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{64}));
    sweep_cmd->add_option("--qs", sa.qs, "Shapes (shape sweep)")->check(CLI::PositiveNumber);
    add_point_source(sweep_cmd, sa.src);
    add_sampling(sweep_cmd, sa.sampling);

    VerifyArgs va;
    auto* verify_cmd = app.add_subcommand("verify", "Run a verification suite");
    add_common(verify_cmd, va.common);
    verify_cmd->add_option("--suite", va.suite,
                           "Suite name, comma-separated list, or 'all' (lemma1, lemma2, box, l1, flip, scaling, "
                           "dominance, crossing)");
    verify_cmd->add_option("--d", va.params.dims, "Dimensions for the geometric suites")
        ->check(CLI::Range(std::size_t{1}, std::size_t{4096}));
    verify_cmd->add_option("--b", va.params.b, "Uniform scale")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--eps", va.params.eps, "Shifts for the geometric suites")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--step", va.params.step, "Grid spacing (lemma2)")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--n", va.params.n, "Monte-Carlo samples per cell")
        ->check(CLI::Range(std::size_t{10'000}, std::size_t{1} << 40));

    WorstcaseArgs wa;
    auto* worst_cmd = app.add_subcommand("worstcase", "Build and check a worst-case construction");
    add_common(worst_cmd, wa.common);
    worst_cmd->add_option("--construction", wa.construction, "halfspace, box or l1")
        ->check(CLI::IsMember({"halfspace", "box", "l1"}));
    worst_cmd->add_option("--dist", wa.dist, "Smoothing distribution (halfspace)");
    worst_cmd->add_option("--d", wa.d, "Dimension")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 24));
    worst_cmd->add_option("--p1", wa.p1, "Top-class probability (halfspace)")->check(CLI::Range(0.0, 1.0));
    worst_cmd->add_option("--p2", wa.p2, "Runner-up probability (halfspace, default 1 - p1)")
        ->check(CLI::Range(0.0, 1.0));
    worst_cmd->add_option("--b", wa.b, "Uniform scale (box, l1)")->check(CLI::PositiveNumber);
    worst_cmd->add_option("--eps", wa.eps, "Shift (box default: flip threshold)")->check(CLI::PositiveNumber);
    worst_cmd->add_option("--multipliers", wa.multipliers, "Multiples of eps_star to evaluate (halfspace)");
    worst_cmd->add_option("--p", wa.ps, "Norm orders for flip_lp_norm (halfspace)");
    worst_cmd->add_option("--n", wa.n, "Monte-Carlo samples")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
    worst_cmd->add_option("--quantile-samples", wa.quantile_samples, "Samples for non-Gaussian thresholds")
        ->check(CLI::Range(std::size_t{1000}, std::size_t{1} << 40));

    std::string manifest_path;
    std::string replay_out;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay_cmd->add_option("--manifest", manifest_path, "Manifest JSON written by an earlier run")
        ->required()
        ->check(CLI::ExistingFile);
    replay_cmd->add_option("--out", replay_out, "Replace the recorded output prefix");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << failed->help();
        return kExitInputError;
    }

    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    try {
        if (name == "replay") return dispatch(replay_argv(manifest_path, replay_out), out, err);

        int code = kExitOk;
        const Common* common = nullptr;
        std::uint64_t seed = 0;
        Output result;
        JobRunner* runner = nullptr;
        std::unique_ptr<JobRunner> holder;
        if (name == "certify") {
            common = &ca.common;
            seed = resolve_seed(*common);
            result = run_certify(ca, seed);
        } else if (name == "bounds") {
            common = &ba.common;
            result = run_bounds(ba);
        } else if (name == "sweep") {
            common = &sa.common;
            seed = resolve_seed(*common);
            if (sa.resume && sa.common.out.empty()) throw std::invalid_argument("--resume needs --out");
            result = run_sweep(sa, seed, runner, holder);
            if (runner != nullptr && runner->resumed() > 0) {
                err << fmt::format("resumed {} completed job(s)\n", runner->resumed());
            }
        } else if (name == "verify") {
            common = &va.common;
            seed = resolve_seed(*common);
            auto [o, ok] = run_verify(va, seed);
            result = std::move(o);
            code = ok ? kExitOk : kExitVerifyFailed;
        } else {
            common = &wa.common;
            seed = resolve_seed(*common);
            result = run_worstcase(wa, seed);
        }
        // Verification summaries already go to stdout; the report itself
        // only when writing files or asked for explicitly.
        Output shown = result;
        if (name == "verify" && common->out.empty() && !sub->get_option("--format")->count()) {
            out << shown.summary;
        } else {
            const auto written = emit(*common, shown, out);
            write_manifest(*common, name, args, sub, seed, written, elapsed());
        }
        if (runner != nullptr) runner->finish();
        return code;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

}  // namespace certlab::cli
