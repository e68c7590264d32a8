#include "certlab/bounds.hpp"
#include "certlab/certify.hpp"
#include "certlab/cli.hpp"
#include "certlab/distributions.hpp"
#include "certlab/harness.hpp"
#include "certlab/statkernel.hpp"
#include "certlab/verify.hpp"
#include "certlab/worstcase.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <sstream>
#include <variant>

namespace py = pybind11;
using namespace certlab;

namespace {

py::dict bound_dict(const BoundResult& r) {
    py::dict d;
    d["value"] = r.value;
    d["theorem"] = r.theorem;
    d["preconditions_met"] = r.preconditions_met;
    d["notes"] = r.precondition_notes;
    return d;
}

py::dict certificate_dict(const CertificateResult& r) {
    py::dict d;
    d["predicted_class"] = r.predicted_class;
    d["candidate"] = r.candidate;
    d["abstain"] = r.abstain;
    d["p1_lower"] = r.p1_lower;
    d["p2_upper"] = r.p2_upper;
    py::dict radii;
    for (const auto& e : r.radii) radii[py::str(e.p.str())] = e.radius;
    d["radii"] = radii;
    d["certificate_available"] = r.certificate_available;
    d["n0"] = r.n0;
    d["n"] = r.n;
    d["alpha"] = r.alpha;
    d["seed"] = r.seed;
    d["dimension"] = r.dimension;
    return d;
}

py::dict halfspace_dict(const HalfSpaceConstruction& c) {
    py::dict d;
    d["d"] = c.d;
    d["p1"] = c.pair.p1;
    d["p2"] = c.pair.p2;
    d["s1"] = c.s1;
    d["s2"] = c.s2;
    d["s1_stderr"] = c.s1_stderr;
    d["s2_stderr"] = c.s2_stderr;
    d["eps_star"] = c.eps_star;
    d["exact"] = c.exact;
    return d;
}

std::vector<NormOrder> norms(const std::vector<double>& ps) {
    std::vector<NormOrder> out;
    out.reserve(ps.size());
    for (double p : ps) out.emplace_back(p);
    return out;
}

// Either a classifier spec string or a python callable taking a float64
// array and returning a label.
std::unique_ptr<BaseClassifier> make_classifier(const py::object& classifier, int num_classes, std::size_t d) {
    if (py::isinstance<py::str>(classifier)) {
        return std::make_unique<SyntheticClassifier>(SyntheticClassifier::parse(classifier.cast<std::string>(), d));
    }
    if (!PyCallable_Check(classifier.ptr())) throw py::type_error("classifier must be a spec string or a callable");
    if (num_classes < 1) throw py::value_error("num_classes is required for a callable classifier");
    auto fn = std::make_shared<py::object>(classifier);
    return std::make_unique<FunctionClassifier>(num_classes, [fn](std::span<const double> z) {
        py::gil_scoped_acquire gil;
        py::array_t<double> arr(static_cast<py::ssize_t>(z.size()), z.data());
        return (*fn)(arr).cast<int>();
    });
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.attr("__version__") = cli::version();

    m.def("norm_cdf", &std_normal_cdf, py::arg("z"));
    m.def("norm_ppf", &std_normal_inv_cdf, py::arg("p"));
    m.def(
        "clopper_pearson_lower",
        [](std::uint64_t k, std::uint64_t n, double alpha) { return clopper_pearson_lower(k, n, ConfidenceLevel(alpha)); },
        py::arg("k"), py::arg("n"), py::arg("alpha"));

    py::class_<SmoothingDistribution>(m, "Distribution")
        .def_static("parse", &SmoothingDistribution::parse, py::arg("spec"))
        .def_static("gaussian", &SmoothingDistribution::gaussian, py::arg("sigma"))
        .def_static("generalized_gaussian", &SmoothingDistribution::generalized_gaussian_sigma, py::arg("q"),
                    py::arg("sigma"))
        .def_static("uniform_linf", &SmoothingDistribution::uniform_linf, py::arg("b"))
        .def_static("uniform_l1", &SmoothingDistribution::uniform_l1, py::arg("b"))
        .def_property_readonly("is_gaussian", &SmoothingDistribution::is_gaussian)
        .def_property_readonly("is_iid", &SmoothingDistribution::is_iid)
        .def_property_readonly("sigma", &SmoothingDistribution::coordinate_sigma)
        .def(
            "sample",
            [](const SmoothingDistribution& dist, std::size_t d, std::size_t count, std::uint64_t seed) {
                py::array_t<double> out({static_cast<py::ssize_t>(count), static_cast<py::ssize_t>(d)});
                auto buf = out.mutable_unchecked<2>();
                RngStream rng(seed, 0);
                {
                    py::gil_scoped_release release;
                    for (std::size_t i = 0; i < count; ++i) {
                        sample_into(dist, std::span<double>(buf.mutable_data(static_cast<py::ssize_t>(i), 0), d), rng);
                    }
                }
                return out;
            },
            py::arg("d"), py::arg("count") = 1, py::arg("seed") = 0)
        .def("__str__", &SmoothingDistribution::to_string)
        .def("__repr__", [](const SmoothingDistribution& d) { return "Distribution('" + d.to_string() + "')"; });

    m.def(
        "iid_bound",
        [](double sigma, std::size_t d, double p, double p1, double p2) {
            return bound_dict(iid_upper_bound(sigma, d, NormOrder(p), ProbabilityPair(p1, p2)));
        },
        py::arg("sigma"), py::arg("d"), py::arg("p"), py::arg("p1"), py::arg("p2"));
    m.def(
        "gengauss_bound",
        [](double sigma, std::size_t d, double p, double p1, double p2, std::optional<double> q) {
            return bound_dict(gengauss_upper_bound(sigma, d, NormOrder(p), ProbabilityPair(p1, p2), q));
        },
        py::arg("sigma"), py::arg("d"), py::arg("p"), py::arg("p1"), py::arg("p2"), py::arg("q") = py::none());
    m.def(
        "uniform_linf_bound",
        [](double b, std::size_t d, double p) { return bound_dict(linf_uniform_upper_bound(b, d, NormOrder(p))); },
        py::arg("b"), py::arg("d"), py::arg("p"));
    m.def(
        "uniform_l1_bound", [](double b, std::size_t d) { return bound_dict(l1_uniform_upper_bound(b, d)); },
        py::arg("b"), py::arg("d"));
    m.def(
        "gaussian_lp_radius",
        [](double sigma, std::size_t d, double p, double p1, double p2) {
            return gaussian_lp_radius(sigma, d, NormOrder(p), ProbabilityPair(p1, p2));
        },
        py::arg("sigma"), py::arg("d"), py::arg("p"), py::arg("p1"), py::arg("p2"));
    m.def("crossing_scan", &crossing_scan, py::arg("step") = 1e-4);

    m.def(
        "certify",
        [](const py::object& classifier, std::vector<double> x, const SmoothingDistribution& dist, std::size_t n0,
           std::size_t n, double alpha, std::uint64_t seed, unsigned workers, std::vector<double> p,
           int num_classes) {
            auto h = make_classifier(classifier, num_classes, x.size());
            CertifyConfig cfg;
            cfg.n0 = n0;
            cfg.n = n;
            cfg.alpha = ConfidenceLevel(alpha);
            cfg.seed = seed;
            cfg.workers = workers;
            const auto ps = norms(p);
            CertificateResult r;
            {
                py::gil_scoped_release release;
                r = certify(*h, x, dist, cfg, ps);
            }
            return certificate_dict(r);
        },
        py::arg("classifier"), py::arg("x"), py::arg("dist"), py::arg("n0") = 100, py::arg("n") = 100'000,
        py::arg("alpha") = 0.001, py::arg("seed") = 0, py::arg("workers") = 1, py::arg("p") = std::vector<double>{2.0},
        py::arg("num_classes") = 0);

    m.def(
        "build_halfspace",
        [](const SmoothingDistribution& dist, std::size_t d, double p1, double p2, std::size_t quantile_samples,
           std::uint64_t seed) {
            const ProbabilityPair pair(p1, p2);
            std::optional<HalfSpaceConstruction> c;
            {
                py::gil_scoped_release release;
                c = build_halfspace(dist, d, pair, HalfSpaceOptions{quantile_samples, seed, 1});
            }
            return halfspace_dict(*c);
        },
        py::arg("dist"), py::arg("d"), py::arg("p1"), py::arg("p2"), py::arg("quantile_samples") = 1'000'000,
        py::arg("seed") = 0);
    m.def("box_flip_threshold", &box_flip_threshold, py::arg("b"), py::arg("d"));
    m.def("box_overlap_prob", &box_overlap_prob, py::arg("b"), py::arg("d"), py::arg("eps"));

    m.def("verify_suites", &suite_names);
    m.def(
        "run_suite",
        [](const std::string& name, std::vector<std::size_t> dims, double b, std::vector<double> eps, double step,
           std::size_t n, std::uint64_t seed) {
            VerifyParams params;
            params.dims = std::move(dims);
            params.b = b;
            params.eps = std::move(eps);
            params.step = step;
            params.n = n;
            params.seed = seed;
            std::string text;
            {
                py::gil_scoped_release release;
                text = run_suite(name, params).to_json().dump();
            }
            return text;
        },
        py::arg("name"), py::arg("dims") = std::vector<std::size_t>{}, py::arg("b") = 1.0,
        py::arg("eps") = std::vector<double>{}, py::arg("step") = 0.02, py::arg("n") = 100'000, py::arg("seed") = 0);

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = cli::dispatch(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
