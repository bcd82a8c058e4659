#include <memory>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mixlab/cli.hpp"
#include "mixlab/experiments.hpp"
#include "mixlab/sampler.hpp"
#include "mixlab/stationary.hpp"
#include "mixlab/walk.hpp"

namespace py = pybind11;
using namespace mixlab;

namespace {

std::vector<Vertex> heads_of(const Digraph& g) {
    std::vector<Vertex> out;
    for (Vertex x = 0; x < g.n(); ++x) {
        const auto e = g.out_edges(x);
        out.insert(out.end(), e.begin(), e.end());
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_mixlab, m) {
    m.doc() = "Random digraph mixing-time simulations";

    static py::exception<Error> error(m, "MixlabError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = error;
            py::object instance = exc(e.what());
            instance.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(exc.ptr(), instance.ptr());
        }
    });

    py::class_<DegreeSequence, std::shared_ptr<DegreeSequence>>(m, "DegreeSequence")
        .def_property_readonly("model", [](const DegreeSequence& s) { return std::string(to_string(s.model())); })
        .def_property_readonly("n", &DegreeSequence::n)
        .def_property_readonly("m", &DegreeSequence::m)
        .def_property_readonly("delta", &DegreeSequence::delta)
        .def_property_readonly("eulerian", &DegreeSequence::eulerian)
        .def_property_readonly("out_degrees", [](const DegreeSequence& s) {
            return std::vector<std::uint32_t>(s.out_degrees().begin(), s.out_degrees().end());
        })
        .def_property_readonly("in_degrees", [](const DegreeSequence& s) {
            return std::vector<std::uint32_t>(s.in_degrees().begin(), s.in_degrees().end());
        })
        .def("entropy", [](const DegreeSequence& s) { return entropic_scale(s).entropy; })
        .def("entropic_time", [](const DegreeSequence& s) { return entropic_scale(s).entropic_time; })
        .def("mu_in", [](const DegreeSequence& s) { return mu_in(s).vector(); });

    m.def(
        "validate_degrees",
        [](const std::string& model, std::vector<std::uint32_t> out, std::optional<std::vector<std::uint32_t>> in) {
            return std::make_shared<DegreeSequence>(validate_degrees(parse_model(model), std::move(out), std::move(in)));
        },
        py::arg("model"), py::arg("out_degrees"), py::arg("in_degrees") = py::none());

    m.def(
        "generate_degrees",
        [](const std::string& text, const std::string& model, std::optional<std::size_t> n, std::uint64_t seed) {
            return std::make_shared<DegreeSequence>(generate_degrees(text, parse_model(model), n, seed));
        },
        py::arg("text"), py::arg("model") = "dcm", py::arg("n") = py::none(), py::arg("seed") = 0);

    py::class_<Digraph>(m, "Digraph")
        .def_property_readonly("n", &Digraph::n)
        .def_property_readonly("m", &Digraph::m)
        .def("out_edges",
             [](const Digraph& g, Vertex x) {
                 if (x >= g.n()) throw Error(ErrorCode::BadRange, "vertex out of range");
                 const auto e = g.out_edges(x);
                 return std::vector<Vertex>(e.begin(), e.end());
             })
        .def("heads", &heads_of)
        .def("is_simple", [](const Digraph& g) { return is_simple(g); })
        .def("strongly_connected", [](const Digraph& g) { return strongly_connected(g); })
        .def("to_json", [](const Digraph& g) { return digraph_to_json(g); });

    m.def(
        "sample_digraph",
        [](std::shared_ptr<DegreeSequence> seq, std::uint64_t root, std::uint64_t index) {
            return sample_digraph(seq, RngStream(root, index));
        },
        py::arg("seq"), py::arg("root_seed"), py::arg("index") = 0);

    m.def(
        "stationary",
        [](const Digraph& g, double tol) {
            const auto k = kernel_from_digraph(g);
            return stationary_for(g, k, tol, default_max_iters(g.sequence())).pi.vector();
        },
        py::arg("g"), py::arg("tol") = kDefaultStationaryTol);

    m.def(
        "double_row",
        [](const Digraph& sigma, const Digraph& eta, Vertex x, std::size_t s, std::size_t t) {
            return double_row(x, s, t, kernel_from_digraph(sigma), kernel_from_digraph(eta)).vector();
        },
        py::arg("sigma"), py::arg("eta"), py::arg("x"), py::arg("s"), py::arg("t"));

    m.def("tv_distance",
          [](const std::vector<double>& a, const std::vector<double>& b) { return tv_distance(a, b); });

    m.def("theory_curve", &theory_curves, py::arg("curve"), py::arg("beta"), py::arg("gamma"),
          py::arg("q") = 0.0);

    m.def(
        "run",
        [](const std::vector<std::string>& args) {
            const auto spec = parse_run_spec(args);
            py::gil_scoped_release release;
            const auto out = mixlab::run(spec);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["exit_code"] = out.exit_code;
            d["csv_path"] = out.csv_path;
            d["json_path"] = out.json_path;
            d["summary"] = out.summary;
            d["resolved"] = spec.resolved.dump();
            return d;
        },
        py::arg("args"), "Run an experiment from CLI-style flags.");
}
