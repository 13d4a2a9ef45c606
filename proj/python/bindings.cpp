#include "boedflows/experiment.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace boedflows;

namespace {

DesignBatch make_batch(const std::vector<std::vector<double>>& points, const ConstraintSpec& c) {
    if (points.empty()) throw ConfigError("design needs at least one point");
    const std::size_t d = points[0].size();
    std::vector<double> flat;
    for (const auto& p : points) {
        if (p.size() != d) throw ConfigError("design points must share one dimension");
        flat.insert(flat.end(), p.begin(), p.end());
    }
    return DesignBatch(std::move(flat), d, c);
}

std::vector<std::vector<double>> points_of(const DesignBatch& b) {
    std::vector<std::vector<double>> out;
    for (std::size_t j = 0; j < b.size(); ++j) out.emplace_back(b.point(j).begin(), b.point(j).end());
    return out;
}

py::dict row_dict(const ReportRow& r) {
    py::dict d;
    d["kind"] = r.kind;
    d["method"] = r.method;
    d["m"] = r.m;
    d["seed"] = r.seed;
    d["eig"] = r.eig;
    d["se"] = r.se;
    d["iterations"] = r.iterations;
    d["wallclock_ms"] = r.wallclock_ms;
    d["design"] = points_of(r.design);
    d["status"] = r.status;
    return d;
}

KeyValueConfig with_overrides(const std::string& text, const std::map<std::string, std::string>& set) {
    auto cfg = KeyValueConfig::parse(text);
    for (const auto& [k, v] : set) cfg.set(k, v);
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Batch experimental design by Wasserstein gradient flows";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ModelError>(m, "ModelError", PyExc_RuntimeError);
    py::register_exception<EstimatorError>(m, "EstimatorError", PyExc_RuntimeError);
    py::register_exception<FlowError>(m, "FlowError", PyExc_RuntimeError);

    py::class_<ConstraintSpec>(m, "Constraint")
        .def_static("unconstrained", &ConstraintSpec::unconstrained)
        .def_static("box", &ConstraintSpec::box, py::arg("lo"), py::arg("hi"))
        .def_static("torus", &ConstraintSpec::torus)
        .def_static("ordered_min_gap", &ConstraintSpec::ordered_min_gap, py::arg("min_gap"), py::arg("t_max"))
        .def_property_readonly("kind", [](const ConstraintSpec& c) { return to_string(c.kind); })
        .def("__repr__", [](const ConstraintSpec& c) { return "<Constraint " + to_string(c.kind) + ">"; });

    m.def("repair", [](std::vector<double> times, double min_gap, double t_max) {
        repair_times(times, min_gap, t_max);
        return times;
    }, py::arg("times"), py::arg("min_gap"), py::arg("t_max"));
    m.def("wrap_torus", &wrap_torus);
    m.def("is_feasible", [](const std::vector<std::vector<double>>& pts, const ConstraintSpec& c) {
        return is_feasible(make_batch(pts, c));
    });

    m.def("model_names", [] { return std::vector<std::string>{"toy1d", "sensor2d", "torus", "pk", "fhn"}; });
    m.def("constraint_of", [](const std::string& model) { return make_model(model)->constraint(); });

    m.def("eig_exact_torus", [](const std::vector<double>& angles) {
        TorusLinearModel torus;
        return eig_exact_torus(torus, DesignBatch(angles, 1, ConstraintSpec::torus()));
    }, py::arg("angles"));
    m.def("eig_quadrature_toy", [](double xi, std::size_t nodes) {
        return eig_quadrature_1d(Toy1DModel{}, xi, nodes);
    }, py::arg("xi"), py::arg("nodes") = 200);
    m.def("eig_nmc", [](const std::string& model, const std::vector<std::vector<double>>& pts,
                        std::size_t n_outer, std::size_t n_inner, std::uint64_t seed, std::size_t replications) {
        auto mdl = make_model(model);
        auto b = make_batch(pts, mdl->constraint());
        py::gil_scoped_release release;
        auto e = eig_nmc_replicated(mdl, b, n_outer, n_inner, seed, replications);
        return std::make_pair(e.value, e.std_error);
    }, py::arg("model"), py::arg("design"), py::arg("n_outer") = 500, py::arg("n_inner") = 1000,
       py::arg("seed") = 0, py::arg("replications") = 1,
       "Mean and standard error of replicated nested Monte Carlo estimates.");

    m.def("design_uniform", [](std::size_t mm, const ConstraintSpec& c) { return points_of(design_uniform(mm, c)); });

    m.def("run_experiment", [](const std::string& config_text, const std::map<std::string, std::string>& set,
                               bool write) {
        auto spec = ExperimentSpec::from_config(with_overrides(config_text, set));
        ExperimentReport rep;
        {
            py::gil_scoped_release release;
            rep = run_experiment(spec, write);
        }
        py::list rows, aggs;
        for (const auto& r : rep.rows) rows.append(row_dict(r));
        for (const auto& r : rep.aggregates) aggs.append(row_dict(r));
        py::dict out;
        out["rows"] = rows;
        out["aggregates"] = aggs;
        return out;
    }, py::arg("config"), py::arg("set") = std::map<std::string, std::string>{}, py::arg("write") = false,
       "Runs every (method, m, seed) cell of a config given as text.");
}
