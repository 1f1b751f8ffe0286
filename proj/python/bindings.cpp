#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>
#include <string>

#include "hslab/config.hpp"
#include "hslab/geometry.hpp"
#include "hslab/io.hpp"
#include "hslab/run.hpp"
#include "hslab/solver.hpp"
#include "hslab/stability.hpp"
#include "hslab/verify.hpp"
#include "hslab/weights.hpp"

namespace py = pybind11;
using namespace hslab;

namespace {

py::array_t<double> to_numpy(std::span<const double> v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

RunConfig config_or_raise(ConfigResult res) {
    if (!res.config) {
        std::string msg = "invalid config:";
        for (const auto& e : res.errors) msg += "\n  " + e;
        throw py::value_error(msg);
    }
    return std::move(*res.config);
}

}  // namespace

PYBIND11_MODULE(_hslab, m) {
    m.doc() = "Quasilinear boundary-reaction solver and verification checks";

    py::class_<HalfSpaceGrid, std::shared_ptr<HalfSpaceGrid>>(m, "Grid")
        .def_property_readonly("n", &HalfSpaceGrid::n)
        .def_property_readonly("ny", &HalfSpaceGrid::ny)
        .def_property_readonly("nx", &HalfSpaceGrid::nx)
        .def_property_readonly("y_extent", &HalfSpaceGrid::y_extent)
        .def_property_readonly("x_extent", &HalfSpaceGrid::x_extent)
        .def_property_readonly("alpha", &HalfSpaceGrid::alpha)
        .def_property_readonly("node_count", &HalfSpaceGrid::node_count)
        .def_property_readonly("y_nodes", [](const HalfSpaceGrid& g) { return to_numpy(g.y_nodes()); })
        .def_property_readonly("x_nodes", [](const HalfSpaceGrid& g) { return to_numpy(g.x_nodes()); });

    m.def(
        "make_grid",
        [](int n, double y_extent, double x_extent, int ny, int nx, double alpha) {
            return std::const_pointer_cast<HalfSpaceGrid>(make_grid(n, y_extent, x_extent, ny, nx, alpha));
        },
        py::arg("n"), py::arg("y_extent"), py::arg("x_extent"), py::arg("ny"), py::arg("nx"), py::arg("alpha") = 0.0);

    py::class_<Field>(m, "Field")
        .def(py::init([](std::shared_ptr<HalfSpaceGrid> g, py::array_t<double, py::array::c_style | py::array::forcecast> v) {
            if (static_cast<std::size_t>(v.size()) != g->node_count())
                throw py::value_error("values must have one entry per grid node");
            return Field(g, std::vector<double>(v.data(), v.data() + v.size()));
        }))
        .def_property_readonly("values", [](const Field& f) { return to_numpy(f.values()); })
        .def_property_readonly("grid", [](const Field& f) { return std::const_pointer_cast<HalfSpaceGrid>(f.grid_ptr()); });

    m.def(
        "named_field",
        [](std::shared_ptr<HalfSpaceGrid> g, const std::string& name, double scale) {
            const auto f = named_field(name);
            return sample(g, [&](const Point& p) { return scale * f(p); });
        },
        py::arg("grid"), py::arg("name"), py::arg("scale") = 1.0);
    m.def("read_dump", [](const std::string& path) { return read_dump(path); }, py::arg("path"));
    m.def("write_dump", [](const std::string& path, const Field& u) { write_dump(path, u); }, py::arg("path"),
          py::arg("field"));

    py::class_<WeightModel>(m, "WeightModel")
        .def_static("p_laplacian", &WeightModel::p_laplacian, py::arg("p"), py::arg("alpha"), py::arg("grad_floor") = 1e-10)
        .def_static("mean_curvature", &WeightModel::mean_curvature, py::arg("alpha"), py::arg("grad_floor") = 1e-10)
        .def_property_readonly("kind", [](const WeightModel& w) { return to_string(w.kind()); })
        .def_property_readonly("p", &WeightModel::p)
        .def_property_readonly("alpha", &WeightModel::alpha)
        .def("mu", &WeightModel::mu)
        .def("profile", &WeightModel::profile)
        .def("profile_derivative", &WeightModel::profile_derivative);
    m.def("check_growth_bound", &check_growth_bound, py::arg("model"), py::arg("t_max"), py::arg("samples"));
    m.def("check_muckenhoupt", &check_muckenhoupt, py::arg("model"), py::arg("t"), py::arg("d"), py::arg("quad_points"));

    py::class_<RunConfig>(m, "Config")
        .def_property_readonly("n", [](const RunConfig& c) { return c.grid.n; })
        .def_property_readonly("weight", [](const RunConfig& c) { return c.scenario.weight; });
    m.def("parse_config", [](const std::string& text) { return config_or_raise(parse_config(text)); });
    m.def("load_config", [](const std::string& path) { return config_or_raise(load_config(path)); });

    m.def(
        "solve",
        [](const RunConfig& cfg) {
            auto [u, rep] = newton_solve(cfg.scenario, initial_field(cfg));
            py::dict d;
            d["converged"] = rep.converged;
            d["iterations"] = rep.iterations;
            d["final_residual_norm"] = rep.final_residual_norm;
            d["status"] = to_string(rep.status);
            d["residual_history"] = rep.residual_history;
            return py::make_tuple(std::move(u), d);
        },
        py::arg("config"));

    m.def(
        "relaxed_stability",
        [](const RunConfig& cfg, const Field& u, int basis_size) {
            const auto r = relaxed_stability_scan(u, cfg.scenario, basis_size);
            py::dict d;
            d["min_rayleigh"] = r.min_rayleigh;
            d["tol_stab"] = r.tol_stab;
            d["stable"] = r.stable;
            d["degenerate"] = r.degenerate;
            d["basis_size"] = r.basis_size;
            return d;
        },
        py::arg("config"), py::arg("field"), py::arg("basis_size") = 64);

    m.def(
        "symmetry_detect",
        [](const Field& u, double tol) {
            const auto r = symmetry_detect(u, tol);
            py::dict d;
            d["max_angular_deviation"] = r.max_angular_deviation;
            d["is_one_dimensional"] = r.is_one_dimensional;
            d["omega"] = r.omega;
            d["slice_x"] = r.slice_x;
            return d;
        },
        py::arg("field"), py::arg("tol_sym") = 1e-3);

    m.def(
        "identity_a3",
        [](const Field& u) {
            const auto r = identity_A3_residual(u);
            py::dict d;
            d["sup"] = r.sup;
            d["scale"] = r.scale;
            d["scaled"] = r.scaled();
            d["evaluated"] = r.evaluated;
            return d;
        },
        py::arg("field"));

    m.def(
        "run",
        [](const std::string& subcommand, const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed) {
            RunOptions opt;
            opt.out_dir = out_dir;
            opt.seed = seed;
            const auto res = run(subcommand, cfg, opt);
            py::list reports;
            for (const auto& r : res.reports) reports.append(dump_json(r.report));
            return py::make_tuple(res.exit_code, reports);
        },
        py::arg("subcommand"), py::arg("config"), py::arg("out_dir"), py::arg("seed") = 0);
}
