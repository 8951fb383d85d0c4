#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stirapsim/oracle.hpp"
#include "stirapsim/scenario.hpp"

namespace py = pybind11;
using namespace stirapsim;

namespace {

py::array_t<double> populations_matrix(const RunResult& result) {
    const int n = result.trajectory.samples();
    const int dim = result.space.dimension();
    py::array_t<double> out({n, dim});
    auto view = out.mutable_unchecked<2>();
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < dim; ++i) view(k, i) = result.trajectory.states[k](i, i).real();
    return out;
}

py::dict summary_dict(const RunSummary& s) {
    py::dict out;
    out["scheme"] = s.scheme;
    out["initial"] = s.initial;
    out["mode_names"] = s.mode_names;
    out["emission_probability"] = s.emission_probability;
    out["peak_time"] = s.peak_time;
    out["symmetry"] = s.symmetry;
    out["transfer_probability"] = s.transfer_probability;
    out["fidelity"] = s.fidelity;
    out["dark_overlap_min"] = s.dark_overlap_min;
    out["bookkeeping_defect"] = s.bookkeeping;
    py::dict conditions;
    for (const auto& c : s.conditions) {
        py::dict rep;
        rep["lhs"] = c.lhs;
        rep["rhs"] = c.rhs;
        rep["margin"] = c.margin;
        rep["pass"] = c.pass;
        conditions[c.name.c_str()] = rep;
    }
    out["conditions"] = conditions;
    out["repetition_interval_us"] = s.repetition.interval_us;
    out["repetition_rate_khz"] = s.repetition.rate_khz;
    if (s.recoil) out["recoil_ratio"] = s.recoil->ratio;
    out["calibrated_d_um"] = s.calibrated_d_um;
    out["calibrated_omega0_rad_us"] = s.calibrated_omega0_rad_us;
    out["calibrated_sync_offset_us"] = s.calibrated_sync_offset_us;
    out["max_trace_deviation"] = s.stats.max_trace_deviation;
    out["max_hermiticity_drift"] = s.stats.max_hermiticity_drift;
    out["min_eigenvalue"] = s.stats.min_eigenvalue;
    out["wall_time_ms"] = s.stats.wall_time_ms;
    return out;
}

py::dict result_dict(const RunResult& result) {
    py::dict out = summary_dict(result.summary);
    out["times"] = result.trajectory.times;
    out["populations"] = populations_matrix(result);
    std::vector<std::string> labels;
    for (int i = 0; i < result.space.dimension(); ++i) labels.push_back(result.space.label(i));
    out["state_labels"] = labels;
    py::list rates;
    for (const auto& rec : result.emission) rates.append(rec.rate);
    out["emission_rates"] = rates;
    out["dark_overlap"] = result.dark_overlap;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Intracavity-STIRAP photon interface simulator";

    py::enum_<Scheme>(m, "Scheme")
        .value("two_mode_single_node", Scheme::two_mode_single_node)
        .value("one_mode_single_node", Scheme::one_mode_single_node)
        .value("cascaded", Scheme::cascaded);

    py::class_<StateSpace>(m, "StateSpace")
        .def_static("build", &StateSpace::build, py::arg("scheme"), py::arg("node_count") = 1)
        .def_property_readonly("dimension", &StateSpace::dimension)
        .def("label", &StateSpace::label)
        .def("labels",
             [](const StateSpace& s) {
                 std::vector<std::string> out;
                 for (int i = 0; i < s.dimension(); ++i) out.push_back(s.label(i));
                 return out;
             });

    py::class_<PulseConfig>(m, "PulseConfig")
        .def(py::init<>())
        .def_readwrite("omega0", &PulseConfig::omega0)
        .def_readwrite("w_c", &PulseConfig::w_c)
        .def_readwrite("w_p", &PulseConfig::w_p)
        .def_readwrite("d", &PulseConfig::d)
        .def_readwrite("v", &PulseConfig::v)
        .def_readwrite("center_time", &PulseConfig::center_time)
        .def_property(
            "eta0",
            [](const PulseConfig& c) {
                return std::vector<double>(c.eta0, c.eta0 + c.n_modes);
            },
            [](PulseConfig& c, const std::vector<double>& v) {
                c.n_modes = static_cast<int>(v.size());
                for (std::size_t i = 0; i < v.size() && i < 2; ++i) c.eta0[i] = v[i];
            })
        .def("eta", [](const PulseConfig& c, int mode, double t) { return eta(c, mode, t); })
        .def("omega_p", [](const PulseConfig& c, double t) { return omega_p(c, t); })
        .def("integration_window",
             [](const PulseConfig& c) { return integration_window(c); })
        .def("mixing_angle",
             [](const PulseConfig& c, int mode, double t) { return mixing_angle(c, mode, t); });

    py::class_<ScenarioConfig>(m, "Config")
        .def_static("preset", &ScenarioConfig::preset)
        .def_static("from_text", &ScenarioConfig::from_text)
        .def_static("from_file",
                    [](const std::string& p) { return ScenarioConfig::from_file(p); })
        .def("set",
             [](ScenarioConfig& c, const std::string& key, const std::string& value) {
                 c.set(key, value, Provenance::override_);
             })
        .def("validate", &ScenarioConfig::validate)
        .def("serialize", &ScenarioConfig::serialize)
        .def("__eq__", [](const ScenarioConfig& a, const ScenarioConfig& b) { return a == b; });

    m.def("preset_names", [] {
        std::vector<std::string> names;
        for (const auto& [name, _] : ScenarioConfig::preset_catalog()) names.push_back(name);
        return names;
    });

    m.def(
        "run", [](const ScenarioConfig& cfg) { return result_dict(run(cfg)); },
        "Simulate one scenario; returns summary fields plus trajectory arrays.");

    m.def(
        "sweep",
        [](const ScenarioConfig& cfg, const std::string& parameter, std::vector<double> grid,
           int jobs) {
            if (grid.empty()) grid = builtin_grid(cfg, parameter);
            SweepTable table = sweep(cfg, parameter, grid, jobs);
            py::list rows;
            for (const auto& row : table.rows) {
                py::dict r = summary_dict(row.summary);
                r[table.parameter.c_str()] = row.value;
                r["value"] = row.value;
                rows.append(r);
            }
            return rows;
        },
        py::arg("config"), py::arg("parameter"), py::arg("grid") = std::vector<double>{},
        py::arg("jobs") = 1);

    m.def(
        "calibrate",
        [](const ScenarioConfig& cfg, const std::vector<std::string>& free_params,
           const std::string& target) {
            CalibrationResult result = calibrate(cfg, free_params, target);
            py::dict out;
            out["config"] = result.config;
            out["objective"] = result.objective;
            out["evaluations"] = result.evaluations;
            return out;
        },
        py::arg("config"), py::arg("free_params"), py::arg("target") = "auto");

    m.def("feasibility_report", [](const ScenarioConfig& cfg_in) {
        ScenarioConfig cfg = cfg_in;
        cfg.validate();
        const FeasibilityInput in = cfg.feasibility_input();
        py::dict out;
        for (const auto& rep : all_condition_reports(in)) {
            py::dict r;
            r["lhs"] = rep.lhs;
            r["rhs"] = rep.rhs;
            r["margin"] = rep.margin;
            r["pass"] = rep.pass;
            out[rep.name.c_str()] = r;
        }
        const RepetitionRate rr = repetition_rate(in);
        out["repetition_interval_us"] = rr.interval_us;
        out["repetition_rate_khz"] = rr.rate_khz;
        if (in.omega_p.size() >= 2)
            out["recoil_ratio"] = recoil_distinguishability(in, cfg.length_um("D_x")).ratio;
        return out;
    });

    py::register_exception<ConfigParseError>(m, "ConfigParseError");
    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<PropagationError>(m, "PropagationError");
}
