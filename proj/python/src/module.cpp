#include "specpred/run.hpp"
#include "specpred/sweep.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace specpred;

namespace {

// Documents cross the boundary as JSON text; the Python layer parses them.
Scenario scenario_from_text(const std::string& text, const std::string& base_dir) {
    return scenario_from_json(json::parse(text), base_dir);
}

py::dict trajectory_dict(const Trajectory& tr) {
    py::dict d;
    d["t"] = tr.t;
    d["c"] = tr.c;
    d["Y"] = tr.Y;
    d["Z"] = tr.Z;
    d["u"] = tr.u;
    d["v"] = tr.v;
    d["norm_lower"] = tr.norm_lower;
    d["norm_upper"] = tr.norm_upper;
    d["dt"] = tr.dt;
    d["max_control_residual"] = tr.max_control_residual;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Predictor-feedback certificates for delayed boundary control of diagonal systems";

    m.def(
        "certify",
        [](const std::string& descriptor, bool fit, std::uint64_t seed, int jobs) {
            SystemDescriptor desc = descriptor.empty() ? SystemDescriptor::reaction_diffusion(15.0)
                                                       : descriptor_from_json(json::parse(descriptor));
            py::gil_scoped_release release;
            Certificate cert;
            if (fit) {
                CertifyOptions o;
                o.ensemble.seed = seed;
                o.jobs = jobs;
                cert = certify_with_fit(desc, o);
            } else {
                cert = synthesize(desc);
            }
            return certificate_to_json(cert).dump();
        },
        py::arg("descriptor") = "", py::arg("fit") = true, py::arg("seed") = 1, py::arg("jobs") = 1,
        "Certificate JSON for a descriptor JSON (empty: reaction-diffusion with c = 15).");

    m.def(
        "simulate",
        [](const std::string& scenario, const std::string& base_dir, bool oracle) {
            Scenario s = scenario_from_text(scenario, base_dir);
            Trajectory tr;
            {
                py::gil_scoped_release release;
                tr = oracle ? oracle_simulate(s) : simulate(s);
            }
            return trajectory_dict(tr);
        },
        py::arg("scenario"), py::arg("base_dir") = "", py::arg("oracle") = false);

    m.def(
        "trajectory_csv",
        [](const std::string& scenario, const std::string& base_dir) {
            std::ostringstream os;
            write_trajectory_csv(os, simulate(scenario_from_text(scenario, base_dir)));
            return os.str();
        },
        py::arg("scenario"), py::arg("base_dir") = "");

    m.def(
        "check",
        [](const std::string& scenario, const std::string& base_dir) {
            Scenario s = scenario_from_text(scenario, base_dir);
            py::gil_scoped_release release;
            json j = envelope_report_to_json(check_envelopes(simulate(s), s));
            return j.dump();
        },
        py::arg("scenario"), py::arg("base_dir") = "", "Simulate a scenario and check it against its certificate.");

    m.def(
        "sweep",
        [](const std::string& scenario, const std::vector<std::string>& axes, int jobs, const std::string& base_dir) {
            Scenario s = scenario_from_text(scenario, base_dir);
            std::vector<SweepAxis> parsed;
            for (const auto& a : axes) parsed.push_back(parse_sweep_axis(a, s.certificate.delta_max));
            py::gil_scoped_release release;
            std::ostringstream os;
            write_sweep_csv(os, run_sweep(s, parsed, jobs));
            return os.str();
        },
        py::arg("scenario"), py::arg("axes"), py::arg("jobs") = 1, py::arg("base_dir") = "");

    m.def(
        "validate_lemma2",
        [](const std::string& problem, int members, std::uint64_t seed, int jobs, std::optional<double> falsify_eps) {
            Lemma2Problem p = problem.empty() ? default_lemma2_problem() : lemma2_problem_from_json(json::parse(problem));
            py::gil_scoped_release release;
            Lemma2Options o;
            o.members = members;
            o.seed = seed;
            o.jobs = jobs;
            Lemma2Report rep = lemma2_validate(p, o);
            json j = lemma2_report_to_json(rep);
            if (falsify_eps) {
                Lemma2Problem wide = p;
                wide.eps = *falsify_eps;
                j["falsification"] = lemma2_falsification_to_json(lemma2_falsify(wide, rep.M, rep.N, rep.sigma.sigma, o));
                j["falsification"]["eps"] = wide.eps;
            }
            return j.dump();
        },
        py::arg("problem") = "", py::arg("members") = 50, py::arg("seed") = 1, py::arg("jobs") = 1,
        py::arg("falsify_eps") = py::none());

    m.def("fading_memory_sup", &fading_memory_sup, py::arg("x"), py::arg("dt"), py::arg("kappa"));
    m.def("lagged_fading_sup", &lagged_fading_sup, py::arg("s"), py::arg("dt"), py::arg("kappa"), py::arg("lag"));

    m.def(
        "delta_margin",
        [](double norm_A_cl, double norm_BK, double M_lambda, double lambda, double D0, double margin) {
            DeltaMargin d = delta_margin(norm_A_cl, norm_BK, M_lambda, lambda, D0, margin);
            return py::dict(py::arg("delta_star") = d.delta_star, py::arg("delta_max") = d.delta_max,
                            py::arg("degenerate") = d.degenerate);
        },
        py::arg("norm_A_cl"), py::arg("norm_BK"), py::arg("M_lambda"), py::arg("lambda_"), py::arg("D0"),
        py::arg("margin") = 0.1);
    m.def("small_gain_lhs", &small_gain_lhs, py::arg("M_lambda"), py::arg("norm_BK"), py::arg("norm_A_cl"),
          py::arg("lambda_"), py::arg("delta"));

    m.def(
        "run",
        [](const std::string& config) {
            RunConfig c = run_config_from_json(json::parse(config));
            std::ostringstream out, log;
            int status;
            {
                py::gil_scoped_release release;
                status = run(c, out, log, LogLevel::info);
            }
            return py::make_tuple(status, out.str(), log.str());
        },
        py::arg("config"), "Run a CLI subcommand from a run-config JSON; returns (status, output, log).");
}
