#pragma once

#include "specpred/iss_certifier.hpp"
#include "specpred/lemma2.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace specpred {

using json = nlohmann::json;

// Shortest decimal that parses back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double x);
double parse_double(const std::string& s);

// Complex numbers are plain numbers when real, [re, im] otherwise.
json complex_to_json(cplx z);
cplx complex_from_json(const json& j, const std::string& where);
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j, const std::string& where);

json descriptor_to_json(const SystemDescriptor& d);
SystemDescriptor descriptor_from_json(const json& j);

json certificate_to_json(const Certificate& c);
Certificate certificate_from_json(const json& j);

json delay_to_json(const DelaySpec& d);
DelaySpec delay_from_json(const json& j);
json disturbance_to_json(const DisturbanceSpec& d);
DisturbanceSpec disturbance_from_json(const json& j);

// Sections: system, certificate, delay, disturbance_d1, disturbance_d2, initial, integration.
json scenario_to_json(const Scenario& s);
// `system` and `certificate` may be objects or paths resolved against base_dir.
// When the certificate section is absent the descriptor is synthesized with defaults.
Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir = {});

json envelope_report_to_json(const EnvelopeReport& r);

json lemma2_problem_to_json(const Lemma2Problem& p);
Lemma2Problem lemma2_problem_from_json(const json& j);
json lemma2_report_to_json(const Lemma2Report& r);
json lemma2_falsification_to_json(const Lemma2Falsification& f);

// Reads a JSON document; parse errors carry the file name and line/column.
json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const json& j);

// Columns t, c_1..c_N, Y_1..Y_N0, Z_1..Z_N0, u_1..u_m, v_1..v_m, norm_lower, norm_upper.
// Complex entries are written as re+imi.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
Trajectory read_trajectory_csv(std::istream& is);
void save_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr);
Trajectory load_trajectory_csv(const std::filesystem::path& path);

struct SweepAxis {
    std::string param;  // delay_amplitude | delay_omega | disturbance_scale
    double lo = 0.0;
    double hi = 0.0;
    int n = 1;

    bool operator==(const SweepAxis&) const = default;
};

// "param=lo:hi:n"; lo and hi may be the word delta_max, resolved later.
SweepAxis parse_sweep_axis(const std::string& text, double delta_max = std::numeric_limits<double>::quiet_NaN());
std::string sweep_axis_to_string(const SweepAxis& a);

struct RunConfig {
    std::string subcommand;  // certify | simulate | check | sweep | validate-lemma2
    std::string descriptor;
    std::string certificate;
    std::string scenario;
    std::string trajectory;
    std::string out;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::vector<std::string> sweep;  // unparsed axes, "param=lo:hi:n"
    bool oracle = false;             // simulate: use the RK4 reference engine
    bool fit = true;                 // certify: fit the existential constants
    int members = 50;                // validate-lemma2 ensemble size
    std::optional<double> falsify_eps;

    bool operator==(const RunConfig&) const = default;
};

json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const json& j);

}  // namespace specpred
