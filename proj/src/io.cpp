#include "specpred/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace specpred {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto res = std::from_chars(first, s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + s + "'");
    return x;
}

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw std::invalid_argument(where + ": missing key '" + key + "'");
    return *it;
}

double number(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            return parse_double(j.get<std::string>());
        } catch (const std::invalid_argument&) {
        }
    }
    throw std::invalid_argument(where + ": expected a number");
}

double get_number(const json& j, const char* key, const std::string& where) {
    return number(require(j, key, where), where + "." + key);
}

double get_number_or(const json& j, const char* key, double fallback, const std::string& where) {
    auto it = j.find(key);
    return it == j.end() ? fallback : number(*it, where + "." + key);
}

int get_int_or(const json& j, const char* key, int fallback, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) throw std::invalid_argument(where + "." + key + ": expected an integer");
    return it->get<int>();
}

std::string get_string(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_string()) throw std::invalid_argument(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

// Non-finite values are stored as strings so documents stay valid JSON.
json num(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

std::vector<cplx> complex_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw std::invalid_argument(where + ": expected an array");
    std::vector<cplx> out;
    for (size_t i = 0; i < j.size(); ++i) out.push_back(complex_from_json(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

json complex_list_json(const std::vector<cplx>& v) {
    json a = json::array();
    for (cplx z : v) a.push_back(complex_to_json(z));
    return a;
}

std::vector<double> double_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw std::invalid_argument(where + ": expected an array");
    std::vector<double> out;
    for (size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

json double_list_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

const char* provenance_name(Provenance p) {
    return p == Provenance::exact ? "exact" : "fitted";
}

Provenance provenance_from(const std::string& s, const std::string& where) {
    if (s == "exact") return Provenance::exact;
    if (s == "fitted") return Provenance::fitted;
    throw std::invalid_argument(where + ": provenance must be 'exact' or 'fitted'");
}

json constants_json(const std::vector<NamedConstant>& cs) {
    json a = json::array();
    for (const auto& c : cs) a.push_back({{"name", c.name}, {"value", num(c.value)}, {"provenance", provenance_name(c.provenance)}});
    return a;
}

}  // namespace

json complex_to_json(cplx z) {
    if (z.imag() == 0.0) return num(z.real());
    return json::array({num(z.real()), num(z.imag())});
}

cplx complex_from_json(const json& j, const std::string& where) {
    if (j.is_array()) {
        if (j.size() != 2) throw std::invalid_argument(where + ": complex numbers are [re, im]");
        return {number(j[0], where), number(j[1], where)};
    }
    return number(j, where);
}

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
        rows.push_back(row);
    }
    return rows;
}

Mat matrix_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw std::invalid_argument(where + ": expected an array of rows");
    if (j.empty()) return Mat(0, 0);
    const size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw std::invalid_argument(where + ": rows must be arrays of equal length");
        for (size_t k = 0; k < cols; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                complex_from_json(j[i][k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    }
    return m;
}

json descriptor_to_json(const SystemDescriptor& d) {
    json j;
    if (d.kind() == DescriptorKind::reaction_diffusion) {
        j["kind"] = "reaction_diffusion";
        j["c"] = d.reaction();
        j["m"] = d.num_inputs();
        j["riesz_lower"] = d.riesz_lower();
        j["riesz_upper"] = d.riesz_upper();
        j["quadrature_panels"] = d.quadrature_panels();
        return j;
    }
    j["kind"] = "explicit";
    j["m"] = d.num_inputs();
    j["riesz_lower"] = d.riesz_lower();
    j["riesz_upper"] = d.riesz_upper();
    j["explicit_eigenvalues"] = complex_list_json(d.explicit_eigenvalues());
    json b = json::array();
    for (const auto& row : d.explicit_b()) b.push_back(complex_list_json(row));
    j["explicit_b"] = b;
    if (d.lifting_norms()) {
        j["lifting_be_sq"] = double_list_json(d.lifting_norms()->be_sq);
        j["lifting_abe_sq"] = double_list_json(d.lifting_norms()->abe_sq);
    }
    return j;
}

SystemDescriptor descriptor_from_json(const json& j) {
    const std::string w = "descriptor";
    std::string kind = get_string(j, "kind", w);
    if (kind == "reaction_diffusion") {
        if (get_int_or(j, "m", 1, w) != 1) throw std::invalid_argument(w + ".m: the reaction-diffusion plant has one input");
        if (get_number_or(j, "riesz_lower", 1.0, w) != 1.0 || get_number_or(j, "riesz_upper", 1.0, w) != 1.0)
            throw std::invalid_argument(w + ": the reaction-diffusion basis is orthonormal (riesz bounds 1)");
        return SystemDescriptor::reaction_diffusion(get_number(j, "c", w), get_int_or(j, "quadrature_panels", 4096, w));
    }
    if (kind != "explicit") throw std::invalid_argument(w + ".kind: expected 'reaction_diffusion' or 'explicit'");
    std::vector<cplx> eig = complex_list(require(j, "explicit_eigenvalues", w), w + ".explicit_eigenvalues");
    const json& bj = require(j, "explicit_b", w);
    if (!bj.is_array()) throw std::invalid_argument(w + ".explicit_b: expected an array of rows");
    std::vector<std::vector<cplx>> b;
    for (size_t i = 0; i < bj.size(); ++i) b.push_back(complex_list(bj[i], w + ".explicit_b[" + std::to_string(i) + "]"));
    if (j.contains("m") && !b.empty() && static_cast<int>(b[0].size()) != j["m"].get<int>())
        throw std::invalid_argument(w + ".m: does not match the width of explicit_b");
    std::optional<LiftingNorms> lifting;
    if (j.contains("lifting_be_sq") || j.contains("lifting_abe_sq")) {
        LiftingNorms ln;
        ln.be_sq = double_list(require(j, "lifting_be_sq", w), w + ".lifting_be_sq");
        ln.abe_sq = double_list(require(j, "lifting_abe_sq", w), w + ".lifting_abe_sq");
        lifting = ln;
    }
    return SystemDescriptor::explicit_list(std::move(eig), std::move(b), get_number(j, "riesz_lower", w),
                                           get_number(j, "riesz_upper", w), lifting);
}

json certificate_to_json(const Certificate& c) {
    json j;
    j["n0"] = c.n0;
    j["m"] = c.m;
    j["field"] = c.field == Field::real ? "real" : "complex";
    j["D0"] = c.D0;
    j["t0"] = c.t0;
    j["alpha"] = c.alpha;
    j["xi"] = c.xi;
    j["xi_exact"] = c.xi_exact;
    j["riesz_lower"] = c.riesz_lower;
    j["riesz_upper"] = c.riesz_upper;
    j["A"] = matrix_to_json(c.A);
    j["B"] = matrix_to_json(c.B);
    j["K"] = matrix_to_json(c.K);
    j["A_cl"] = matrix_to_json(c.A_cl);
    j["target_poles"] = complex_list_json(c.target_poles);
    j["lambda_fraction"] = c.lambda_fraction;
    j["M_lambda"] = c.M_lambda;
    j["lambda"] = c.lambda;
    j["T_check"] = c.T_check;
    j["norm_A_cl"] = c.norm_A_cl;
    j["norm_BK"] = c.norm_BK;
    j["delta_star"] = num(c.delta_star);
    j["delta_margin"] = c.delta_margin;
    j["delta_max"] = c.delta_max;
    j["delta_degenerate"] = c.delta_degenerate;
    j["sigma"] = c.sigma;
    j["sigma_delta_tilde"] = c.sigma_delta_tilde;
    j["kappa_fraction"] = c.kappa_fraction;
    j["kappa"] = c.kappa;
    j["epsilon"] = c.epsilon;
    j["lifting_be_sq"] = c.lifting_be_sq ? json(*c.lifting_be_sq) : json(nullptr);
    j["lifting_abe_sq"] = c.lifting_abe_sq ? json(*c.lifting_abe_sq) : json(nullptr);
    j["constants"] = constants_json(c.constants);
    j["ensemble"] = c.ensemble;
    return j;
}

Certificate certificate_from_json(const json& j) {
    const std::string w = "certificate";
    Certificate c;
    c.n0 = require(j, "n0", w).get<int>();
    c.m = require(j, "m", w).get<int>();
    std::string field = get_string(j, "field", w);
    if (field != "real" && field != "complex") throw std::invalid_argument(w + ".field: expected 'real' or 'complex'");
    c.field = field == "real" ? Field::real : Field::complex;
    c.D0 = get_number(j, "D0", w);
    c.t0 = get_number(j, "t0", w);
    c.alpha = get_number(j, "alpha", w);
    c.xi = get_number(j, "xi", w);
    c.xi_exact = require(j, "xi_exact", w).get<bool>();
    c.riesz_lower = get_number(j, "riesz_lower", w);
    c.riesz_upper = get_number(j, "riesz_upper", w);
    c.A = matrix_from_json(require(j, "A", w), w + ".A");
    c.B = matrix_from_json(require(j, "B", w), w + ".B");
    c.K = matrix_from_json(require(j, "K", w), w + ".K");
    c.A_cl = matrix_from_json(require(j, "A_cl", w), w + ".A_cl");
    c.target_poles = complex_list(require(j, "target_poles", w), w + ".target_poles");
    c.lambda_fraction = get_number(j, "lambda_fraction", w);
    c.M_lambda = get_number(j, "M_lambda", w);
    c.lambda = get_number(j, "lambda", w);
    c.T_check = get_number(j, "T_check", w);
    c.norm_A_cl = get_number(j, "norm_A_cl", w);
    c.norm_BK = get_number(j, "norm_BK", w);
    c.delta_star = get_number(j, "delta_star", w);
    c.delta_margin = get_number(j, "delta_margin", w);
    c.delta_max = get_number(j, "delta_max", w);
    c.delta_degenerate = require(j, "delta_degenerate", w).get<bool>();
    c.sigma = get_number(j, "sigma", w);
    c.sigma_delta_tilde = get_number(j, "sigma_delta_tilde", w);
    c.kappa_fraction = get_number(j, "kappa_fraction", w);
    c.kappa = get_number(j, "kappa", w);
    c.epsilon = get_number(j, "epsilon", w);
    if (j.contains("lifting_be_sq") && !j["lifting_be_sq"].is_null())
        c.lifting_be_sq = number(j["lifting_be_sq"], w + ".lifting_be_sq");
    if (j.contains("lifting_abe_sq") && !j["lifting_abe_sq"].is_null())
        c.lifting_abe_sq = number(j["lifting_abe_sq"], w + ".lifting_abe_sq");
    const json& cs = require(j, "constants", w);
    if (!cs.is_array()) throw std::invalid_argument(w + ".constants: expected an array");
    for (size_t i = 0; i < cs.size(); ++i) {
        std::string wi = w + ".constants[" + std::to_string(i) + "]";
        NamedConstant nc;
        nc.name = get_string(cs[i], "name", wi);
        nc.value = get_number(cs[i], "value", wi);
        nc.provenance = provenance_from(get_string(cs[i], "provenance", wi), wi);
        c.constants.push_back(nc);
    }
    if (j.contains("ensemble")) c.ensemble = j["ensemble"].get<std::string>();
    if (c.A.rows() != c.n0 || c.K.cols() != c.n0 || c.K.rows() != c.m || c.B.cols() != c.m)
        throw std::invalid_argument(w + ": matrix shapes do not match n0 and m");
    return c;
}

json delay_to_json(const DelaySpec& d) {
    json j;
    switch (d.kind) {
    case DelayKind::constant:
        j["kind"] = "constant";
        break;
    case DelayKind::sinusoid:
        j["kind"] = "sinusoid";
        break;
    case DelayKind::table:
        j["kind"] = "table";
        break;
    }
    j["D0"] = d.D0;
    j["amplitude"] = d.amplitude;
    j["omega"] = d.omega;
    j["phase"] = d.phase;
    j["times"] = d.times;
    j["values"] = d.values;
    return j;
}

DelaySpec delay_from_json(const json& j) {
    const std::string w = "delay";
    DelaySpec d;
    std::string kind = get_string(j, "kind", w);
    if (kind == "constant")
        d.kind = DelayKind::constant;
    else if (kind == "sinusoid")
        d.kind = DelayKind::sinusoid;
    else if (kind == "table")
        d.kind = DelayKind::table;
    else
        throw std::invalid_argument(w + ".kind: expected 'constant', 'sinusoid' or 'table'");
    d.D0 = get_number(j, "D0", w);
    d.amplitude = get_number_or(j, "amplitude", 0.0, w);
    d.omega = get_number_or(j, "omega", 1.0, w);
    d.phase = get_number_or(j, "phase", 0.0, w);
    if (j.contains("times")) d.times = double_list(j["times"], w + ".times");
    if (j.contains("values")) d.values = double_list(j["values"], w + ".values");
    return d;
}

namespace {

const char* term_kind_name(TermKind k) {
    switch (k) {
    case TermKind::sinusoid:
        return "sinusoid";
    case TermKind::smoothed_step:
        return "smoothed_step";
    case TermKind::exponential_decay:
        return "exponential_decay";
    case TermKind::pulse:
        return "pulse";
    }
    return "sinusoid";
}

TermKind term_kind_from(const std::string& s, const std::string& where) {
    if (s == "sinusoid") return TermKind::sinusoid;
    if (s == "smoothed_step") return TermKind::smoothed_step;
    if (s == "exponential_decay") return TermKind::exponential_decay;
    if (s == "pulse") return TermKind::pulse;
    throw std::invalid_argument(where + ": unknown disturbance kind '" + s + "'");
}

}  // namespace

json disturbance_to_json(const DisturbanceSpec& d) {
    json terms = json::array();
    for (const auto& t : d.terms)
        terms.push_back({{"kind", term_kind_name(t.kind)},
                         {"amplitude", complex_list_json(t.amplitude)},
                         {"omega", t.omega},
                         {"phase", t.phase},
                         {"t_on", t.t_on},
                         {"t_off", t.t_off},
                         {"width", t.width},
                         {"rate", t.rate}});
    return {{"dim", d.dim}, {"terms", terms}};
}

DisturbanceSpec disturbance_from_json(const json& j) {
    const std::string w = "disturbance";
    DisturbanceSpec d;
    d.dim = get_int_or(j, "dim", 1, w);
    if (j.contains("terms")) {
        const json& ts = j["terms"];
        if (!ts.is_array()) throw std::invalid_argument(w + ".terms: expected an array");
        for (size_t i = 0; i < ts.size(); ++i) {
            std::string wi = w + ".terms[" + std::to_string(i) + "]";
            DisturbanceTerm t;
            t.kind = term_kind_from(get_string(ts[i], "kind", wi), wi);
            t.amplitude = complex_list(require(ts[i], "amplitude", wi), wi + ".amplitude");
            t.omega = get_number_or(ts[i], "omega", t.omega, wi);
            t.phase = get_number_or(ts[i], "phase", t.phase, wi);
            t.t_on = get_number_or(ts[i], "t_on", t.t_on, wi);
            t.t_off = get_number_or(ts[i], "t_off", t.t_off, wi);
            t.width = get_number_or(ts[i], "width", t.width, wi);
            t.rate = get_number_or(ts[i], "rate", t.rate, wi);
            d.terms.push_back(std::move(t));
        }
    }
    return d;
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["system"] = descriptor_to_json(s.system);
    j["certificate"] = certificate_to_json(s.certificate);
    j["delay"] = delay_to_json(s.delay.spec());
    j["disturbance_d1"] = disturbance_to_json(s.d1.spec());
    j["disturbance_d2"] = disturbance_to_json(s.d2.spec());
    j["initial"] = complex_list_json(s.x0);
    j["integration"] = {{"dt", s.dt},
                        {"t_final", s.t_final},
                        {"controller_dt", s.controller_dt},
                        {"n_modes", s.n_modes},
                        {"max_iters", s.max_iters},
                        {"tol", s.tol},
                        {"certified", s.certified},
                        {"max_samples", s.max_samples}};
    return j;
}

namespace {

json section(const json& j, const char* key, const std::filesystem::path& base_dir) {
    const json& v = require(j, key, "scenario");
    if (v.is_string()) {
        std::filesystem::path p = v.get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return load_json_file(p);
    }
    return v;
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
    const std::string w = "scenario";
    Scenario s;
    if (j.contains("name")) s.name = j["name"].get<std::string>();
    s.system = descriptor_from_json(section(j, "system", base_dir));
    s.certificate = j.contains("certificate") ? certificate_from_json(section(j, "certificate", base_dir))
                                              : synthesize(s.system);
    if (j.contains("integration")) {
        const json& in = j["integration"];
        const std::string wi = w + ".integration";
        s.dt = get_number_or(in, "dt", s.dt, wi);
        s.t_final = get_number_or(in, "t_final", s.t_final, wi);
        s.controller_dt = get_number_or(in, "controller_dt", s.controller_dt, wi);
        s.n_modes = get_int_or(in, "n_modes", s.n_modes, wi);
        s.max_iters = get_int_or(in, "max_iters", s.max_iters, wi);
        s.tol = get_number_or(in, "tol", s.tol, wi);
        if (in.contains("certified")) s.certified = in["certified"].get<bool>();
        if (in.contains("max_samples")) s.max_samples = in["max_samples"].get<long>();
    }
    if (j.contains("delay")) {
        json dj = j["delay"];
        // Amplitudes and D0 may name the certificate's values.
        if (dj.contains("amplitude") && dj["amplitude"] == "delta_max") dj["amplitude"] = s.certificate.delta_max;
        if (!dj.contains("D0") || dj["D0"] == "D0") dj["D0"] = s.certificate.D0;
        DelaySpec spec = delay_from_json(dj);
        s.delay = make_delay(spec, s.certified ? std::optional<double>(s.certificate.delta_max) : std::nullopt);
    } else {
        s.delay = DelaySignal::constant(s.certificate.D0);
    }
    auto dist = [&](const char* key) {
        if (!j.contains(key)) return DisturbanceSignal::zero(s.certificate.m);
        json dj = j[key];
        if (!dj.contains("dim")) dj["dim"] = s.certificate.m;
        return make_disturbance(disturbance_from_json(dj));
    };
    s.d1 = dist("disturbance_d1");
    s.d2 = dist("disturbance_d2");
    if (j.contains("initial")) s.x0 = complex_list(j["initial"], w + ".initial");
    return s;
}

json envelope_report_to_json(const EnvelopeReport& r) {
    json est = json::array();
    for (const auto& e : r.estimates)
        est.push_back({{"name", e.name},
                       {"observed", e.observed},
                       {"pass", e.pass},
                       {"vacuous", e.vacuous},
                       {"worst_ratio", num(e.worst_ratio)},
                       {"worst_time", e.worst_time},
                       {"rate", e.terms.rate},
                       {"d2_lag", e.terms.d2_lag},
                       {"constants", constants_json(e.constants)}});
    return {{"scenario", r.scenario}, {"pass", r.pass()}, {"estimates", est}};
}

namespace {

const char* modulation_kind_name(ModulationKind k) {
    switch (k) {
    case ModulationKind::constant:
        return "constant";
    case ModulationKind::sinusoid:
        return "sinusoid";
    case ModulationKind::smoothed_square:
        return "smoothed_square";
    }
    return "constant";
}

json modulation_json(const Modulation& m) {
    return {{"kind", modulation_kind_name(m.kind)},
            {"level", m.level},
            {"omega", m.omega},
            {"phase", m.phase},
            {"sharpness", m.sharpness}};
}

Modulation modulation_from(const json& j, const std::string& w) {
    Modulation m;
    std::string kind = get_string(j, "kind", w);
    if (kind == "constant")
        m.kind = ModulationKind::constant;
    else if (kind == "sinusoid")
        m.kind = ModulationKind::sinusoid;
    else if (kind == "smoothed_square")
        m.kind = ModulationKind::smoothed_square;
    else
        throw std::invalid_argument(w + ".kind: expected 'constant', 'sinusoid' or 'smoothed_square'");
    m.level = get_number_or(j, "level", m.level, w);
    m.omega = get_number_or(j, "omega", m.omega, w);
    m.phase = get_number_or(j, "phase", m.phase, w);
    m.sharpness = get_number_or(j, "sharpness", m.sharpness, w);
    return m;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_to_json(v(i)));
    return a;
}

Vec vec_from(const json& j, const std::string& w) {
    std::vector<cplx> v = complex_list(j, w);
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

}  // namespace

json lemma2_problem_to_json(const Lemma2Problem& p) {
    json j;
    j["A"] = matrix_to_json(p.A);
    j["C"] = matrix_to_json(p.C);
    j["r"] = p.r;
    j["eps"] = p.eps;
    j["M_lambda"] = p.M_lambda ? json(*p.M_lambda) : json(nullptr);
    j["lambda"] = p.lambda ? json(*p.lambda) : json(nullptr);
    j["d"] = modulation_json(p.d);
    j["q"] = modulation_json(p.q);
    j["p"] = disturbance_to_json(p.p.spec());
    j["x0"] = {{"offset", vec_json(p.x0.offset)},
               {"amplitude", vec_json(p.x0.amplitude)},
               {"omega", p.x0.omega},
               {"phase", p.x0.phase}};
    j["dt"] = p.dt;
    j["t_final"] = p.t_final;
    return j;
}

Lemma2Problem lemma2_problem_from_json(const json& j) {
    const std::string w = "lemma2";
    Lemma2Problem p;
    p.A = matrix_from_json(require(j, "A", w), w + ".A");
    p.C = matrix_from_json(require(j, "C", w), w + ".C");
    p.r = get_number(j, "r", w);
    p.eps = get_number(j, "eps", w);
    if (j.contains("M_lambda") && !j["M_lambda"].is_null()) p.M_lambda = number(j["M_lambda"], w + ".M_lambda");
    if (j.contains("lambda") && !j["lambda"].is_null()) p.lambda = number(j["lambda"], w + ".lambda");
    if (j.contains("d")) p.d = modulation_from(j["d"], w + ".d");
    if (j.contains("q")) p.q = modulation_from(j["q"], w + ".q");
    const int n = static_cast<int>(p.A.rows());
    if (j.contains("p")) {
        json pj = j["p"];
        if (!pj.contains("dim")) pj["dim"] = n;
        p.p = make_disturbance(disturbance_from_json(pj));
    } else {
        p.p = DisturbanceSignal::zero(n);
    }
    p.x0.offset = Vec::Zero(n);
    if (j.contains("x0")) {
        const json& x = j["x0"];
        if (x.contains("offset")) p.x0.offset = vec_from(x["offset"], w + ".x0.offset");
        if (x.contains("amplitude")) p.x0.amplitude = vec_from(x["amplitude"], w + ".x0.amplitude");
        p.x0.omega = get_number_or(x, "omega", 0.0, w + ".x0");
        p.x0.phase = get_number_or(x, "phase", 0.0, w + ".x0");
    }
    p.dt = get_number_or(j, "dt", p.dt, w);
    p.t_final = get_number_or(j, "t_final", p.t_final, w);
    return p;
}

json lemma2_report_to_json(const Lemma2Report& r) {
    return {{"M_lambda", r.rates.M_lambda},
            {"lambda", r.rates.lambda},
            {"norm_A", r.rates.norm_A},
            {"norm_C", r.rates.norm_C},
            {"small_gain_lhs", r.rates.small_gain_lhs},
            {"sigma", r.sigma.sigma},
            {"delta_tilde", r.sigma.delta_tilde},
            {"M", num(r.M)},
            {"N", num(r.N)},
            {"members", r.members},
            {"initial_members", r.initial_members},
            {"disturbance_members", r.disturbance_members},
            {"max_growth_rate", num(r.max_growth_rate)},
            {"pass", r.pass()},
            {"verdict", r.pass() ? "not falsified by this ensemble" : "falsified"}};
}

json lemma2_falsification_to_json(const Lemma2Falsification& f) {
    return {{"worst_ratio", num(f.worst_ratio)},
            {"max_growth_rate", num(f.max_growth_rate)},
            {"worst_member", f.worst_member},
            {"violated", f.violated()}};
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void save_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

namespace {

std::string format_complex(cplx z) {
    if (z.imag() == 0.0) return format_double(z.real());
    std::string im = format_double(z.imag());
    if (im[0] != '-') im = "+" + im;
    return format_double(z.real()) + im + "i";
}

cplx parse_complex(const std::string& s) {
    if (s.empty() || s.back() != 'i') return parse_double(s);
    // Split at the sign that starts the imaginary part (not an exponent sign).
    for (size_t k = s.size() - 1; k > 0; --k) {
        char c = s[k];
        if ((c == '+' || c == '-') && s[k - 1] != 'e' && s[k - 1] != 'E')
            return {parse_double(s.substr(0, k)), parse_double(s.substr(k, s.size() - k - 1))};
    }
    return {0.0, parse_double(s.substr(0, s.size() - 1))};
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) {
        size_t a = cur.find_first_not_of(" \t\r");
        size_t b = cur.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : cur.substr(a, b - a + 1));
    }
    return out;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << 't';
    for (int n = 1; n <= tr.c.cols(); ++n) os << ",c_" << n;
    for (int n = 1; n <= tr.Y.cols(); ++n) os << ",Y_" << n;
    for (int n = 1; n <= tr.Z.cols(); ++n) os << ",Z_" << n;
    for (int k = 1; k <= tr.u.cols(); ++k) os << ",u_" << k;
    for (int k = 1; k <= tr.v.cols(); ++k) os << ",v_" << k;
    os << ",norm_lower,norm_upper\n";
    for (long j = 0; j < tr.samples(); ++j) {
        os << format_double(tr.t[static_cast<size_t>(j)]);
        for (const Mat* m : {&tr.c, &tr.Y, &tr.Z, &tr.u, &tr.v})
            for (Eigen::Index k = 0; k < m->cols(); ++k) os << ',' << format_complex((*m)(j, k));
        os << ',' << format_double(tr.norm_lower[static_cast<size_t>(j)]) << ','
           << format_double(tr.norm_upper[static_cast<size_t>(j)]) << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("trajectory csv: empty input");
    std::vector<std::string> head = split_csv(line);
    auto count = [&](const std::string& prefix) {
        int c = 0;
        for (const auto& h : head)
            if (h.rfind(prefix, 0) == 0) ++c;
        return c;
    };
    Trajectory tr;
    tr.n_modes = count("c_");
    tr.n0 = count("Y_");
    tr.m = count("u_");
    const size_t cols = 1 + static_cast<size_t>(tr.n_modes + 2 * tr.n0 + 2 * tr.m) + 2;
    if (head.empty() || head[0] != "t" || head.size() != cols || count("Z_") != tr.n0 || count("v_") != tr.m ||
        head[cols - 2] != "norm_lower" || head[cols - 1] != "norm_upper")
        throw std::invalid_argument("trajectory csv: unexpected header");
    std::vector<std::vector<std::string>> rows;
    std::vector<long> linenos;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_csv(line));
        linenos.push_back(lineno);
        if (rows.back().size() != cols)
            throw std::invalid_argument("trajectory csv: line " + std::to_string(lineno) + " has " +
                                        std::to_string(rows.back().size()) + " fields, expected " +
                                        std::to_string(cols));
    }
    const auto S = static_cast<Eigen::Index>(rows.size());
    tr.t.resize(rows.size());
    tr.c.resize(S, tr.n_modes);
    tr.Y.resize(S, tr.n0);
    tr.Z.resize(S, tr.n0);
    tr.u.resize(S, tr.m);
    tr.v.resize(S, tr.m);
    tr.norm_lower.resize(rows.size());
    tr.norm_upper.resize(rows.size());
    for (Eigen::Index j = 0; j < S; ++j) {
        const auto& r = rows[static_cast<size_t>(j)];
        try {
            size_t k = 0;
            tr.t[static_cast<size_t>(j)] = parse_double(r[k++]);
            for (Mat* m : {&tr.c, &tr.Y, &tr.Z, &tr.u, &tr.v})
                for (Eigen::Index i = 0; i < m->cols(); ++i) (*m)(j, i) = parse_complex(r[k++]);
            tr.norm_lower[static_cast<size_t>(j)] = parse_double(r[k++]);
            tr.norm_upper[static_cast<size_t>(j)] = parse_double(r[k++]);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("trajectory csv: line " + std::to_string(linenos[static_cast<size_t>(j)]) + ": " + e.what());
        }
    }
    if (tr.t.size() >= 2) tr.dt = tr.t[1] - tr.t[0];
    return tr;
}

void save_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_trajectory_csv(out, tr);
}

Trajectory load_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_trajectory_csv(in);
}

SweepAxis parse_sweep_axis(const std::string& text, double delta_max) {
    auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("sweep: expected param=lo:hi:n, got '" + text + "'");
    SweepAxis a;
    a.param = text.substr(0, eq);
    if (a.param != "delay_amplitude" && a.param != "delay_omega" && a.param != "disturbance_scale")
        throw std::invalid_argument("sweep: unknown parameter '" + a.param +
                                    "' (delay_amplitude, delay_omega, disturbance_scale)");
    std::string rest = text.substr(eq + 1);
    auto c1 = rest.find(':');
    auto c2 = c1 == std::string::npos ? std::string::npos : rest.find(':', c1 + 1);
    if (c2 == std::string::npos) throw std::invalid_argument("sweep: expected param=lo:hi:n, got '" + text + "'");
    auto value = [&](const std::string& s) {
        if (s == "delta_max") {
            if (std::isnan(delta_max)) throw std::invalid_argument("sweep: delta_max needs a certificate");
            return delta_max;
        }
        return parse_double(s);
    };
    a.lo = value(rest.substr(0, c1));
    a.hi = value(rest.substr(c1 + 1, c2 - c1 - 1));
    std::string n = rest.substr(c2 + 1);
    int count = 0;
    auto res = std::from_chars(n.data(), n.data() + n.size(), count);
    if (res.ec != std::errc() || res.ptr != n.data() + n.size() || count < 1)
        throw std::invalid_argument("sweep: point count must be a positive integer in '" + text + "'");
    a.n = count;
    if (a.n == 1 && a.lo != a.hi) throw std::invalid_argument("sweep: a single point needs lo == hi");
    return a;
}

std::string sweep_axis_to_string(const SweepAxis& a) {
    return a.param + "=" + format_double(a.lo) + ":" + format_double(a.hi) + ":" + std::to_string(a.n);
}

json run_config_to_json(const RunConfig& c) {
    return {{"subcommand", c.subcommand}, {"descriptor", c.descriptor}, {"certificate", c.certificate},
            {"scenario", c.scenario},     {"trajectory", c.trajectory}, {"out", c.out},
            {"seed", c.seed},             {"jobs", c.jobs},             {"sweep", c.sweep},
            {"oracle", c.oracle},         {"fit", c.fit},               {"members", c.members},
            {"falsify_eps", c.falsify_eps ? json(*c.falsify_eps) : json(nullptr)}};
}

RunConfig run_config_from_json(const json& j) {
    const std::string w = "config";
    RunConfig c;
    c.subcommand = get_string(j, "subcommand", w);
    auto str = [&](const char* key) { return j.contains(key) ? j[key].get<std::string>() : std::string(); };
    c.descriptor = str("descriptor");
    c.certificate = str("certificate");
    c.scenario = str("scenario");
    c.trajectory = str("trajectory");
    c.out = str("out");
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.jobs = get_int_or(j, "jobs", 1, w);
    if (j.contains("sweep")) c.sweep = j["sweep"].get<std::vector<std::string>>();
    if (j.contains("oracle")) c.oracle = j["oracle"].get<bool>();
    if (j.contains("fit")) c.fit = j["fit"].get<bool>();
    c.members = get_int_or(j, "members", c.members, w);
    if (j.contains("falsify_eps") && !j["falsify_eps"].is_null())
        c.falsify_eps = number(j["falsify_eps"], w + ".falsify_eps");
    return c;
}

}  // namespace specpred
