#include "specpred/iss_certifier.hpp"

#include "specpred/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace specpred {

std::vector<double> fading_memory_sup(const std::vector<double>& x, double dt, double kappa) {
    std::vector<double> s(x.size());
    if (x.empty()) return s;
    const double q = std::exp(-kappa * dt);
    s[0] = x[0];
    for (size_t j = 1; j < x.size(); ++j) s[j] = std::max(q * s[j - 1], x[j]);
    return s;
}

std::vector<double> lagged_fading_sup(const std::vector<double>& s, double dt, double kappa, double lag) {
    std::vector<double> out(s.size());
    for (size_t j = 0; j < s.size(); ++j) {
        double end = static_cast<double>(j) * dt - lag;
        long k = end <= 0.0 ? 0 : static_cast<long>(std::floor(end / dt + 1e-9));
        k = std::min<long>(k, static_cast<long>(j));
        auto gap = static_cast<double>(static_cast<long>(j) - k);
        out[j] = k == static_cast<long>(j) ? s[j] : s[static_cast<size_t>(k)] * std::exp(-kappa * gap * dt);
    }
    return out;
}

ChannelSamples sample_signals(const Trajectory& traj, const Scenario& s) {
    ChannelSamples cs;
    cs.dt = traj.dt;
    cs.t = traj.t;
    cs.x0_norm = traj.norm_lower.empty() ? 0.0 : traj.norm_lower.front();
    cs.d1.resize(traj.t.size());
    cs.d2.resize(traj.t.size());
    for (size_t j = 0; j < traj.t.size(); ++j) {
        cs.d1[j] = s.d1.is_zero() ? 0.0 : s.d1.value(traj.t[j]).norm();
        cs.d2[j] = s.d2.is_zero() ? 0.0 : s.d2.value(traj.t[j]).norm();
    }
    return cs;
}

std::vector<double> envelope_rhs(const ChannelSamples& samples, const EnvelopeTerms& terms) {
    std::vector<double> f1 = fading_memory_sup(samples.d1, samples.dt, terms.rate);
    std::vector<double> f2 =
        lagged_fading_sup(fading_memory_sup(samples.d2, samples.dt, terms.rate), samples.dt, terms.rate, terms.d2_lag);
    std::vector<double> rhs(samples.t.size());
    for (size_t j = 0; j < rhs.size(); ++j)
        rhs[j] = terms.c_x0 * std::exp(-terms.rate * samples.t[j]) * samples.x0_norm + terms.c_d1 * f1[j] +
                 terms.c_d2 * f2[j];
    return rhs;
}

namespace {

double state_lag(const Certificate& cert) {
    return std::max(cert.D0 - cert.delta_max, 0.0);
}

EnvelopeTerms terms_from(const Certificate& cert, const char* a, const char* b, const char* c, double rate,
                         double lag) {
    EnvelopeTerms t;
    t.c_x0 = cert.value(a);
    t.c_d1 = cert.value(b);
    t.c_d2 = cert.value(c);
    t.rate = rate;
    t.d2_lag = lag;
    return t;
}

std::vector<NamedConstant> constants_of(const Certificate& cert, std::initializer_list<const char*> names) {
    std::vector<NamedConstant> out;
    for (const char* n : names) out.push_back(*cert.find(n));
    return out;
}

}  // namespace

std::vector<double> state_envelope_rhs(const ChannelSamples& samples, const Certificate& cert) {
    return envelope_rhs(samples, terms_from(cert, "Cbar1", "Cbar2", "Cbar3", cert.kappa, state_lag(cert)));
}

bool EnvelopeReport::pass() const {
    return std::all_of(estimates.begin(), estimates.end(), [](const EstimateCheck& e) { return e.pass; });
}

const EstimateCheck* EnvelopeReport::find(const std::string& name) const {
    for (const auto& e : estimates)
        if (e.name == name) return &e;
    return nullptr;
}

EstimateCheck ratio_check(const std::vector<double>& observed, const std::vector<double>& bound,
                          const std::vector<double>& t, double floor) {
    EstimateCheck out;
    out.vacuous = true;
    for (size_t j = 0; j < observed.size(); ++j) {
        double r = 0.0;
        if (bound[j] > floor) {
            r = observed[j] / bound[j];
            out.vacuous = false;
        } else if (observed[j] > floor) {
            r = std::numeric_limits<double>::infinity();
            out.vacuous = false;
        }
        if (r > out.worst_ratio || (j == 0 && r >= out.worst_ratio)) {
            out.worst_ratio = r;
            out.worst_time = t[j];
        }
    }
    out.pass = out.worst_ratio <= 1.0;
    return out;
}

namespace {

std::vector<double> row_norms(const Mat& m) {
    std::vector<double> out(static_cast<size_t>(m.rows()));
    for (Eigen::Index j = 0; j < m.rows(); ++j) out[static_cast<size_t>(j)] = m.row(j).norm();
    return out;
}

double scale_floor(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (double v : a) m = std::max(m, v);
    for (double v : b) m = std::max(m, v);
    return 1e-12 * m;
}

EstimateCheck run_check(const std::string& name, const std::string& observed_name, const std::vector<double>& obs,
                        const ChannelSamples& cs, const EnvelopeTerms& terms, std::vector<NamedConstant> constants) {
    std::vector<double> rhs = envelope_rhs(cs, terms);
    EstimateCheck c = ratio_check(obs, rhs, cs.t, scale_floor(obs, rhs));
    c.name = name;
    c.observed = observed_name;
    c.terms = terms;
    c.constants = std::move(constants);
    return c;
}

}  // namespace

EnvelopeReport check_envelopes(const Trajectory& traj, const Scenario& s) {
    const Certificate& cert = s.certificate;
    for (const char* n : {"Cbar1", "Cbar2", "Cbar3", "Cbar4", "Cbar5", "Cbar6", "C1", "C2", "C3"})
        if (!cert.find(n))
            throw std::runtime_error(std::string("check_envelopes: constant ") + n +
                                     " missing (run fit_constants first)");
    ChannelSamples cs = sample_signals(traj, s);
    const double lag = state_lag(cert);
    std::vector<double> x = traj.norm_upper;
    std::vector<double> u = row_norms(traj.u);
    std::vector<double> y = row_norms(traj.Y);

    EnvelopeReport rep;
    rep.scenario = s.name;
    rep.estimates.push_back(run_check("state_iss", "norm_upper", x, cs,
                                      terms_from(cert, "Cbar1", "Cbar2", "Cbar3", cert.kappa, lag),
                                      constants_of(cert, {"Cbar1", "Cbar2", "Cbar3"})));
    rep.estimates.push_back(run_check("control_iss", "u", u, cs,
                                      terms_from(cert, "Cbar4", "Cbar5", "Cbar6", cert.kappa, 0.0),
                                      constants_of(cert, {"Cbar4", "Cbar5", "Cbar6"})));
    rep.estimates.push_back(run_check("truncated_state", "Y", y, cs,
                                      terms_from(cert, "C1", "C2", "C3", cert.sigma, lag),
                                      constants_of(cert, {"C1", "C2", "C3"})));
    rep.estimates.push_back(run_check("control_truncated_rate", "u", u, cs,
                                      terms_from(cert, "Cbar4", "Cbar5", "Cbar6", cert.sigma, 0.0),
                                      constants_of(cert, {"Cbar4", "Cbar5", "Cbar6"})));
    if (cert.find("Cbar1_assembled") && cert.find("Cbar2_assembled") && cert.find("Cbar3_assembled"))
        rep.estimates.push_back(
            run_check("state_iss_assembled", "norm_upper", x, cs,
                      terms_from(cert, "Cbar1_assembled", "Cbar2_assembled", "Cbar3_assembled", cert.kappa, lag),
                      constants_of(cert, {"Cbar1_assembled", "Cbar2_assembled", "Cbar3_assembled", "tilde_C1",
                                          "tilde_C2", "tilde_C3"})));
    return rep;
}

Channel channel_of(const Scenario& s) {
    bool x0 = std::any_of(s.x0.begin(), s.x0.end(), [](cplx z) { return z != 0.0; });
    bool d1 = !s.d1.is_zero();
    bool d2 = !s.d2.is_zero();
    int count = int(x0) + int(d1) + int(d2);
    if (count == 0) return Channel::none;
    if (count > 1) return Channel::mixed;
    return x0 ? Channel::initial : d1 ? Channel::d1 : Channel::d2;
}

const char* channel_name(Channel c) {
    switch (c) {
    case Channel::initial:
        return "initial";
    case Channel::d1:
        return "d1";
    case Channel::d2:
        return "d2";
    case Channel::mixed:
        return "mixed";
    case Channel::none:
        return "none";
    }
    return "none";
}

namespace {

// Max over the grid of obs_j / den_j, skipping samples where both are negligible.
double max_ratio(const std::vector<double>& obs, const std::vector<double>& den) {
    double floor = scale_floor(obs, den);
    double worst = 0.0;
    for (size_t j = 0; j < obs.size(); ++j) {
        if (den[j] > floor)
            worst = std::max(worst, obs[j] / den[j]);
        else if (obs[j] > floor)
            return std::numeric_limits<double>::infinity();
    }
    return worst;
}

std::vector<double> decay_weights(const std::vector<double>& t, double rate, double x0_norm) {
    std::vector<double> w(t.size());
    for (size_t j = 0; j < t.size(); ++j) w[j] = std::exp(-rate * t[j]) * x0_norm;
    return w;
}

double largest_singular(const Mat& m) {
    if (m.rows() == 1 || m.cols() == 1) return m.norm();
    Mat g = m.rows() <= m.cols() ? Mat(m * m.adjoint()) : Mat(m.adjoint() * m);
    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

struct Fit {
    double cbar[7] = {0, 0, 0, 0, 0, 0, 0};  // 1-based
    double c[4] = {0, 0, 0, 0};
    int counts[3] = {0, 0, 0};
    int basis_members = 0;
};

void fit_basis_group(const std::vector<const EnsembleMember*>& group, const Certificate& cert, Fit& fit) {
    const int N = static_cast<int>(group.size());
    const Trajectory& first = group.front()->trajectory;
    const long S = first.samples();
    for (const auto* m : group)
        if (m->trajectory.samples() != S || m->trajectory.n_modes != first.n_modes)
            throw std::invalid_argument("fit_constants: basis group members differ in shape");
    const double unit = std::sqrt(cert.riesz_lower);
    const double root_upper = std::sqrt(cert.riesz_upper);
    Mat phi(first.n_modes, N);
    Mat uy(cert.m, N);
    Mat yy(cert.n0, N);
    for (long j = 0; j < S; ++j) {
        for (int i = 0; i < N; ++i) {
            const Trajectory& tr = group[static_cast<size_t>(i)]->trajectory;
            phi.col(i) = tr.c.row(j).transpose();
            uy.col(i) = tr.u.row(j).transpose();
            yy.col(i) = tr.Y.row(j).transpose();
        }
        double t = first.t[static_cast<size_t>(j)];
        fit.cbar[1] = std::max(fit.cbar[1], root_upper * largest_singular(phi) * std::exp(cert.kappa * t) / unit);
        fit.cbar[4] = std::max(fit.cbar[4], largest_singular(uy) * std::exp(cert.sigma * t) / unit);
        fit.c[1] = std::max(fit.c[1], largest_singular(yy) * std::exp(cert.sigma * t) / unit);
    }
    fit.basis_members += N;
}

}  // namespace

FittedConstants fit_constants(const std::vector<EnsembleMember>& ensemble, const Certificate& cert,
                              const FitOptions& opts) {
    if (ensemble.empty()) throw std::invalid_argument("fit_constants: empty ensemble");
    if (!(opts.inflation >= 1.0)) throw std::invalid_argument("fit_constants: inflation must be >= 1");
    Fit fit;
    const double lag = state_lag(cert);
    std::vector<std::vector<const EnsembleMember*>> groups;

    for (const auto& mem : ensemble) {
        if (mem.basis_group >= 0) {
            if (static_cast<size_t>(mem.basis_group) >= groups.size()) groups.resize(static_cast<size_t>(mem.basis_group) + 1);
            groups[static_cast<size_t>(mem.basis_group)].push_back(&mem);
            continue;
        }
        const Trajectory& tr = mem.trajectory;
        ChannelSamples cs = sample_signals(tr, mem.scenario);
        std::vector<double> x = tr.norm_upper;
        std::vector<double> u = row_norms(tr.u);
        std::vector<double> y = row_norms(tr.Y);
        switch (channel_of(mem.scenario)) {
        case Channel::initial: {
            if (!(cs.x0_norm > 0.0)) break;
            fit.cbar[1] = std::max(fit.cbar[1], max_ratio(x, decay_weights(cs.t, cert.kappa, cs.x0_norm)));
            fit.cbar[4] = std::max(fit.cbar[4], max_ratio(u, decay_weights(cs.t, cert.sigma, cs.x0_norm)));
            fit.c[1] = std::max(fit.c[1], max_ratio(y, decay_weights(cs.t, cert.sigma, cs.x0_norm)));
            ++fit.counts[0];
            break;
        }
        case Channel::d1: {
            fit.cbar[2] = std::max(fit.cbar[2], max_ratio(x, fading_memory_sup(cs.d1, cs.dt, cert.kappa)));
            fit.cbar[5] = std::max(fit.cbar[5], max_ratio(u, fading_memory_sup(cs.d1, cs.dt, cert.sigma)));
            fit.c[2] = std::max(fit.c[2], max_ratio(y, fading_memory_sup(cs.d1, cs.dt, cert.sigma)));
            ++fit.counts[1];
            break;
        }
        case Channel::d2: {
            auto fk = fading_memory_sup(cs.d2, cs.dt, cert.kappa);
            auto fs = fading_memory_sup(cs.d2, cs.dt, cert.sigma);
            fit.cbar[3] = std::max(fit.cbar[3], max_ratio(x, lagged_fading_sup(fk, cs.dt, cert.kappa, lag)));
            fit.cbar[6] = std::max(fit.cbar[6], max_ratio(u, fs));
            fit.c[3] = std::max(fit.c[3], max_ratio(y, lagged_fading_sup(fs, cs.dt, cert.sigma, lag)));
            ++fit.counts[2];
            break;
        }
        case Channel::mixed:
        case Channel::none:
            break;
        }
    }
    for (const auto& g : groups) {
        if (g.empty()) continue;
        std::vector<const EnsembleMember*> sorted(g.size(), nullptr);
        for (const auto* m : g) {
            if (m->basis_index < 0 || static_cast<size_t>(m->basis_index) >= g.size() || sorted[static_cast<size_t>(m->basis_index)])
                throw std::invalid_argument("fit_constants: basis group indices must be 0..N-1 without repeats");
            sorted[static_cast<size_t>(m->basis_index)] = m;
        }
        fit_basis_group(sorted, cert, fit);
    }

    if (fit.counts[0] == 0 && fit.basis_members == 0)
        throw std::invalid_argument("fit_constants: ensemble has no disturbance-free initial-state members");
    if (fit.counts[1] == 0) throw std::invalid_argument("fit_constants: ensemble has no d1-only members");
    if (fit.counts[2] == 0) throw std::invalid_argument("fit_constants: ensemble has no d2-only members");

    FittedConstants out;
    const double k = opts.inflation;
    for (int i = 1; i <= 6; ++i) {
        if (!std::isfinite(fit.cbar[i]))
            throw std::runtime_error("fit_constants: unbounded ratio for Cbar" + std::to_string(i));
        out.constants.push_back({"Cbar" + std::to_string(i), k * fit.cbar[i], Provenance::fitted});
    }
    for (int i = 1; i <= 3; ++i) {
        if (!std::isfinite(fit.c[i])) throw std::runtime_error("fit_constants: unbounded ratio for C" + std::to_string(i));
        out.constants.push_back({"C" + std::to_string(i), k * fit.c[i], Provenance::fitted});
    }
    std::ostringstream desc;
    desc << "initial:" << fit.counts[0] << " d1:" << fit.counts[1] << " d2:" << fit.counts[2]
         << " basis:" << fit.basis_members << " inflation:" << k;
    out.ensemble = desc.str();
    return out;
}

void apply_fitted(Certificate& cert, const FittedConstants& fit) {
    for (const auto& c : fit.constants) cert.set(c.name, c.value, c.provenance);
    cert.ensemble = fit.ensemble;
    if (cert.lifting_be_sq && cert.lifting_abe_sq) apply_tail_constants(cert);
}

DecayFit fit_decay_rate(const Trajectory& traj, double t_start) {
    DecayFit out;
    out.t_start = t_start;
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    long n = 0;
    for (size_t j = 0; j < traj.t.size(); ++j) {
        double t = traj.t[j];
        if (t < t_start - 1e-12) continue;
        double x = traj.norm_upper[j];
        if (!(x > 1e-280)) {
            out.truncated = true;
            break;
        }
        double y = std::log(x);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        out.t_end = t;
        ++n;
    }
    if (n < 2) throw std::runtime_error("fit_decay_rate: fewer than two usable points in the fit window");
    double dn = static_cast<double>(n);
    double slope = (dn * sty - st * sy) / (dn * stt - st * st);
    out.kappa_hat = -slope;
    out.points = n;
    return out;
}

DecayFit fit_decay_rate(const Trajectory& traj, const Certificate& cert) {
    return fit_decay_rate(traj, cert.t0 + cert.D0 + cert.delta_max);
}

cplx draw_coeff(std::mt19937_64& rng, Field field) {
    std::normal_distribution<double> g(0.0, 1.0);
    if (field == Field::real) return g(rng);
    return {g(rng) / std::numbers::sqrt2, g(rng) / std::numbers::sqrt2};
}

DisturbanceSignal random_disturbance(std::mt19937_64& rng, int m, Field field, double T) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, 3);
    std::uniform_int_distribution<int> kind(0, 3);
    DisturbanceSpec spec;
    spec.dim = m;
    int terms = count(rng);
    for (int i = 0; i < terms; ++i) {
        DisturbanceTerm term;
        term.kind = static_cast<TermKind>(kind(rng));
        for (int k = 0; k < m; ++k) term.amplitude.push_back(draw_coeff(rng, field));
        switch (term.kind) {
        case TermKind::sinusoid:
            term.omega = 0.3 + 5.7 * U(rng);
            term.phase = 2.0 * std::numbers::pi * U(rng);
            break;
        case TermKind::smoothed_step:
            term.t_on = 0.6 * T * U(rng);
            term.width = 0.05 + 0.95 * U(rng);
            break;
        case TermKind::exponential_decay:
            term.rate = 0.1 + 2.9 * U(rng);
            break;
        case TermKind::pulse:
            term.t_on = 0.6 * T * U(rng);
            term.t_off = term.t_on + 0.2 + 1.8 * U(rng);
            term.width = 0.05 + 0.45 * U(rng);
            break;
        }
        spec.terms.push_back(std::move(term));
    }
    return make_disturbance(spec);
}

namespace {

DelaySignal random_delay(std::mt19937_64& rng, double D0, double delta, double T) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<int> kind(0, 2);
    DelaySpec spec;
    spec.D0 = D0;
    switch (kind(rng)) {
    case 0:
        spec.kind = DelayKind::constant;
        break;
    case 1:
        spec.kind = DelayKind::sinusoid;
        spec.amplitude = delta * U(rng);
        spec.omega = 0.5 + 5.5 * U(rng);
        spec.phase = 2.0 * std::numbers::pi * U(rng);
        break;
    default: {
        spec.kind = DelayKind::table;
        double t = 0.0;
        while (true) {
            spec.times.push_back(t);
            spec.values.push_back(D0 + delta * (2.0 * U(rng) - 1.0));
            if (t >= T) break;
            t = std::min(T, t + 0.5 + U(rng));
        }
        break;
    }
    }
    return make_delay(spec, delta);
}

}  // namespace

Scenario random_scenario(const Scenario& base, Channel channel, std::uint64_t seed, std::uint64_t stream) {
    std::mt19937_64 rng(derive_seed(seed, stream));
    const Certificate& cert = base.certificate;
    const Field field = base.system.field();
    Scenario s = base;
    s.delay = random_delay(rng, cert.D0, cert.delta_max, base.t_final);
    s.d1 = DisturbanceSignal::zero(cert.m);
    s.d2 = DisturbanceSignal::zero(cert.m);
    s.x0.clear();
    bool x0 = channel == Channel::initial || channel == Channel::mixed;
    bool d1 = channel == Channel::d1 || channel == Channel::mixed;
    bool d2 = channel == Channel::d2 || channel == Channel::mixed;
    if (x0) {
        int nm = resolved_mode_count(base);
        for (int n = 1; n <= nm; ++n) s.x0.push_back(draw_coeff(rng, field) / static_cast<double>(n));
    }
    if (d1) s.d1 = random_disturbance(rng, cert.m, field, base.t_final);
    if (d2) s.d2 = random_disturbance(rng, cert.m, field, base.t_final);
    s.name = std::string(channel_name(channel)) + "_" + std::to_string(stream);
    return s;
}

std::vector<Scenario> ensemble_scenarios(const Scenario& base, const EnsembleSpec& spec) {
    std::vector<Scenario> out;
    std::uint64_t stream = spec.stream;
    auto add = [&](Channel c, int n) {
        for (int i = 0; i < n; ++i) out.push_back(random_scenario(base, c, spec.seed, stream++));
    };
    add(Channel::initial, spec.initial);
    add(Channel::d1, spec.d1);
    add(Channel::d2, spec.d2);
    add(Channel::mixed, spec.mixed);
    return out;
}

std::vector<Scenario> basis_scenarios(const Scenario& base) {
    int nm = resolved_mode_count(base);
    std::vector<Scenario> out;
    for (int n = 0; n < nm; ++n) {
        Scenario s = base;
        s.x0.assign(static_cast<size_t>(n) + 1, 0.0);
        s.x0[static_cast<size_t>(n)] = 1.0;
        s.d1 = DisturbanceSignal::zero(base.certificate.m);
        s.d2 = DisturbanceSignal::zero(base.certificate.m);
        s.name = "basis_" + std::to_string(n + 1);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<EnsembleMember> run_ensemble(const Scenario& base, const EnsembleSpec& spec, int jobs) {
    std::vector<Scenario> scen = ensemble_scenarios(base, spec);
    const size_t random_count = scen.size();
    if (spec.basis) {
        auto b = basis_scenarios(base);
        scen.insert(scen.end(), b.begin(), b.end());
    }
    std::vector<EnsembleMember> out(scen.size());
    parallel_for(scen.size(), jobs, [&](size_t i) {
        out[i].scenario = scen[i];
        out[i].trajectory = simulate(scen[i]);
        if (i >= random_count) {
            out[i].basis_group = 0;
            out[i].basis_index = static_cast<int>(i - random_count);
        }
    });
    return out;
}

namespace {

DisturbanceSignal term_signal(int m, std::vector<DisturbanceTerm> terms) {
    DisturbanceSpec s;
    s.dim = m;
    s.terms = std::move(terms);
    return make_disturbance(s);
}

}  // namespace

std::vector<Scenario> builtin_scenarios(const Certificate& cert, const SystemDescriptor& desc) {
    Scenario base;
    base.system = desc;
    base.certificate = cert;
    base.x0 = {1.0, 0.5, -0.25};
    base.dt = 1e-3;
    base.t_final = 10.0;
    base.d1 = DisturbanceSignal::zero(cert.m);
    base.d2 = DisturbanceSignal::zero(cert.m);
    const DelaySignal constant = DelaySignal::constant(cert.D0);
    const DelaySignal sine = DelaySignal::sinusoid(cert.D0, cert.delta_max, 3.0);

    DisturbanceTerm s1;
    s1.kind = TermKind::sinusoid;
    s1.amplitude.assign(static_cast<size_t>(cert.m), 0.5);
    s1.omega = 2.0;
    DisturbanceTerm p1;
    p1.kind = TermKind::pulse;
    p1.amplitude.assign(static_cast<size_t>(cert.m), 1.0);
    p1.t_on = 4.0;
    p1.t_off = 5.0;
    p1.width = 0.3;
    DisturbanceTerm p2;
    p2.kind = TermKind::pulse;
    p2.amplitude.assign(static_cast<size_t>(cert.m), 1.0);
    p2.t_on = 1.0;
    p2.t_off = 3.0;
    p2.width = 0.3;
    DisturbanceTerm s2;
    s2.kind = TermKind::sinusoid;
    s2.amplitude.assign(static_cast<size_t>(cert.m), 0.2);
    s2.omega = 1.5;
    s2.phase = 0.4;
    const DisturbanceSignal d1 = term_signal(cert.m, {s1, p1});
    const DisturbanceSignal d2 = term_signal(cert.m, {p2, s2});

    std::vector<Scenario> out(5, base);
    out[0].name = "constant_delay_free";
    out[0].delay = constant;
    out[1].name = "sinusoid_delay_free";
    out[1].delay = sine;
    out[2].name = "constant_delay_d1";
    out[2].delay = constant;
    out[2].d1 = d1;
    out[3].name = "sinusoid_delay_d2";
    out[3].delay = sine;
    out[3].d2 = d2;
    out[4].name = "sinusoid_delay_d1_d2";
    out[4].delay = sine;
    out[4].d1 = d1;
    out[4].d2 = d2;
    return out;
}

Certificate certify_with_fit(const SystemDescriptor& desc, const CertifyOptions& opts) {
    Certificate cert = synthesize(desc, opts.synthesis);
    Scenario base;
    base.system = desc;
    base.certificate = cert;
    base.delay = DelaySignal::sinusoid(cert.D0, cert.delta_max, 3.0);
    base.d1 = DisturbanceSignal::zero(cert.m);
    base.d2 = DisturbanceSignal::zero(cert.m);
    base.dt = opts.dt;
    base.t_final = opts.t_final;
    base.name = "fit_base";
    std::vector<EnsembleMember> ens = run_ensemble(base, opts.ensemble, opts.jobs);
    FittedConstants fit = fit_constants(ens, cert);
    std::ostringstream desc_text;
    desc_text << fit.ensemble << " seed:" << opts.ensemble.seed << " streams:" << opts.ensemble.stream << ".."
              << opts.ensemble.stream + static_cast<std::uint64_t>(opts.ensemble.initial + opts.ensemble.d1 +
                                                                    opts.ensemble.d2 + opts.ensemble.mixed)
              << " dt:" << opts.dt << " T:" << opts.t_final;
    fit.ensemble = desc_text.str();
    apply_fitted(cert, fit);
    return cert;
}

}  // namespace specpred
