#include "specpred/lemma2.hpp"

#include "specpred/iss_certifier.hpp"
#include "specpred/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace specpred {

double Modulation::value(double t) const {
    switch (kind) {
    case ModulationKind::constant:
        return level;
    case ModulationKind::sinusoid:
        return level * std::sin(omega * t + phase);
    case ModulationKind::smoothed_square:
        return level * std::tanh(sharpness * std::sin(omega * t + phase));
    }
    return 0.0;
}

double Modulation::max_abs() const {
    return std::abs(level);
}

Modulation Modulation::constant(double v) {
    Modulation m;
    m.level = v;
    return m;
}

Modulation Modulation::sinusoid(double amplitude, double omega, double phase) {
    Modulation m;
    m.kind = ModulationKind::sinusoid;
    m.level = amplitude;
    m.omega = omega;
    m.phase = phase;
    return m;
}

Modulation Modulation::smoothed_square(double amplitude, double omega, double sharpness, double phase) {
    Modulation m;
    m.kind = ModulationKind::smoothed_square;
    m.level = amplitude;
    m.omega = omega;
    m.sharpness = sharpness;
    m.phase = phase;
    return m;
}

Vec HistorySpec::value(double theta) const {
    if (amplitude.size() == 0) return offset;
    return offset + std::sin(omega * theta + phase) * amplitude;
}

Vec HistorySpec::derivative(double theta) const {
    if (amplitude.size() == 0) return Vec::Zero(offset.size());
    return omega * std::cos(omega * theta + phase) * amplitude;
}

void validate_lemma2(const Lemma2Problem& p) {
    const Eigen::Index n = p.A.rows();
    if (n == 0 || p.A.cols() != n) throw std::invalid_argument("lemma2: A must be square and nonempty");
    if (p.C.rows() != n || p.C.cols() != n) throw std::invalid_argument("lemma2: C must match A");
    if (!(p.r > 0.0)) throw std::invalid_argument("lemma2: r must be positive");
    if (!(p.eps >= 0.0 && p.eps < p.r)) throw std::invalid_argument("lemma2: eps must lie in [0, r)");
    if (!(p.dt > 0.0) || p.dt > p.r - p.eps)
        throw std::invalid_argument("lemma2: dt must be positive and at most r - eps");
    if (!(p.t_final > 0.0)) throw std::invalid_argument("lemma2: t_final must be positive");
    if (p.d.max_abs() > 1.0) throw std::invalid_argument("lemma2: |d| must not exceed 1");
    if (p.q.max_abs() > 1.0) throw std::invalid_argument("lemma2: |q| must not exceed 1");
    if (p.x0.offset.size() != n || (p.x0.amplitude.size() != 0 && p.x0.amplitude.size() != n))
        throw std::invalid_argument("lemma2: history dimension must match A");
    if (p.p.dim() != n) throw std::invalid_argument("lemma2: disturbance dimension must match A");
}

Lemma2Rates lemma2_rates(const Lemma2Problem& p) {
    Lemma2Rates out;
    if (p.M_lambda && p.lambda) {
        out.M_lambda = *p.M_lambda;
        out.lambda = *p.lambda;
    } else {
        EnvelopeResult env = decay_envelope(p.A);
        out.M_lambda = p.M_lambda.value_or(env.M_lambda);
        out.lambda = p.lambda.value_or(env.lambda);
    }
    out.norm_A = spectral_norm(p.A);
    out.norm_C = spectral_norm(p.C);
    out.small_gain_lhs = small_gain_lhs(out.M_lambda, out.norm_C, out.norm_A, out.lambda, p.eps);
    out.small_gain = out.small_gain_lhs < out.lambda;
    return out;
}

Lemma2Run lemma2_simulate(const Lemma2Problem& p) {
    validate_lemma2(p);
    const Eigen::Index n = p.A.rows();
    const double h = p.dt;
    const long steps = std::lround(std::ceil(p.t_final / h - 1e-9));
    const long S = steps + 1;
    Lemma2Run run;
    run.t.resize(static_cast<size_t>(S));
    run.x.resize(S, n);
    run.norm.resize(static_cast<size_t>(S));
    Mat F(S, n);

    const double lo = -p.r - p.eps;
    const int hist_points = std::max(2, static_cast<int>(std::ceil(-lo / h * 10.0)) + 1);
    for (int i = 0; i < hist_points; ++i) {
        double theta = lo + (-lo) * i / (hist_points - 1);
        run.history_sup = std::max(run.history_sup, p.x0.value(theta).norm());
    }

    auto delayed = [&](double tau) -> Vec {
        if (tau <= 0.0) return p.x0.value(tau);
        long k = static_cast<long>(std::floor(tau / h));
        double s = tau / h - static_cast<double>(k);
        if (s <= 0.0) return run.x.row(k).transpose();
        double s2 = s * s;
        double s3 = s2 * s;
        Vec out = (2 * s3 - 3 * s2 + 1) * run.x.row(k).transpose() + ((s3 - 2 * s2 + s) * h) * F.row(k).transpose() +
                  (-2 * s3 + 3 * s2) * run.x.row(k + 1).transpose() + ((s3 - s2) * h) * F.row(k + 1).transpose();
        return out;
    };
    auto rhs = [&](double t, const Vec& x) -> Vec {
        Vec out = p.A * x;
        double q = p.q.value(t);
        if (q != 0.0 && p.C.size() > 0) {
            Vec diff = delayed(t - p.r - p.eps * p.d.value(t)) - delayed(t - p.r);
            out += q * (p.C * diff);
        }
        if (!p.p.is_zero()) out += p.p.value(t);
        return out;
    };

    Vec x = p.x0.value(0.0);
    for (long j = 0; j < S; ++j) {
        double t = static_cast<double>(j) * h;
        run.t[static_cast<size_t>(j)] = t;
        run.x.row(j) = x.transpose();
        run.norm[static_cast<size_t>(j)] = x.norm();
        if (!std::isfinite(run.norm[static_cast<size_t>(j)]))
            throw std::runtime_error("lemma2: non-finite state at step " + std::to_string(j));
        Vec k1 = rhs(t, x);
        F.row(j) = k1.transpose();
        if (j == S - 1) break;
        Vec k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
        Vec k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
        Vec k4 = rhs(t + h, x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return run;
}

namespace {

Vec unit(Eigen::Index n, Eigen::Index k) {
    Vec v = Vec::Zero(n);
    v(k) = 1.0;
    return v;
}

DisturbanceSignal step_along(const Vec& dir) {
    DisturbanceSpec spec;
    spec.dim = static_cast<int>(dir.size());
    DisturbanceTerm term;
    term.kind = TermKind::smoothed_step;
    term.amplitude.assign(dir.data(), dir.data() + dir.size());
    term.t_on = 0.0;
    term.width = 0.2;
    spec.terms = {term};
    return make_disturbance(spec);
}

// Decays at the envelope rate itself, which maximizes the fading-memory ratio.
DisturbanceSignal decay_along(const Vec& dir, double rate) {
    DisturbanceSpec spec;
    spec.dim = static_cast<int>(dir.size());
    DisturbanceTerm term;
    term.kind = TermKind::exponential_decay;
    term.amplitude.assign(dir.data(), dir.data() + dir.size());
    term.rate = rate;
    spec.terms = {term};
    return make_disturbance(spec);
}

Modulation random_modulation(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0:
        return Modulation::constant(2.0 * U(rng) - 1.0);
    case 1:
        return Modulation::sinusoid(U(rng), 0.5 + 5.5 * U(rng), 2.0 * std::numbers::pi * U(rng));
    default:
        return Modulation::smoothed_square(U(rng), 0.5 + 5.5 * U(rng), 5.0 + 15.0 * U(rng),
                                           2.0 * std::numbers::pi * U(rng));
    }
}

struct Member {
    Lemma2Problem problem;
    bool initial = true;
    std::string name;
};

std::vector<Member> build_members(const Lemma2Problem& base, const Lemma2Options& opts, double sigma) {
    const Eigen::Index n = base.A.rows();
    std::vector<Member> out;
    auto blank = [&] {
        Lemma2Problem p = base;
        p.x0.offset = Vec::Zero(n);
        p.x0.amplitude = Vec();
        p.x0.omega = 0.0;
        p.x0.phase = 0.0;
        p.p = DisturbanceSignal::zero(static_cast<int>(n));
        p.q = Modulation::constant(1.0);
        return p;
    };
    const std::vector<std::pair<std::string, Modulation>> extremes = {
        {"d=+1", Modulation::constant(1.0)},
        {"d=-1", Modulation::constant(-1.0)},
        {"d=square", Modulation::smoothed_square(1.0, std::numbers::pi / base.r, 20.0)},
    };
    std::vector<Vec> dirs;
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(n, 3); ++k) dirs.push_back(unit(n, k));
    if (n > 1) dirs.push_back(Vec::Ones(n) / std::sqrt(static_cast<double>(n)));
    for (const auto& [dn, d] : extremes)
        for (size_t k = 0; k < dirs.size(); ++k) {
            Member m{blank(), true, "extreme_initial_" + dn + "_" + std::to_string(k)};
            m.problem.d = d;
            m.problem.x0.offset = dirs[k];
            out.push_back(std::move(m));
            Member w{blank(), true, "extreme_oscillating_" + dn + "_" + std::to_string(k)};
            w.problem.d = d;
            w.problem.x0.offset = dirs[k];
            w.problem.x0.amplitude = dirs[k];
            w.problem.x0.omega = 8.0 * std::numbers::pi / base.r;
            w.problem.x0.phase = 0.5 * std::numbers::pi;
            out.push_back(std::move(w));
        }
    for (const auto& [dn, d] : extremes)
        for (size_t k = 0; k < dirs.size(); ++k) {
            Member m{blank(), false, "extreme_step_" + dn + "_" + std::to_string(k)};
            m.problem.d = d;
            m.problem.p = step_along(dirs[k]);
            out.push_back(std::move(m));
            Member e{blank(), false, "extreme_decay_" + dn + "_" + std::to_string(k)};
            e.problem.d = d;
            e.problem.p = decay_along(dirs[k], sigma);
            out.push_back(std::move(e));
        }
    if (static_cast<int>(out.size()) > opts.members) out.resize(static_cast<size_t>(std::max(opts.members, 0)));
    for (int i = static_cast<int>(out.size()); i < opts.members; ++i) {
        std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(i)));
        std::normal_distribution<double> g(0.0, 1.0);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        Member m{blank(), i % 2 == 0, ""};
        m.problem.d = random_modulation(rng);
        m.problem.q = random_modulation(rng);
        if (m.initial) {
            m.problem.x0.amplitude = Vec(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                m.problem.x0.offset(k) = g(rng);
                m.problem.x0.amplitude(k) = 0.5 * g(rng);
            }
            m.problem.x0.omega = 6.0 * U(rng);
            m.name = "random_initial_" + std::to_string(i);
        } else {
            m.problem.p = random_disturbance(rng, static_cast<int>(n), Field::real, base.t_final);
            m.name = "random_disturbance_" + std::to_string(i);
        }
        out.push_back(std::move(m));
    }
    return out;
}

double late_growth_rate(const Lemma2Run& run) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    long cnt = 0;
    const double half = 0.5 * run.t.back();
    for (size_t j = 0; j < run.t.size(); ++j) {
        if (run.t[j] < half) continue;
        if (!(run.norm[j] > 1e-280)) return -std::numeric_limits<double>::infinity();
        double y = std::log(run.norm[j]);
        st += run.t[j];
        sy += y;
        stt += run.t[j] * run.t[j];
        sty += run.t[j] * y;
        ++cnt;
    }
    if (cnt < 2) return 0.0;
    double dn = static_cast<double>(cnt);
    return (dn * sty - st * sy) / (dn * stt - st * st);
}

std::vector<double> p_norms(const Lemma2Problem& p, const Lemma2Run& run) {
    std::vector<double> out(run.t.size(), 0.0);
    if (p.p.is_zero()) return out;
    for (size_t j = 0; j < run.t.size(); ++j) out[j] = p.p.value(run.t[j]).norm();
    return out;
}

double worst_ratio(const std::vector<double>& obs, const std::vector<double>& den) {
    double scale = 0.0;
    for (double v : obs) scale = std::max(scale, v);
    for (double v : den) scale = std::max(scale, v);
    const double floor = 1e-12 * scale;
    double worst = 0.0;
    for (size_t j = 0; j < obs.size(); ++j) {
        if (den[j] > floor)
            worst = std::max(worst, obs[j] / den[j]);
        else if (obs[j] > floor)
            return std::numeric_limits<double>::infinity();
    }
    return worst;
}

std::vector<Lemma2Run> run_members(const std::vector<Member>& members, int jobs) {
    std::vector<Lemma2Run> runs(members.size());
    parallel_for(members.size(), jobs, [&](size_t i) { runs[i] = lemma2_simulate(members[i].problem); });
    return runs;
}

}  // namespace

std::vector<Lemma2Problem> lemma2_ensemble(const Lemma2Problem& base, const Lemma2Options& opts) {
    std::vector<Lemma2Problem> out;
    Lemma2Rates rates = lemma2_rates(base);
    double sigma = rates.small_gain
                       ? sigma_rate(rates.M_lambda, rates.lambda, rates.norm_A, rates.norm_C, base.r, base.eps).sigma
                       : 0.5 * rates.lambda;
    for (auto& m : build_members(base, opts, sigma)) out.push_back(std::move(m.problem));
    return out;
}

Lemma2Report lemma2_validate(const Lemma2Problem& base, const Lemma2Options& opts) {
    validate_lemma2(base);
    if (opts.members < 2) throw std::invalid_argument("lemma2: ensemble needs at least two members");
    Lemma2Report rep;
    rep.rates = lemma2_rates(base);
    if (!rep.rates.small_gain)
        throw std::invalid_argument("lemma2: small-gain condition violated (M ||C|| (e^{||A|| eps} - e^{-lambda eps}) >= lambda)");
    rep.sigma = sigma_rate(rep.rates.M_lambda, rep.rates.lambda, rep.rates.norm_A, rep.rates.norm_C, base.r, base.eps);
    const double sigma = rep.sigma.sigma;

    std::vector<Member> members = build_members(base, opts, sigma);
    std::vector<Lemma2Run> runs = run_members(members, opts.jobs);
    rep.max_growth_rate = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < members.size(); ++i) {
        const Lemma2Run& run = runs[i];
        if (members[i].initial) {
            ++rep.initial_members;
            if (run.history_sup > 0.0) {
                for (size_t j = 0; j < run.t.size(); ++j)
                    rep.M = std::max(rep.M, run.norm[j] * std::exp(sigma * run.t[j]) / run.history_sup);
                rep.max_growth_rate = std::max(rep.max_growth_rate, late_growth_rate(run));
            }
        } else {
            ++rep.disturbance_members;
            rep.N = std::max(rep.N, worst_ratio(run.norm, fading_memory_sup(p_norms(members[i].problem, run),
                                                                            members[i].problem.dt, sigma)));
        }
    }
    rep.members = static_cast<int>(members.size());
    rep.finite = std::isfinite(rep.M) && std::isfinite(rep.N) && rep.max_growth_rate < 0.0;
    return rep;
}

Lemma2Falsification lemma2_falsify(const Lemma2Problem& problem, double M, double N, double sigma,
                                   const Lemma2Options& opts) {
    validate_lemma2(problem);
    std::vector<Member> members = build_members(problem, opts, sigma);
    std::vector<Lemma2Run> runs = run_members(members, opts.jobs);
    Lemma2Falsification out;
    out.max_growth_rate = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < members.size(); ++i) {
        const Lemma2Run& run = runs[i];
        std::vector<double> fp = fading_memory_sup(p_norms(members[i].problem, run), members[i].problem.dt, sigma);
        std::vector<double> bound(run.t.size());
        for (size_t j = 0; j < run.t.size(); ++j)
            bound[j] = M * std::exp(-sigma * run.t[j]) * run.history_sup + N * fp[j];
        double r = worst_ratio(run.norm, bound);
        if (r > out.worst_ratio) {
            out.worst_ratio = r;
            out.worst_member = members[i].name;
        }
        if (members[i].initial && run.history_sup > 0.0)
            out.max_growth_rate = std::max(out.max_growth_rate, late_growth_rate(run));
    }
    return out;
}

}  // namespace specpred
