#include "vishape/rates.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "vishape/error.hpp"
#include "vishape/flow.hpp"
#include "vishape/io.hpp"
#include "vishape/rng.hpp"

namespace vishape {

std::string RateReport::csv() const {
    std::string out = "t,error,slope_cum\n";
    for (size_t i = 0; i < t.size(); ++i) {
        std::vector<double> ts(t.begin(), t.begin() + i + 1);
        std::vector<double> es(error.begin(), error.begin() + i + 1);
        const auto s = fit_loglog_slope(ts, es);
        out += format_float(t[i]) + "," + format_float(error[i]) + "," +
               (s ? format_float(*s) : std::string("nan")) + "\n";
    }
    return out;
}

std::string RateReport::json() const {
    nlohmann::ordered_json j;
    j["slope"] = slope_defined ? slope : std::numeric_limits<double>::infinity();
    j["slope_defined"] = slope_defined;
    j["exponent"] = theoretical_exponent;
    j["pass"] = pass;
    j["fit_residual"] = fit_residual;
    j["t"] = t;
    j["error"] = error;
    return j.dump(2);
}

std::vector<double> dyadic_t_sequence(int first_exp, int last_exp) {
    std::vector<double> out;
    for (int k = first_exp; k <= last_exp; ++k) out.push_back(std::pow(2.0, -k));
    return out;
}

RateReport rate_sweep(const std::function<double(double)>& error_at,
                      std::vector<double> t_sequence, double theoretical_exponent,
                      double t_floor) {
    if (t_sequence.size() < 3) throw InputError("rate_sweep: need at least 3 t values");
    std::sort(t_sequence.begin(), t_sequence.end(), std::greater<double>());

    RateReport rep;
    rep.theoretical_exponent = theoretical_exponent;
    for (double t : t_sequence) {
        rep.t.push_back(t);
        try {
            rep.error.push_back(error_at(t));
            rep.failed.push_back(0);
        } catch (const std::exception&) {
            rep.error.push_back(std::numeric_limits<double>::quiet_NaN());
            rep.failed.push_back(1);
        }
    }

    std::vector<double> ts, es;
    bool any_nonzero = false;
    for (size_t i = 0; i < rep.t.size(); ++i) {
        if (rep.failed[i]) continue;
        if (rep.error[i] > 0.0) any_nonzero = true;
        if (rep.t[i] >= t_floor && rep.error[i] > 0.0) {
            ts.push_back(rep.t[i]);
            es.push_back(rep.error[i]);
        }
    }
    if (!any_nonzero) {
        // identical problems for every t: infinite-slope sentinel
        rep.slope = std::numeric_limits<double>::infinity();
        rep.slope_defined = false;
        rep.pass = std::find(rep.failed.begin(), rep.failed.end(), 1) == rep.failed.end();
        return rep;
    }
    const auto slope = fit_loglog_slope(ts, es);
    if (slope) {
        rep.slope = *slope;
        rep.slope_defined = true;
        double ss = 0.0;
        // intercept for the residual of the fit
        double sx = 0, sy = 0;
        for (size_t i = 0; i < ts.size(); ++i) {
            sx += std::log(ts[i]);
            sy += std::log(es[i]);
        }
        const double b = (sy - rep.slope * sx) / double(ts.size());
        for (size_t i = 0; i < ts.size(); ++i) {
            const double r = std::log(es[i]) - (rep.slope * std::log(ts[i]) + b);
            ss += r * r;
        }
        rep.fit_residual = std::sqrt(ss / double(ts.size()));
        rep.pass = rep.slope >= theoretical_exponent - 0.1;
    }
    return rep;
}

RateReport rate_sweep_obstacle(const ObstacleProblem& problem, const VectorField& X,
                               const std::vector<double>& t_sequence, double tol,
                               double theoretical_exponent) {
    const VISolution base = solve_obstacle_semilinear(problem, tol);
    auto error_at = [&](double t) {
        const VISolution pert = solve_transported(problem, X, t, tol);
        NodalField diff(*problem.mesh, 0.0);
        for (int i = 0; i < problem.mesh->num_vertices(); ++i)
            diff[i] = pert.state[i] - base.state[i];
        return h1_norm(*problem.mesh, diff);
    };
    return rate_sweep(error_at, t_sequence, theoretical_exponent);
}

RateReport rate_sweep_p_laplace(const Mesh& mesh, double p,
                                const std::function<double(const Vec2&)>& f,
                                const VectorField& X, const std::vector<double>& t_sequence,
                                double tol, double theoretical_exponent) {
    const NodalField base = solve_p_laplace(mesh, p, f, X, 0.0, tol);
    auto error_at = [&](double t) {
        const NodalField pert = solve_p_laplace(mesh, p, f, X, t, tol);
        NodalField diff(mesh, 0.0);
        for (int i = 0; i < mesh.num_vertices(); ++i) diff[i] = pert[i] - base[i];
        return w1p_seminorm(mesh, diff, p);
    };
    return rate_sweep(error_at, t_sequence, theoretical_exponent);
}

OperatorContinuityReport check_O2(const ObstacleProblem& problem, const VectorField& X,
                                  const std::vector<NodalField>& probes,
                                  const std::vector<double>& t_sequence) {
    if (probes.size() < 2) throw InputError("check_O2: need at least two probe states");
    OperatorContinuityReport rep;

    std::vector<std::vector<double>> base_residuals;
    for (const NodalField& u : probes) base_residuals.push_back(operator_residual(problem, u));

    for (double t : t_sequence) {
        ObstacleProblem pt = problem;
        pt.transport = pullback_transport(*problem.mesh, X, t);
        double worst = 0.0;
        for (size_t a = 0; a < probes.size(); ++a) {
            const std::vector<double> rt = operator_residual(pt, probes[a]);
            for (size_t b = 0; b < probes.size(); ++b) {
                if (a == b) continue;
                double pairing = 0.0;
                NodalField diff(*problem.mesh, 0.0);
                for (int i = 0; i < problem.mesh->num_vertices(); ++i) {
                    diff[i] = probes[a][i] - probes[b][i];
                    pairing += (rt[i] - base_residuals[a][i]) * diff[i];
                }
                worst = std::max(worst, std::fabs(pairing));
                const double nd = h1_norm(*problem.mesh, diff);
                if (nd > 0.0) rep.c_hat = std::max(rep.c_hat, std::fabs(pairing) / (t * nd));
            }
        }
        rep.t.push_back(t);
        rep.worst_pairing.push_back(worst);
    }
    const auto slope = fit_loglog_slope(rep.t, rep.worst_pairing);
    if (slope) {
        rep.slope = *slope;
        rep.slope_defined = true;
    }
    return rep;
}

MonotonicityReport check_monotonicity(const ObstacleProblem& problem, int sample_count,
                                      std::uint64_t seed) {
    MonotonicityReport rep;
    rep.expected_bound = std::min(0.5, 0.5 * problem.lambda);
    rep.samples = sample_count;
    Rng rng(seed);
    const int n = problem.mesh->num_vertices();
    double alpha = std::numeric_limits<double>::infinity();
    for (int s = 0; s < sample_count; ++s) {
        NodalField v(*problem.mesh, 0.0), z(*problem.mesh, 0.0);
        for (int i = 0; i < n; ++i) {
            const double cap =
                problem.obstacle[i] == kUnconstrained ? 1.0 : problem.obstacle[i];
            v[i] = cap - std::fabs(rng.uniform(-1.0, 1.0));
            z[i] = cap - std::fabs(rng.uniform(-1.0, 1.0));
        }
        const std::vector<double> rv = operator_residual(problem, v);
        const std::vector<double> rz = operator_residual(problem, z);
        NodalField diff(*problem.mesh, 0.0);
        double pairing = 0.0;
        for (int i = 0; i < n; ++i) {
            diff[i] = v[i] - z[i];
            pairing += (rv[i] - rz[i]) * diff[i];
        }
        const double nd = h1_norm(*problem.mesh, diff);
        if (nd > 1e-14) alpha = std::min(alpha, pairing / (nd * nd));
    }
    rep.alpha_hat = alpha;
    return rep;
}

} // namespace vishape
