#ifndef VISHAPE_RATES_HPP
#define VISHAPE_RATES_HPP

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vishape/vi.hpp"

namespace vishape {

// Outcome of one convergence-rate sweep: errors e(t), the log-log slope and
// the exponent it is measured against.
struct RateReport {
    std::vector<double> t;
    std::vector<double> error;
    std::vector<char> failed; // solve failures, reported not thrown
    double slope = std::numeric_limits<double>::infinity();
    bool slope_defined = false; // false also encodes the all-zero sentinel
    double fit_residual = 0.0;
    double theoretical_exponent = 0.0;
    bool pass = false;

    std::string csv() const; // header t,error,slope_cum
    std::string json() const;
};

// e(t) from a caller-supplied family; points below t_floor are dropped from
// the fit (the discretisation floor would pollute the slope). Pass iff
// slope >= exponent - 0.1, or every error vanished.
RateReport rate_sweep(const std::function<double(double)>& error_at,
                      std::vector<double> t_sequence, double theoretical_exponent,
                      double t_floor = 1.0 / 4096.0);

std::vector<double> dyadic_t_sequence(int first_exp = 3, int last_exp = 9);

// H1 sweep of the transported obstacle problem against its t=0 solution.
RateReport rate_sweep_obstacle(const ObstacleProblem& problem, const VectorField& X,
                               const std::vector<double>& t_sequence, double tol,
                               double theoretical_exponent = 1.0);

// W1p-seminorm sweep of the transported p-Laplace problem.
RateReport rate_sweep_p_laplace(const Mesh& mesh, double p,
                                const std::function<double(const Vec2&)>& f,
                                const VectorField& X, const std::vector<double>& t_sequence,
                                double tol, double theoretical_exponent);

// Linear-in-t growth of |<A_t(u) - A_0(u), u - v>| over probe states.
struct OperatorContinuityReport {
    std::vector<double> t;
    std::vector<double> worst_pairing;
    double c_hat = 0.0; // best constant in the ct||u-v|| bound
    double slope = 0.0;
    bool slope_defined = false;
};
OperatorContinuityReport check_O2(const ObstacleProblem& problem, const VectorField& X,
                                  const std::vector<NodalField>& probes,
                                  const std::vector<double>& t_sequence);

// Sampled uniform-monotonicity constant of the assembled operator:
// alpha_hat = min over random feasible pairs of <F(v)-F(z), v-z>/||v-z||_H1^2.
struct MonotonicityReport {
    double alpha_hat = 0.0;
    double expected_bound = 0.0; // min(1/2, lambda/2) inside the validity window
    int samples = 0;
};
MonotonicityReport check_monotonicity(const ObstacleProblem& problem, int sample_count,
                                      std::uint64_t seed = 7);

} // namespace vishape

#endif
