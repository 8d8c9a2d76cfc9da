#pragma once

// Randomized property checks. Each returns the number of violating cases.

#include "oracles.hpp"

#include "remmap/simulate.hpp"
#include "remmap/solver.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace props {

using namespace remmap;

struct Instance {
    RegressionProblem problem;
    PenaltyParams params;
};

inline Instance random_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_dist(5, 30);
    std::uniform_int_distribution<int> p_dist(1, 12);
    std::uniform_int_distribution<int> q_dist(1, 6);
    std::uniform_real_distribution<double> log_lambda(-2.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution rare(0.1);
    const Index n = n_dist(rng);
    const Index p = p_dist(rng);
    const Index q = q_dist(rng);
    const Matrix x = oracle::gaussian(n, p, rng);
    Matrix b = oracle::gaussian(p, q, rng);
    for (Index i = 0; i < p; ++i)
        if (coin(rng)) b.row(i).setZero();
    const Matrix y = x * b + oracle::gaussian(n, q, rng);
    Mask c = oracle::random_mask(p, q, 0.2, rng);
    Mask frozen = Mask::Zero(p, q);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < q; ++j)
            if (c(i, j) != 0 && rare(rng)) frozen(i, j) = 1;
    Instance inst{make_problem(x, y, c, frozen), {}};
    inst.params.lambda1 = coin(rng) ? std::pow(10.0, log_lambda(rng)) : 0.0;
    inst.params.lambda2 = std::pow(10.0, log_lambda(rng));
    return inst;
}

/// f(tB1 + (1-t)B2) <= t f(B1) + (1-t) f(B2) + 1e-9.
inline int convexity(int cases, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int bad = 0;
    for (int k = 0; k < cases; ++k) {
        const Instance inst = random_instance(rng);
        const Index p = inst.problem.p(), q = inst.problem.q();
        const Matrix b1 = 2.0 * oracle::gaussian(p, q, rng);
        const Matrix b2 = 2.0 * oracle::gaussian(p, q, rng);
        const double t = unit(rng);
        const double mix = objective(inst.problem, CoefficientMatrix(Matrix(t * b1 + (1 - t) * b2)), inst.params);
        const double chord = t * objective(inst.problem, CoefficientMatrix(b1), inst.params) +
                             (1 - t) * objective(inst.problem, CoefficientMatrix(b2), inst.params);
        if (mix > chord + 1e-9) ++bad;
    }
    return bad;
}

inline bool no_rise(double before, double after) {
    return after <= before + 1e-10 * std::max(1.0, std::abs(before));
}

/// Objective never increases across sweeps of fit or across single row
/// updates from a random start.
inline int monotone_descent(int cases, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    int bad = 0;
    for (int k = 0; k < cases; ++k) {
        const Instance inst = random_instance(rng);
        bool ok = true;
        double last = objective(inst.problem, initial_estimate(inst.problem, inst.params.lambda1), inst.params);
        FitOptions options;
        options.observer = [&](const SweepEvent& e) {
            const double v = objective(inst.problem, e.b, inst.params);
            if (!no_rise(last, v)) ok = false;
            last = v;
        };
        fit(inst.problem, inst.params, options);

        Matrix start = oracle::gaussian(inst.problem.p(), inst.problem.q(), rng);
        for (Index i = 0; i < start.rows(); ++i)
            for (Index j = 0; j < start.cols(); ++j)
                if (inst.problem.frozen(i, j) != 0) start(i, j) = 0.0;
        CoefficientMatrix b(start);
        ResidualState state(inst.problem, b);
        double prev = objective(inst.problem, b, inst.params);
        for (int sweep = 0; sweep < 3; ++sweep) {
            for (Index p = 0; p < b.rows(); ++p) {
                update_row(state, b, p, inst.problem, inst.params);
                const double v = objective(inst.problem, b, inst.params);
                if (!no_rise(prev, v)) ok = false;
                prev = v;
            }
        }
        if (!ok) ++bad;
    }
    return bad;
}

/// One more full pass after convergence moves nothing by more than tol,
/// and frozen entries are exactly zero.
inline int fixed_point(int cases, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    int bad = 0;
    for (int k = 0; k < cases; ++k) {
        const Instance inst = random_instance(rng);
        const SolveReport report = fit(inst.problem, inst.params);
        bool ok = report.converged && report.final_max_delta <= inst.params.tol;
        CoefficientMatrix b = report.b;
        for (Index i = 0; i < b.rows(); ++i)
            for (Index j = 0; j < b.cols(); ++j)
                if (inst.problem.frozen(i, j) != 0 && !(b(i, j) == 0.0 && !std::signbit(b(i, j)))) ok = false;
        ResidualState state(inst.problem, b);
        if (full_sweep(state, b, inst.problem, inst.params) > inst.params.tol) ok = false;
        if (!ok) ++bad;
    }
    return bad;
}

/// TF = FP + FN, hit bookkeeping, perfect recovery, agreement with direct
/// enumeration.
inline int metric_identities(int cases, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim(1, 15);
    std::uniform_real_distribution<double> share(0.0, 1.0);
    int bad = 0;
    for (int k = 0; k < cases; ++k) {
        const Index p = dim(rng), q = dim(rng);
        const Mask truth = oracle::random_mask(p, q, share(rng), rng);
        const Mask est = oracle::random_mask(p, q, share(rng), rng);
        const Mask c = oracle::random_mask(p, q, 0.3 * share(rng), rng);
        GroundTruth t;
        t.adjacency = truth;
        const ErrorMetrics m = score_support(est, t, c);
        const oracle::Counts e = oracle::enumerate_metrics(est, truth, c);
        bool ok = m.tf == m.fp + m.fn;
        ok = ok && m.fp == e.fp && m.fn == e.fn && m.fpp == e.fpp && m.fnp == e.fnp;
        ok = ok && m.fp + e.hits == e.estimated && m.fn + e.hits == e.truth;
        const ErrorMetrics perfect = score_support(truth, t, c);
        ok = ok && perfect.fp == 0 && perfect.fn == 0 && perfect.tf == 0 && perfect.fpp == 0 && perfect.fnp == 0;
        if (!ok) ++bad;
    }
    return bad;
}

}  // namespace props
