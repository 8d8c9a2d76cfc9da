#pragma once

// Reference implementations used only by the tests. None of these call into
// the library's solver or tuning code.

#include "remmap/core.hpp"
#include "remmap/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using remmap::Index;
using remmap::Mask;
using remmap::Matrix;
using remmap::Vector;

inline double soft(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

/// Term-by-term objective evaluation.
inline double objective(const Matrix& x, const Matrix& y, const Mask& c, const Matrix& b,
                        double l1, double l2) {
    double loss = 0.0;
    for (Index n = 0; n < y.rows(); ++n) {
        for (Index q = 0; q < y.cols(); ++q) {
            double fitted = 0.0;
            for (Index p = 0; p < x.cols(); ++p) fitted += x(n, p) * b(p, q);
            const double r = y(n, q) - fitted;
            loss += r * r;
        }
    }
    double l1_sum = 0.0;
    double l2_sum = 0.0;
    for (Index p = 0; p < b.rows(); ++p) {
        double sq = 0.0;
        for (Index q = 0; q < b.cols(); ++q) {
            if (c(p, q) == 0) continue;
            l1_sum += std::fabs(b(p, q));
            sq += b(p, q) * b(p, q);
        }
        l2_sum += std::sqrt(sq);
    }
    return 0.5 * loss + l1 * l1_sum + l2 * l2_sum;
}

/// Proximal map of t*(l1*|.|_1 + l2*|.|_2) over the penalized entries of a
/// row; unpenalized entries pass through, frozen entries are zeroed.
inline void prox_row(Eigen::Ref<Vector> row, const Mask& c, const Mask& frozen, Index p, double t,
                     double l1, double l2) {
    double sq = 0.0;
    for (Index q = 0; q < row.size(); ++q) {
        if (frozen(p, q) != 0) {
            row(q) = 0.0;
        } else if (c(p, q) != 0) {
            row(q) = soft(row(q), t * l1);
            sq += row(q) * row(q);
        }
    }
    const double norm = std::sqrt(sq);
    const double factor = norm > t * l2 ? 1.0 - t * l2 / norm : 0.0;
    for (Index q = 0; q < row.size(); ++q) {
        if (frozen(p, q) == 0 && c(p, q) != 0) row(q) *= factor;
    }
}

struct ProxResult {
    Matrix b;
    double value = 0.0;
    int iterations = 0;
};

/// Accelerated proximal gradient with adaptive restart, stopped when the
/// objective stalls for `patience` consecutive iterations below `stall`.
inline ProxResult proximal_gradient(const Matrix& x, const Matrix& y, const Mask& c,
                                    const Mask& frozen, double l1, double l2,
                                    double stall = 1e-10, int max_iter = 500000, int patience = 50) {
    const Index p = x.cols();
    const Index q = y.cols();
    const Matrix gram = x.transpose() * x;
    const Matrix xty = x.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lip = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
    const double step = 1.0 / lip;

    Matrix b = Matrix::Zero(p, q);
    Matrix z = b;
    double t = 1.0;
    double prev = objective(x, y, c, b, l1, l2);
    int quiet = 0;
    int it = 0;
    for (; it < max_iter; ++it) {
        Matrix next = z - step * (gram * z - xty);
        for (Index r = 0; r < p; ++r) {
            Vector row = next.row(r).transpose();
            prox_row(row, c, frozen, r, step, l1, l2);
            next.row(r) = row.transpose();
        }
        const double value = objective(x, y, c, next, l1, l2);
        if (value > prev) {
            // Restart momentum from the last accepted point.
            z = b;
            t = 1.0;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / t_next) * (next - b);
        t = t_next;
        const double gain = prev - value;
        b = std::move(next);
        prev = value;
        quiet = gain <= stall * std::max(1.0, std::fabs(value)) ? quiet + 1 : 0;
        if (quiet >= patience) break;
    }
    return {b, prev, it};
}

/// Cyclic coordinate descent for 0.5||y - X beta||^2 + l1 ||beta||_1.
inline Vector lasso_cd(const Matrix& x, const Vector& y, double l1, double tol = 1e-12,
                       int max_iter = 1000000) {
    const Index p = x.cols();
    Vector beta = Vector::Zero(p);
    Vector r = y;
    Vector norms(p);
    for (Index j = 0; j < p; ++j) norms(j) = x.col(j).squaredNorm();
    for (int it = 0; it < max_iter; ++it) {
        double biggest = 0.0;
        for (Index j = 0; j < p; ++j) {
            const double z = x.col(j).dot(r) + norms(j) * beta(j);
            const double updated = soft(z, l1) / norms(j);
            const double d = updated - beta(j);
            if (d != 0.0) {
                r -= d * x.col(j);
                beta(j) = updated;
                biggest = std::max(biggest, std::fabs(d));
            }
        }
        if (biggest < tol) break;
    }
    return beta;
}

/// Moore-Penrose pseudo-inverse from a full SVD.
inline Matrix pinv(const Matrix& a, double rel_tol = 1e-10) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? rel_tol * s(0) : 0.0;
    Matrix sinv = Matrix::Zero(a.cols(), a.rows());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) sinv(i, i) = 1.0 / s(i);
    }
    return svd.matrixV() * sinv * svd.matrixU().transpose();
}

/// Counts by direct enumeration, predictor classes recomputed from the
/// adjacency.
struct Counts {
    Index fp = 0, fn = 0, tf = 0, fpp = 0, fnp = 0, hits = 0, estimated = 0, truth = 0;
};

inline Counts enumerate_metrics(const Mask& est, const Mask& truth, const Mask& c) {
    Counts k;
    for (Index p = 0; p < truth.rows(); ++p) {
        Index true_edges = 0;
        Index est_edges = 0;
        for (Index q = 0; q < truth.cols(); ++q) {
            if (c(p, q) == 0) continue;
            const int e = est(p, q) != 0 ? 1 : 0;
            const int a = truth(p, q) != 0 ? 1 : 0;
            k.fp += e * (1 - a);
            k.fn += (1 - e) * a;
            k.hits += e * a;
            k.estimated += e;
            k.truth += a;
            true_edges += a;
            est_edges += e;
        }
        if (true_edges == 0 && est_edges > 0) ++k.fpp;
        if (true_edges > 0 && est_edges == 0) ++k.fnp;
    }
    k.tf = k.fp + k.fn;
    return k;
}

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

/// N x P matrix with orthonormal columns.
inline Matrix orthonormal(Index n, Index p, std::mt19937_64& rng) {
    const Matrix g = gaussian(n, p, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(n, p);
}

/// Random 0/1 mask with roughly `zero_share` zeros.
inline Mask random_mask(Index rows, Index cols, double zero_share, std::mt19937_64& rng) {
    std::bernoulli_distribution zero(zero_share);
    Mask m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = zero(rng) ? 0 : 1;
    return m;
}

}  // namespace oracle
