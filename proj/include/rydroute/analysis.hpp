#pragma once

// Weighted nonlinear least squares for the decay and Rabi models used on
// sweep output:
//
//     gaussian     A + B exp(-(t/tau)^2)
//     exponential  A + B exp(-t/tau)
//     rabi         C sin^2(Omega t / 2)
//
// The solver is Levenberg-Marquardt with Marquardt scaling
// (J^T W J + lambda diag(J^T W J)) delta = J^T W r. lambda starts at 1e-3,
// is multiplied by 10 after a rejected step and divided by 3 after an
// accepted one. Iteration stops when every relative parameter step is below
// 1e-8 or after 200 iterations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rydroute {

enum class FitModel { gaussian, exponential, rabi };

inline std::string_view to_string(FitModel m) {
    switch (m) {
        case FitModel::gaussian: return "gaussian";
        case FitModel::exponential: return "exponential";
        case FitModel::rabi: return "rabi";
    }
    return "?";
}

inline FitModel parse_fit_model(std::string_view name) {
    if (name == "gaussian") return FitModel::gaussian;
    if (name == "exponential") return FitModel::exponential;
    if (name == "rabi") return FitModel::rabi;
    throw std::invalid_argument("unknown fit model '" + std::string(name) + "'");
}

inline std::vector<std::string> parameter_names(FitModel m) {
    if (m == FitModel::rabi) return {"C", "Omega"};
    return {"A", "B", "tau"};
}

struct FitPoint {
    double t = 0.0;
    double y = 0.0;
    double weight = 1.0;
};

/// Weight 1 / max(sigma^2, floor) for a point with standard error sigma.
inline double weight_from_stderr(double sigma, double floor = 1e-6) {
    return 1.0 / std::max(sigma * sigma, floor);
}

struct DecayFit {
    FitModel model = FitModel::gaussian;
    std::vector<double> parameters;
    std::vector<double> uncertainties;
    double residual_sum_squares = 0.0;
    bool converged = false;
    bool degenerate = false;  // constant data: B = 0 and tau unconstrained
    int iterations = 0;

    double tau() const {
        if (model == FitModel::rabi) throw std::logic_error("rabi fit has no tau");
        return parameters[2];
    }
    double omega() const {
        if (model != FitModel::rabi) throw std::logic_error("only rabi fits have Omega");
        return parameters[1];
    }
};

namespace detail {

inline double model_value(FitModel m, const Eigen::VectorXd& p, double t) {
    switch (m) {
        case FitModel::gaussian: {
            const double x = t / p[2];
            return p[0] + p[1] * std::exp(-x * x);
        }
        case FitModel::exponential: return p[0] + p[1] * std::exp(-t / p[2]);
        case FitModel::rabi: {
            const double s = std::sin(0.5 * p[1] * t);
            return p[0] * s * s;
        }
    }
    return 0.0;
}

inline void model_gradient(FitModel m, const Eigen::VectorXd& p, double t, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> g) {
    switch (m) {
        case FitModel::gaussian: {
            const double x = t / p[2];
            const double e = std::exp(-x * x);
            g << 1.0, e, p[1] * e * 2.0 * x * x / p[2];
            break;
        }
        case FitModel::exponential: {
            const double e = std::exp(-t / p[2]);
            g << 1.0, e, p[1] * e * t / (p[2] * p[2]);
            break;
        }
        case FitModel::rabi: {
            const double s = std::sin(0.5 * p[1] * t);
            g << s * s, 0.5 * p[0] * t * std::sin(p[1] * t);
            break;
        }
    }
}

inline bool admissible(FitModel m, const Eigen::VectorXd& p) {
    if (!p.allFinite()) return false;
    return m == FitModel::rabi ? p[1] > 0.0 : p[2] > 0.0;
}

inline void validate_data(std::span<const FitPoint> data) {
    if (data.size() < 2) throw std::invalid_argument("fit: need at least 2 points");
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -t_min;
    for (const auto& d : data) {
        if (!(d.t >= 0.0) || !std::isfinite(d.y) || !(d.weight > 0.0) || !std::isfinite(d.weight))
            throw std::invalid_argument("fit: times must be >= 0, values finite, weights positive");
        t_min = std::min(t_min, d.t);
        t_max = std::max(t_max, d.t);
    }
    if (!(t_max > t_min)) throw std::invalid_argument("fit: need at least 2 distinct times");
}

}  // namespace detail

inline std::vector<double> initial_guess(FitModel model, std::span<const FitPoint> data) {
    detail::validate_data(data);
    std::vector<FitPoint> sorted(data.begin(), data.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.t < b.t; });

    const auto [lo, hi] = std::minmax_element(sorted.begin(), sorted.end(),
                                              [](const auto& a, const auto& b) { return a.y < b.y; });
    const double t_mid = 0.5 * (sorted.front().t + sorted.back().t);

    if (model == FitModel::rabi) {
        const double t_peak = hi->t > 0.0 ? hi->t : t_mid;
        return {hi->y, std::acos(-1.0) / t_peak};
    }

    const double A = lo->y;
    const double B = hi->y - lo->y;
    const double level = A + B / std::exp(1.0);
    double tau = t_mid;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const double y0 = sorted[i].y - level;
        const double y1 = sorted[i + 1].y - level;
        if (y0 == 0.0) {
            tau = sorted[i].t;
            break;
        }
        if (y0 * y1 < 0.0) {
            tau = sorted[i].t + (sorted[i + 1].t - sorted[i].t) * y0 / (y0 - y1);
            break;
        }
    }
    if (!(tau > 0.0)) tau = t_mid > 0.0 ? t_mid : sorted.back().t;
    return {A, B, tau};
}

struct FitOptions {
    int max_iterations = 200;
    double relative_step = 1e-8;
};

inline DecayFit fit(FitModel model, std::span<const FitPoint> data, const FitOptions& opt = {}) {
    detail::validate_data(data);
    const auto guess = initial_guess(model, data);
    const Eigen::Index np = static_cast<Eigen::Index>(guess.size());
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());

    DecayFit out;
    out.model = model;

    double y_min = data[0].y, y_max = data[0].y, t_max = 0.0;
    for (const auto& d : data) {
        y_min = std::min(y_min, d.y);
        y_max = std::max(y_max, d.y);
        t_max = std::max(t_max, d.t);
    }
    const double y_scale = std::max(std::abs(y_min), std::abs(y_max));

    if (model != FitModel::rabi && (y_max - y_min) <= 1e-12 * y_scale) {
        double wsum = 0.0, wy = 0.0;
        for (const auto& d : data) {
            wsum += d.weight;
            wy += d.weight * d.y;
        }
        out.parameters = {wy / wsum, 0.0, guess[2]};
        out.uncertainties = {0.0, 0.0, std::numeric_limits<double>::infinity()};
        out.degenerate = true;
        return out;
    }
    if (model == FitModel::rabi && y_max - y_min <= 1e-12 * y_scale) {
        out.parameters = guess;
        out.uncertainties.assign(guess.size(), std::numeric_limits<double>::infinity());
        out.degenerate = true;
        return out;
    }

    // floors for the relative step test
    Eigen::VectorXd ref(np);
    if (model == FitModel::rabi) {
        ref << 1e-6 * y_scale, 1e-6 / t_max;
    } else {
        ref << 1e-6 * y_scale, 1e-6 * y_scale, 1e-6 * t_max;
    }

    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(guess.data(), np);
    Eigen::VectorXd w(n), y(n), t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        w[i] = data[static_cast<std::size_t>(i)].weight;
        y[i] = data[static_cast<std::size_t>(i)].y;
        t[i] = data[static_cast<std::size_t>(i)].t;
    }

    auto residuals = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) r[i] = y[i] - detail::model_value(model, q, t[i]);
        return r;
    };
    auto jacobian = [&](const Eigen::VectorXd& q) {
        Eigen::MatrixXd J(n, np);
        for (Eigen::Index i = 0; i < n; ++i) detail::model_gradient(model, q, t[i], J.row(i));
        return J;
    };
    auto rss_of = [&](const Eigen::VectorXd& r) { return (w.array() * r.array().square()).sum(); };

    Eigen::VectorXd r = residuals(p);
    double rss = rss_of(r);
    double lambda = 1e-3;

    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Eigen::MatrixXd J = jacobian(p);
        const Eigen::MatrixXd JtW = J.transpose() * w.asDiagonal();
        const Eigen::MatrixXd H = JtW * J;
        const Eigen::VectorXd g = JtW * r;

        Eigen::MatrixXd A = H;
        for (Eigen::Index k = 0; k < np; ++k) A(k, k) += lambda * std::max(H(k, k), 1e-300);
        const Eigen::VectorXd step = A.ldlt().solve(g);
        const bool small = (step.array().abs() / p.array().abs().max(ref.array())).maxCoeff() < opt.relative_step;

        const Eigen::VectorXd trial = p + step;
        double trial_rss = std::numeric_limits<double>::infinity();
        Eigen::VectorXd trial_r;
        if (step.allFinite() && detail::admissible(model, trial)) {
            trial_r = residuals(trial);
            trial_rss = rss_of(trial_r);
        }

        if (std::isfinite(trial_rss) && trial_rss <= rss) {
            p = trial;
            r = std::move(trial_r);
            rss = trial_rss;
            lambda /= 3.0;
            if (small) {
                out.converged = true;
                ++it;
                break;
            }
        } else {
            if (small) {
                out.converged = true;
                ++it;
                break;
            }
            lambda *= 10.0;
        }
    }

    out.iterations = it;
    out.residual_sum_squares = rss;
    out.parameters.assign(p.data(), p.data() + np);

    // local quadratic approximation, scaled by the reduced chi-square
    const Eigen::MatrixXd J = jacobian(p);
    const Eigen::MatrixXd H = J.transpose() * w.asDiagonal() * J;
    const double dof = static_cast<double>(n - np);
    const double s2 = dof > 0.0 ? rss / dof : 0.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
    out.uncertainties.resize(static_cast<std::size_t>(np));
    if (lu.isInvertible()) {
        const Eigen::MatrixXd cov = lu.inverse() * s2;
        for (Eigen::Index k = 0; k < np; ++k)
            out.uncertainties[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, cov(k, k)));
    } else {
        std::fill(out.uncertainties.begin(), out.uncertainties.end(), std::numeric_limits<double>::infinity());
    }
    return out;
}

inline DecayFit fit(FitModel model, const std::vector<FitPoint>& data, const FitOptions& opt = {}) {
    return fit(model, std::span<const FitPoint>(data), opt);
}

}  // namespace rydroute
