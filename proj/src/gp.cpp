#include "swarm/gp.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace swarm {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);
constexpr double kJitterMaxRel = 1e-2;

Eigen::MatrixXd kernel_matrix(const std::vector<Vec2>& inputs, const Hyperparameters& h) {
    const auto n = static_cast<Eigen::Index>(inputs.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = h.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = kernel(inputs[i], inputs[j], h);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

std::vector<Vec2> positions_of(const Dataset& data) {
    std::vector<Vec2> x;
    x.reserve(data.size());
    for (const auto& o : data) x.push_back(o.position);
    return x;
}

Eigen::VectorXd values_of(const Dataset& data) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = data[static_cast<std::size_t>(i)].value;
    return y;
}

}  // namespace

double factorize_with_jitter(const Eigen::MatrixXd& k, double noise, double signal_variance,
                             Eigen::LLT<Eigen::MatrixXd>& chol) {
    const auto n = k.rows();
    double effective = noise;
    chol.compute(k + effective * Eigen::MatrixXd::Identity(n, n));
    if (chol.info() == Eigen::Success) return effective;

    for (double jitter = Hyperparameters::kNoiseFloorRel * signal_variance;
         jitter <= kJitterMaxRel * signal_variance * (1.0 + 1e-12); jitter *= 10.0) {
        effective = noise + jitter;
        chol.compute(k + effective * Eigen::MatrixXd::Identity(n, n));
        if (chol.info() == Eigen::Success) return effective;
    }
    throw SingularKernel("kernel matrix not positive definite after jitter escalation");
}

namespace {

/// Pairwise squared coordinate differences, precomputed once per fit so each
/// hyperparameter evaluation is a cheap elementwise exp.
struct FitWorkspace {
    Eigen::MatrixXd dx2, dy2;
    Eigen::VectorXd y;

    FitWorkspace(const std::vector<Vec2>& inputs, Eigen::VectorXd targets)
        : y(std::move(targets)) {
        const auto n = static_cast<Eigen::Index>(inputs.size());
        dx2.resize(n, n);
        dy2.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double ddx = inputs[i].x() - inputs[j].x();
                const double ddy = inputs[i].y() - inputs[j].y();
                dx2(i, j) = dx2(j, i) = ddx * ddx;
                dy2(i, j) = dy2(j, i) = ddy * ddy;
            }
        }
    }

    Eigen::Index n() const { return y.size(); }

    Eigen::MatrixXd kernel(double sf2, double tx, double ty) const {
        return sf2 * (-0.5 * (dx2 / (tx * tx) + dy2 / (ty * ty))).array().exp().matrix();
    }
};

/// Search state: log of (signal_variance, theta_x, theta_y, noise_variance).
using LogParams = Eigen::Vector4d;

Hyperparameters params_from_log(const LogParams& z) {
    Hyperparameters h;
    h.signal_variance = std::exp(z[0]);
    h.length_scales = {std::exp(z[1]), std::exp(z[2])};
    h.noise_variance = std::max(std::exp(z[3]), h.noise_floor());
    return h;
}

struct Evaluation {
    double loglik = -std::numeric_limits<double>::infinity();
    double beta = 0.0;
    LogParams grad = LogParams::Zero();
};

/// Profiled objective: beta is set to its generalized-least-squares optimum,
/// which makes the gradient with respect to the kernel parameters equal to
/// the fixed-beta gradient evaluated at that optimum.
Evaluation evaluate(const FitWorkspace& ws, const LogParams& z, bool with_gradient) {
    Evaluation ev;
    const Hyperparameters h = params_from_log(z);
    const auto n = ws.n();

    Eigen::MatrixXd c = ws.kernel(h.signal_variance, h.length_scales.x(), h.length_scales.y());
    const Eigen::MatrixXd k = c;  // noise-free kernel, reused by the gradient
    c.diagonal().array() += h.noise_variance;
    Eigen::LLT<Eigen::MatrixXd> chol(c);
    if (chol.info() != Eigen::Success) return ev;  // reject: -inf

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd ci_y = chol.solve(ws.y);
    const Eigen::VectorXd ci_1 = chol.solve(ones);
    const double denom = ones.dot(ci_1);
    ev.beta = denom > 0.0 ? ones.dot(ci_y) / denom : 0.0;

    const Eigen::VectorXd alpha = ci_y - ev.beta * ci_1;
    const Eigen::VectorXd r = ws.y - ev.beta * ones;
    const double logdet = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
    ev.loglik = -0.5 * r.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;

    if (with_gradient) {
        const Eigen::MatrixXd a_inv = chol.solve(Eigen::MatrixXd::Identity(n, n));
        auto directional = [&](const Eigen::MatrixXd& dc) {
            return 0.5 * alpha.dot(dc * alpha) - 0.5 * a_inv.cwiseProduct(dc).sum();
        };
        const double tx = h.length_scales.x(), ty = h.length_scales.y();
        const double d_sf2 = directional(k / h.signal_variance);
        const double d_tx = directional(k.cwiseProduct(ws.dx2) / (tx * tx * tx));
        const double d_ty = directional(k.cwiseProduct(ws.dy2) / (ty * ty * ty));
        const double d_sn2 = 0.5 * alpha.squaredNorm() - 0.5 * a_inv.trace();
        // chain rule to log space
        ev.grad << d_sf2 * h.signal_variance, d_tx * tx, d_ty * ty, d_sn2 * h.noise_variance;
    }
    return ev;
}

/// Gradient ascent with backtracking; monotone in the objective.
Evaluation ascend(const FitWorkspace& ws, LogParams& z, Evaluation ev, int iterations) {
    double step = 0.4;
    for (int it = 0; it < iterations; ++it) {
        if (!std::isfinite(ev.loglik)) break;
        const Evaluation here = evaluate(ws, z, true);
        if (!std::isfinite(here.loglik)) break;
        ev = here;
        const double gmax = ev.grad.cwiseAbs().maxCoeff();
        if (gmax < 1e-9) break;
        const LogParams dir = ev.grad / gmax;

        bool improved = false;
        for (int bt = 0; bt < 6; ++bt) {
            LogParams trial = (z + step * dir).cwiseMax(-27.0).cwiseMin(27.0);
            const Evaluation t = evaluate(ws, trial, false);
            if (t.loglik > ev.loglik) {
                z = trial;
                ev.loglik = t.loglik;
                ev.beta = t.beta;
                step = std::min(step * 1.4, 1.0);
                improved = true;
                break;
            }
            step *= 0.4;
        }
        if (!improved) break;
    }
    return ev;
}

}  // namespace

double kernel(const Vec2& a, const Vec2& b, const Hyperparameters& hyper) {
    const double dx = (a.x() - b.x()) / hyper.length_scales.x();
    const double dy = (a.y() - b.y()) / hyper.length_scales.y();
    return hyper.signal_variance * std::exp(-0.5 * (dx * dx + dy * dy));
}

GpModel GpModel::build(std::vector<Vec2> inputs, Eigen::VectorXd targets,
                       const Hyperparameters& hyper) {
    GpModel m;
    m.hyper_ = hyper.floored();
    m.inputs_ = std::move(inputs);
    m.targets_ = std::move(targets);
    if (m.inputs_.empty()) {
        m.effective_noise_ = m.hyper_.noise_variance;
        return m;  // prior-only model
    }
    const Eigen::MatrixXd k = kernel_matrix(m.inputs_, m.hyper_);
    m.effective_noise_ =
        factorize_with_jitter(k, m.hyper_.noise_variance, m.hyper_.signal_variance, m.chol_);
    m.alpha_ = m.chol_.solve((m.targets_.array() - m.hyper_.beta).matrix().eval());
    return m;
}

GpModel::Posterior GpModel::posterior(const Vec2& query) const {
    if (inputs_.empty()) return {hyper_.beta, hyper_.signal_variance};
    const auto n = static_cast<Eigen::Index>(inputs_.size());
    Eigen::VectorXd kq(n);
    for (Eigen::Index i = 0; i < n; ++i)
        kq(i) = kernel(inputs_[static_cast<std::size_t>(i)], query, hyper_);
    const double mean = hyper_.beta + kq.dot(alpha_);
    const Eigen::VectorXd v = chol_.matrixL().solve(kq);
    const double var = hyper_.signal_variance - v.squaredNorm();
    return {mean, std::max(var, 0.0)};
}

double GpModel::posterior_mean(const Vec2& query) const {
    if (inputs_.empty()) return hyper_.beta;
    const auto n = static_cast<Eigen::Index>(inputs_.size());
    double acc = hyper_.beta;
    for (Eigen::Index i = 0; i < n; ++i)
        acc += kernel(inputs_[static_cast<std::size_t>(i)], query, hyper_) * alpha_(i);
    return acc;
}

double log_likelihood(const std::vector<Vec2>& inputs, const Eigen::VectorXd& targets,
                      const Hyperparameters& hyper) {
    const Hyperparameters h = hyper.floored();
    const auto n = static_cast<Eigen::Index>(inputs.size());
    const Eigen::MatrixXd k = kernel_matrix(inputs, h);
    Eigen::LLT<Eigen::MatrixXd> chol;
    factorize_with_jitter(k, h.noise_variance, h.signal_variance, chol);
    const Eigen::VectorXd r = targets.array() - h.beta;
    const Eigen::VectorXd alpha = chol.solve(r);
    const double logdet = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
    return -0.5 * r.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
}

double log_likelihood(const Dataset& data, const Hyperparameters& hyper) {
    return log_likelihood(positions_of(data), values_of(data), hyper);
}

Eigen::Matrix<double, 5, 1> log_likelihood_gradient(const std::vector<Vec2>& inputs,
                                                    const Eigen::VectorXd& targets,
                                                    const Hyperparameters& hyper) {
    const Hyperparameters h = hyper.floored();
    const auto n = static_cast<Eigen::Index>(inputs.size());
    FitWorkspace ws(inputs, targets);
    const Eigen::MatrixXd k = ws.kernel(h.signal_variance, h.length_scales.x(), h.length_scales.y());
    Eigen::MatrixXd c = k;
    c.diagonal().array() += h.noise_variance;
    Eigen::LLT<Eigen::MatrixXd> chol(c);
    if (chol.info() != Eigen::Success)
        throw SingularKernel("kernel matrix not positive definite in gradient evaluation");

    const Eigen::VectorXd r = targets.array() - h.beta;
    const Eigen::VectorXd alpha = chol.solve(r);
    const Eigen::MatrixXd a_inv = chol.solve(Eigen::MatrixXd::Identity(n, n));
    auto directional = [&](const Eigen::MatrixXd& dc) {
        return 0.5 * alpha.dot(dc * alpha) - 0.5 * a_inv.cwiseProduct(dc).sum();
    };
    const double tx = h.length_scales.x(), ty = h.length_scales.y();
    Eigen::Matrix<double, 5, 1> g;
    g << directional(k / h.signal_variance),
        directional(k.cwiseProduct(ws.dx2) / (tx * tx * tx)),
        directional(k.cwiseProduct(ws.dy2) / (ty * ty * ty)),
        0.5 * alpha.squaredNorm() - 0.5 * a_inv.trace(),
        alpha.sum();
    return g;
}

GpModel fit(const Dataset& data, const Hyperparameters& init, const FitBudget& budget,
            std::mt19937_64& rng) {
    if (data.empty()) throw std::invalid_argument("fit: empty dataset");
    std::vector<Vec2> inputs = positions_of(data);
    Eigen::VectorXd targets = values_of(data);

    if (data.size() == 1) return GpModel::build(std::move(inputs), std::move(targets), init);

    FitWorkspace ws(inputs, targets);
    const Hyperparameters init_floored = init.floored();
    LogParams z0;
    z0 << std::log(init_floored.signal_variance), std::log(init_floored.length_scales.x()),
        std::log(init_floored.length_scales.y()), std::log(init_floored.noise_variance);

    struct Start {
        LogParams z;
        Evaluation ev;
    };
    std::vector<Start> starts;
    starts.push_back({z0, evaluate(ws, z0, false)});
    std::normal_distribution<double> perturb(0.0, std::log(2.5));
    for (int s = 1; s < std::max(budget.starts, 1); ++s) {
        LogParams z = z0;
        for (int j = 0; j < 4; ++j) z[j] += perturb(rng);
        starts.push_back({z, evaluate(ws, z, false)});
    }

    std::stable_sort(starts.begin(), starts.end(),
                     [](const Start& a, const Start& b) { return a.ev.loglik > b.ev.loglik; });

    // Pilot-iterate the two most promising starts, then refine the winner.
    const int n_pilot = std::min<int>(2, static_cast<int>(starts.size()));
    for (int s = 0; s < n_pilot; ++s)
        starts[s].ev = ascend(ws, starts[s].z, starts[s].ev, budget.pilot_iterations);
    auto best = std::max_element(starts.begin(), starts.begin() + n_pilot,
                                 [](const Start& a, const Start& b) {
                                     return a.ev.loglik < b.ev.loglik;
                                 });
    best->ev = ascend(ws, best->z, best->ev, budget.refine_iterations);

    // The returned parameters are the best seen anywhere, including plain init.
    const Start* winner = &starts.front();
    for (const auto& s : starts)
        if (s.ev.loglik > winner->ev.loglik) winner = &s;

    Hyperparameters fitted;
    if (std::isfinite(winner->ev.loglik)) {
        fitted = params_from_log(winner->z);
        fitted.beta = winner->ev.beta;
    } else {
        fitted = init_floored;  // every evaluation failed; keep the caller's guess
    }
    return GpModel::build(std::move(inputs), std::move(targets), fitted);
}

Dataset downsample(const Dataset& data, std::size_t n_max, std::mt19937_64& rng,
                   double recent_window) {
    if (n_max < 1) throw std::invalid_argument("downsample: n_max must be >= 1");
    if (data.size() <= n_max) return data;

    // Newest observations per origin robot are protected from eviction.
    std::unordered_map<int, double> latest;
    for (const auto& o : data) {
        auto [it, fresh] = latest.try_emplace(o.origin_robot, o.time);
        if (!fresh) it->second = std::max(it->second, o.time);
    }
    std::vector<std::size_t> protected_idx, pool;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& o = data[i];
        if (latest[o.origin_robot] - o.time <= recent_window)
            protected_idx.push_back(i);
        else
            pool.push_back(i);
    }

    std::vector<std::size_t> keep;
    if (protected_idx.size() >= n_max) {
        std::sample(protected_idx.begin(), protected_idx.end(), std::back_inserter(keep), n_max,
                    rng);
    } else {
        keep = protected_idx;
        std::sample(pool.begin(), pool.end(), std::back_inserter(keep),
                    n_max - protected_idx.size(), rng);
    }
    std::sort(keep.begin(), keep.end());

    Dataset out;
    for (std::size_t i : keep) out.insert(data[i]);
    return out;
}

}  // namespace swarm
