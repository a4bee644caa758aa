#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "swarm/observation.hpp"

namespace swarm {

/// Thrown when the kernel matrix cannot be factorized even after jitter
/// escalation (degenerate duplicated inputs with near-zero noise).
struct SingularKernel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Kernel and mean-function parameters of the belief model. The covariance
/// is an anisotropic squared exponential over 2D positions and the prior
/// mean is a fitted constant.
struct Hyperparameters {
    double signal_variance = 1.0;    // sigma_f^2
    Vec2 length_scales{1.0, 1.0};    // per-axis
    double noise_variance = 1e-4;    // sigma_n^2
    double beta = 0.0;               // constant-basis coefficient

    /// Relative noise floor: sigma_n^2 is kept >= this fraction of sigma_f^2.
    static constexpr double kNoiseFloorRel = 1e-8;

    double noise_floor() const { return kNoiseFloorRel * signal_variance; }

    bool valid() const {
        return signal_variance > 0.0 && length_scales.x() > 0.0 &&
               length_scales.y() > 0.0 && noise_variance >= 0.0;
    }

    /// Copy with the noise floor applied.
    Hyperparameters floored() const {
        Hyperparameters h = *this;
        h.noise_variance = std::max(h.noise_variance, h.noise_floor());
        return h;
    }
};

/// k(a, b) = sigma_f^2 exp(-1/2 sum_d (a_d - b_d)^2 / theta_d^2)
double kernel(const Vec2& a, const Vec2& b, const Hyperparameters& hyper);

/// Iteration budget for the hyperparameter search. Starts are screened by
/// objective value, the two most promising get pilot iterations, and the
/// best of those is refined.
struct FitBudget {
    int starts = 5;
    int pilot_iterations = 3;
    int refine_iterations = 12;
};

/// Fitted model: hyperparameters plus the Cholesky factorization of
/// K + (sigma_n^2 + jitter) I over the training inputs. Immutable after
/// construction; posterior queries are const and thread-safe.
class GpModel {
public:
    GpModel() = default;

    /// Factorize for the given data and hyperparameters. Escalates additive
    /// jitter (relative to sigma_f^2) tenfold from the noise floor up to
    /// 1e-2 before failing with SingularKernel.
    static GpModel build(std::vector<Vec2> inputs, Eigen::VectorXd targets,
                         const Hyperparameters& hyper);

    struct Posterior {
        double mean;
        double variance;
    };

    /// Latent-function posterior at a query point. Variance excludes
    /// observation noise and is clamped at zero against round-off.
    Posterior posterior(const Vec2& query) const;
    double posterior_mean(const Vec2& query) const;

    const Hyperparameters& hyper() const { return hyper_; }
    const std::vector<Vec2>& inputs() const { return inputs_; }
    const Eigen::VectorXd& targets() const { return targets_; }
    std::size_t train_size() const { return inputs_.size(); }
    /// Additive diagonal actually used by the factorization (noise + jitter).
    double effective_noise() const { return effective_noise_; }
    const Eigen::LLT<Eigen::MatrixXd>& factorization() const { return chol_; }

private:
    Hyperparameters hyper_;
    std::vector<Vec2> inputs_;
    Eigen::VectorXd targets_;
    Eigen::LLT<Eigen::MatrixXd> chol_;    // of K + effective_noise * I
    Eigen::VectorXd alpha_;               // (K + eff I)^-1 (y - beta)
    double effective_noise_ = 0.0;
};

/// Factorize k + (noise + jitter) I into `chol`, escalating jitter tenfold
/// from the relative floor up to 1e-2 * signal_variance. Returns the
/// effective additive diagonal; throws SingularKernel when exhausted.
double factorize_with_jitter(const Eigen::MatrixXd& k, double noise, double signal_variance,
                             Eigen::LLT<Eigen::MatrixXd>& chol);

/// Log marginal likelihood of the targets under the model
///   -1/2 r^T C^-1 r - 1/2 log|C| - n/2 log(2 pi),
/// with r = y - beta and C = K + sigma_n^2 I.
double log_likelihood(const std::vector<Vec2>& inputs, const Eigen::VectorXd& targets,
                      const Hyperparameters& hyper);
double log_likelihood(const Dataset& data, const Hyperparameters& hyper);

/// Analytic gradient of log_likelihood in the order
/// (signal_variance, length_scale_x, length_scale_y, noise_variance, beta),
/// all with respect to the raw (non-log) parameters.
Eigen::Matrix<double, 5, 1> log_likelihood_gradient(const std::vector<Vec2>& inputs,
                                                    const Eigen::VectorXd& targets,
                                                    const Hyperparameters& hyper);

/// Maximum-likelihood refit. Multi-start ascent in log-parameter space with
/// the constant-basis coefficient profiled out in closed form at every
/// evaluation; the result is never worse than `init` in log-likelihood.
/// Single-observation datasets skip the search and keep `init`.
GpModel fit(const Dataset& data, const Hyperparameters& init, const FitBudget& budget,
            std::mt19937_64& rng);

/// Cap the dataset at n_max observations by uniform sampling without
/// replacement, always retaining each robot's observations from its most
/// recent `recent_window` seconds so local gradients survive.
Dataset downsample(const Dataset& data, std::size_t n_max, std::mt19937_64& rng,
                   double recent_window = 10.0);

}  // namespace swarm
