#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "swarm/gp.hpp"

namespace swarm {

/// Thrown if the reachable disk intersected with the arena is empty.
/// Cannot happen while the robot stays inside the arena; defensive.
struct NoFeasiblePoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A peer's in-flight path segment: last broadcast waypoint to next one.
struct PendingPlan {
    int robot_id = -1;
    Vec2 segment_start{0.0, 0.0};
    Vec2 segment_end{0.0, 0.0};
};

/// Everything one waypoint decision needs. Built per decision and never
/// shared; all operations on it are pure.
struct AcquisitionContext {
    const GpModel* model = nullptr;
    Vec2 current_position{0.0, 0.0};
    std::vector<PendingPlan> peer_plans;
    double alpha = 0.4;
    double speed = 0.1;        // m/s
    double horizon = 10.0;     // s
    BoundingBox arena;
    std::optional<Vec2> previous_position;  // enables the heading-continuation seed
    int quadrature_nodes = 32;
    double sample_rate = 1.0;  // Hz; sets the fantasy-point spacing on peer segments

    double max_step() const { return speed * horizon; }
    void validate() const;
};

/// Arena-wide maximizer of the posterior mean: 50x50 lattice scan plus local
/// refinement. Ties resolve toward the point nearest `reference`, which is
/// itself included as a candidate.
Vec2 expected_source(const GpModel& model, const BoundingBox& arena, const Vec2& reference);

/// Precomputes the per-decision expensive pieces: the expected source
/// location (only when alpha > 0) and the posterior factorization
/// conditioned on fantasy inputs along peer segments (only when alpha < 1).
class AcquisitionEvaluator {
public:
    explicit AcquisitionEvaluator(const AcquisitionContext& ctx);

    /// Inverse-quadratic pull toward the expected source, in (0, 1].
    double source_seeking(const Vec2& x) const;

    /// Arc-length integral of the conditioned posterior standard deviation
    /// along the straight path from the current position to x.
    double knowledge_gain(const Vec2& x, int nodes) const;

    /// knowledge_gain mapped into ~[0,1] by the maximum path length and the
    /// prior standard deviation.
    double normalized_gain(const Vec2& x, int nodes) const;

    /// alpha * h + (1 - alpha) * g_normalized, with the degenerate alphas
    /// evaluating only their own term.
    double value(const Vec2& x) const;

    const Vec2& source_estimate() const;
    /// Conditioned posterior standard deviation at a point.
    double conditioned_sd(const Vec2& x) const;

private:
    const AcquisitionContext& ctx_;
    std::optional<Vec2> source_;                       // set when alpha > 0
    std::vector<Vec2> cond_inputs_;                    // training + fantasy
    std::optional<Eigen::LLT<Eigen::MatrixXd>> cond_;  // set when alpha < 1 or on demand
    void ensure_conditioned() ;
};

double source_seeking(const Vec2& x, const AcquisitionContext& ctx);
double knowledge_gain(const Vec2& x, const AcquisitionContext& ctx, int quadrature_nodes);
double acquisition_value(const Vec2& x, const AcquisitionContext& ctx);

/// Maximize the acquisition over the reachable disk intersected with the
/// arena: 30+ deterministic seeds followed by a shrinking-step compass
/// search down to 1e-3 m. The returned point never violates the step bound
/// or the arena, and scores at least as well as every seed.
Vec2 plan_waypoint(const AcquisitionContext& ctx);

/// Fantasy input locations a peer will observe along its pending segment,
/// spaced by one sampling interval; a too-short segment contributes its
/// endpoint.
std::vector<Vec2> fantasy_points(const PendingPlan& plan, double speed, double sample_rate);

}  // namespace swarm
