#include "swarm/acquisition.hpp"

#include <cmath>
#include <numbers>

namespace swarm {

namespace {

constexpr double kRefineStep = 1e-3;  // m; final compass-search resolution

double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    for (int i = index; i > 0; i /= base) {
        f /= base;
        r += f * (i % base);
    }
    return r;
}

/// Project onto the reachable disk, then clamp into the arena. The clamp is
/// non-expansive around any interior point, so the result stays feasible.
Vec2 project_feasible(Vec2 p, const Vec2& center, double radius, const BoundingBox& arena) {
    const Vec2 d = p - center;
    const double len = d.norm();
    if (len > radius) p = center + d * (radius / len);
    return arena.clamp(p);
}

}  // namespace

void AcquisitionContext::validate() const {
    if (model == nullptr) throw std::invalid_argument("acquisition: missing model");
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("acquisition: alpha outside [0,1]");
    if (speed <= 0.0 || horizon <= 0.0)
        throw std::invalid_argument("acquisition: speed and horizon must be positive");
    if (!arena.contains(current_position, 1e-9))
        throw std::invalid_argument("acquisition: current position outside arena");
    if (quadrature_nodes < 2) throw std::invalid_argument("acquisition: need >= 2 quadrature nodes");
}

Vec2 expected_source(const GpModel& model, const BoundingBox& arena, const Vec2& reference) {
    constexpr int kLattice = 50;
    const Vec2 ext = arena.extent();

    Vec2 best = reference;
    double best_val = model.posterior_mean(reference);
    auto consider = [&](const Vec2& p) {
        const double v = model.posterior_mean(p);
        const double tol = 1e-12 * std::max(1.0, std::abs(best_val));
        if (v > best_val + tol ||
            (std::abs(v - best_val) <= tol &&
             (p - reference).squaredNorm() < (best - reference).squaredNorm())) {
            best = p;
            best_val = v;
        }
    };
    for (int i = 0; i < kLattice; ++i)
        for (int j = 0; j < kLattice; ++j)
            consider({arena.lo.x() + ext.x() * i / (kLattice - 1),
                      arena.lo.y() + ext.y() * j / (kLattice - 1)});

    // local refinement from the winning cell
    double step = ext.maxCoeff() / (kLattice - 1) * 0.5;
    const double step_min = 1e-4 * std::max(ext.maxCoeff(), 1.0);
    while (step >= step_min) {
        bool moved = false;
        for (const Vec2& d : {Vec2{step, 0.0}, Vec2{-step, 0.0}, Vec2{0.0, step}, Vec2{0.0, -step}}) {
            const Vec2 p = arena.clamp(best + d);
            const double v = model.posterior_mean(p);
            if (v > best_val) {
                best = p;
                best_val = v;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    return best;
}

AcquisitionEvaluator::AcquisitionEvaluator(const AcquisitionContext& ctx) : ctx_(ctx) {
    ctx_.validate();
    if (ctx_.alpha > 0.0)
        source_ = expected_source(*ctx_.model, ctx_.arena, ctx_.current_position);
    if (ctx_.alpha < 1.0) ensure_conditioned();
}

void AcquisitionEvaluator::ensure_conditioned() {
    if (cond_.has_value()) return;
    const GpModel& m = *ctx_.model;
    cond_inputs_ = m.inputs();
    for (const auto& plan : ctx_.peer_plans)
        for (const auto& p : fantasy_points(plan, ctx_.speed, ctx_.sample_rate))
            cond_inputs_.push_back(p);

    const auto n = static_cast<Eigen::Index>(cond_inputs_.size());
    if (n == 0) {
        cond_.emplace();  // prior-only; conditioned_sd falls back to sigma_f
        return;
    }
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = m.hyper().signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v =
                kernel(cond_inputs_[static_cast<std::size_t>(i)],
                       cond_inputs_[static_cast<std::size_t>(j)], m.hyper());
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    cond_.emplace();
    factorize_with_jitter(k, m.effective_noise(), m.hyper().signal_variance, *cond_);
}

double AcquisitionEvaluator::conditioned_sd(const Vec2& x) const {
    const auto n = static_cast<Eigen::Index>(cond_inputs_.size());
    const double sf2 = ctx_.model->hyper().signal_variance;
    if (n == 0) return std::sqrt(sf2);
    Eigen::VectorXd kq(n);
    for (Eigen::Index i = 0; i < n; ++i)
        kq(i) = kernel(cond_inputs_[static_cast<std::size_t>(i)], x, ctx_.model->hyper());
    const Eigen::VectorXd v = cond_->matrixL().solve(kq);
    return std::sqrt(std::max(sf2 - v.squaredNorm(), 0.0));
}

const Vec2& AcquisitionEvaluator::source_estimate() const {
    if (!source_.has_value())
        throw std::logic_error("source estimate not computed for alpha = 0");
    return *source_;
}

double AcquisitionEvaluator::source_seeking(const Vec2& x) const {
    const Vec2 d = x - source_estimate();
    return 1.0 / (1.0 + d.squaredNorm());
}

double AcquisitionEvaluator::knowledge_gain(const Vec2& x, int nodes) const {
    if (nodes < 2) throw std::invalid_argument("knowledge_gain: need >= 2 quadrature nodes");
    const double length = (x - ctx_.current_position).norm();
    if (length == 0.0) return 0.0;

    // trapezoidal rule over u in [0,1], then scale by arc length
    const double h = 1.0 / (nodes - 1);
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double u = static_cast<double>(i) * h;
        const Vec2 p = u * x + (1.0 - u) * ctx_.current_position;
        const double w = (i == 0 || i == nodes - 1) ? 0.5 * h : h;
        acc += w * conditioned_sd(p);
    }
    return acc * length;
}

double AcquisitionEvaluator::normalized_gain(const Vec2& x, int nodes) const {
    const double scale = ctx_.max_step() * std::sqrt(ctx_.model->hyper().signal_variance);
    return scale > 0.0 ? knowledge_gain(x, nodes) / scale : 0.0;
}

double AcquisitionEvaluator::value(const Vec2& x) const {
    if (ctx_.alpha >= 1.0) return source_seeking(x);
    if (ctx_.alpha <= 0.0) return normalized_gain(x, ctx_.quadrature_nodes);
    return ctx_.alpha * source_seeking(x) +
           (1.0 - ctx_.alpha) * normalized_gain(x, ctx_.quadrature_nodes);
}

std::vector<Vec2> fantasy_points(const PendingPlan& plan, double speed, double sample_rate) {
    std::vector<Vec2> pts;
    const Vec2 d = plan.segment_end - plan.segment_start;
    const double length = d.norm();
    const double spacing = speed / sample_rate;
    const int count = static_cast<int>(std::floor(length / spacing + 1e-9));
    if (count <= 0) {
        pts.push_back(plan.segment_end);
        return pts;
    }
    const Vec2 dir = d / length;
    pts.reserve(static_cast<std::size_t>(count));
    for (int i = 1; i <= count; ++i) pts.push_back(plan.segment_start + dir * (spacing * i));
    return pts;
}

double source_seeking(const Vec2& x, const AcquisitionContext& ctx) {
    return AcquisitionEvaluator(ctx).source_seeking(x);
}

double knowledge_gain(const Vec2& x, const AcquisitionContext& ctx, int quadrature_nodes) {
    AcquisitionContext c = ctx;
    c.alpha = 0.0;  // only the conditioned factorization is needed
    return AcquisitionEvaluator(c).knowledge_gain(x, quadrature_nodes);
}

double acquisition_value(const Vec2& x, const AcquisitionContext& ctx) {
    return AcquisitionEvaluator(ctx).value(x);
}

Vec2 plan_waypoint(const AcquisitionContext& ctx) {
    ctx.validate();
    const AcquisitionEvaluator eval(ctx);
    const Vec2 c = ctx.current_position;
    const double r = ctx.max_step();

    std::vector<Vec2> seeds;
    seeds.reserve(34);
    for (int k = 0; k < 16; ++k) {
        const double a = 2.0 * std::numbers::pi * k / 16.0;
        seeds.push_back(c + r * Vec2{std::cos(a), std::sin(a)});
    }
    for (int k = 1; k <= 16; ++k) {
        const double rad = r * std::sqrt(halton(k, 2));
        const double a = 2.0 * std::numbers::pi * halton(k, 3);
        seeds.push_back(c + rad * Vec2{std::cos(a), std::sin(a)});
    }
    if (ctx.alpha > 0.0) seeds.push_back(eval.source_estimate());
    if (ctx.previous_position.has_value()) {
        const Vec2 d = c - *ctx.previous_position;
        if (d.norm() > 1e-12) seeds.push_back(c + r * d.normalized());
    }

    Vec2 best = project_feasible(c, c, r, ctx.arena);
    if (!ctx.arena.contains(best, 1e-9)) throw NoFeasiblePoint("empty feasible region");
    double best_val = eval.value(best);
    for (const auto& s : seeds) {
        const Vec2 p = project_feasible(s, c, r, ctx.arena);
        const double v = eval.value(p);
        if (v > best_val) {
            best = p;
            best_val = v;
        }
    }

    double step = r / 4.0;
    int evals = 0;
    while (step >= kRefineStep && evals < 400) {
        bool moved = false;
        for (const Vec2& d : {Vec2{step, 0.0}, Vec2{-step, 0.0}, Vec2{0.0, step}, Vec2{0.0, -step}}) {
            const Vec2 p = project_feasible(best + d, c, r, ctx.arena);
            const double v = eval.value(p);
            ++evals;
            if (v > best_val) {
                best = p;
                best_val = v;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    return best;
}

}  // namespace swarm
