#include "swarm/sim.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "swarm/version.hpp"

namespace swarm {

using nlohmann::json;

void RunConfig::validate() const {
    if (speed <= 0.0) throw std::invalid_argument("config: speed must be positive");
    if (t_first <= 0.0 || t_later <= 0.0)
        throw std::invalid_argument("config: decision horizons must be positive");
    if (n_max < 1) throw std::invalid_argument("config: n_max must be >= 1");
    if (delta_theta <= 0.0 || delta_theta > 360.0)
        throw std::invalid_argument("config: delta_theta must be in (0, 360]");
    if (quadrature_nodes < 2) throw std::invalid_argument("config: quadrature_nodes must be >= 2");
    if (sample_rate <= 0.0) throw std::invalid_argument("config: sample_rate must be positive");
    if (sim_dt <= 0.0) throw std::invalid_argument("config: sim_dt must be positive");
    if (mapping_lattice < 2) throw std::invalid_argument("config: mapping_lattice must be >= 2");
    if (epsilon.has_value() && *epsilon <= 0.0)
        throw std::invalid_argument("config: epsilon must be positive");
}

Vec2 random_walk_step(const Vec2& position, double speed, double horizon,
                      const BoundingBox& arena, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const double a = angle(rng);
    return reflect_into(position + speed * horizon * Vec2{std::cos(a), std::sin(a)}, arena);
}

namespace {

std::vector<Vec2> serpentine(const BoundingBox& cell, double swath) {
    const double height = cell.hi.y() - cell.lo.y();
    const int rows = static_cast<int>(std::floor(height / swath + 1e-6)) + 1;
    std::vector<Vec2> wps;
    wps.reserve(static_cast<std::size_t>(rows) * 2 + 2);
    for (int j = 0; j < rows; ++j) {
        const double y = cell.lo.y() + j * swath;
        if (j % 2 == 0) {
            wps.push_back({cell.lo.x(), y});
            wps.push_back({cell.hi.x(), y});
        } else {
            wps.push_back({cell.hi.x(), y});
            wps.push_back({cell.lo.x(), y});
        }
    }
    // close the residual gap below the top edge, if any
    if (cell.lo.y() + (rows - 1) * swath < cell.hi.y() - 1e-9) {
        const double y = cell.hi.y();
        if ((rows - 1) % 2 == 0) {
            wps.push_back({cell.lo.x(), y});
            wps.push_back({cell.hi.x(), y});
        } else {
            wps.push_back({cell.hi.x(), y});
            wps.push_back({cell.lo.x(), y});
        }
    }
    return wps;
}

}  // namespace

std::vector<std::vector<Vec2>> exhaustive_plan(const BoundingBox& arena, int n_robots,
                                               double swath) {
    if (n_robots < 1) throw std::invalid_argument("exhaustive_plan: need at least one robot");
    if (swath <= 0.0) throw std::invalid_argument("exhaustive_plan: swath must be positive");

    std::vector<std::vector<Vec2>> routes;
    if (n_robots == 4) {
        const Vec2 mid = arena.center();
        for (int col = 0; col < 2; ++col) {
            for (int row = 0; row < 2; ++row) {
                BoundingBox cell;
                cell.lo = {col == 0 ? arena.lo.x() : mid.x(), row == 0 ? arena.lo.y() : mid.y()};
                cell.hi = {col == 0 ? mid.x() : arena.hi.x(), row == 0 ? mid.y() : arena.hi.y()};
                routes.push_back(serpentine(cell, swath));
            }
        }
        return routes;
    }
    const double width = arena.extent().x() / n_robots;
    for (int i = 0; i < n_robots; ++i) {
        BoundingBox strip;
        strip.lo = {arena.lo.x() + i * width, arena.lo.y()};
        strip.hi = {arena.lo.x() + (i + 1) * width, arena.hi.y()};
        routes.push_back(serpentine(strip, swath));
    }
    return routes;
}

// ---------------------------------------------------------------------------
// engine

namespace {

struct Leg {
    Vec2 from{0.0, 0.0};
    Vec2 to{0.0, 0.0};
    double depart = 0.0;
    double arrive = 0.0;

    Vec2 position_at(double t) const {
        const double len = (to - from).norm();
        if (len == 0.0 || t <= depart) return from;
        if (t >= arrive) return to;
        return from + (to - from) * ((t - depart) / (arrive - depart));
    }
};

struct Robot {
    AgentState state;
    Leg leg;
    bool moving = false;                // false once an exhaustive route is finished
    std::vector<Vec2> route;            // exhaustive only
    std::size_t route_next = 0;
    std::vector<Observation> last_leg_obs;
};

class Engine {
public:
    Engine(const CaseStudy& cs, const Policy& policy, int n_robots, std::uint64_t seed,
           const RunConfig& config)
        : cs_(cs), policy_(policy), n_robots_(n_robots), seed_(seed), cfg_(config) {
        cfg_.validate();
        if (n_robots_ < 1) throw std::invalid_argument("run: need at least one robot");
        if (const auto* b = std::get_if<BayesPolicy>(&policy_))
            if (b->alpha < 0.0 || b->alpha > 1.0)
                throw std::invalid_argument("run: alpha outside [0,1]");

        epsilon_ = cfg_.epsilon.value_or(cs_.epsilon);
        noise_sd_ = cfg_.noise_sd.value_or(cs_.noise_sd);

        double amp_sum = 0.0;
        for (const auto& c : cs_.field.components) amp_sum += c.amplitude;
        value_range_ = {std::min(0.0, -10.0 * noise_sd_), amp_sum * 1.01 + 10.0 * noise_sd_};

        if (std::holds_alternative<ExhaustivePolicy>(policy_)) {
            const double swath = std::get<ExhaustivePolicy>(policy_).swath;
            routes_ = exhaustive_plan(cs_.field.arena, n_robots_, swath);
            double longest = 0.0;
            for (int r = 0; r < n_robots_; ++r) {
                double len = (routes_[r].front() - cs_.start).norm();
                for (std::size_t i = 1; i < routes_[r].size(); ++i)
                    len += (routes_[r][i] - routes_[r][i - 1]).norm();
                longest = std::max(longest, len);
            }
            default_t_max_ = 1.05 * longest / cfg_.speed;
        } else if (std::holds_alternative<RandomWalkPolicy>(policy_)) {
            default_t_max_ = cs_.t_max_random;
        } else {
            default_t_max_ = cs_.t_max_bayes;
        }
        t_max_ = cfg_.t_max.value_or(default_t_max_);
    }

    RunResult execute() {
        init_robots();
        queue_.push(t_max_, TickEvent{});

        bool done = false;
        while (!queue_.empty() && !done) {
            const double t_event = queue_.top().time;
            done = scan_termination(t_event);
            if (done) break;
            const SimEvent ev = queue_.pop();
            if (ev.time > t_max_) break;
            std::visit([&](const auto& e) { handle(ev.time, e); }, ev.kind);
        }
        if (!done) scan_termination(t_max_ + cfg_.sim_dt);

        finalize();
        return std::move(result_);
    }

private:
    // --- setup -------------------------------------------------------------

    void init_robots() {
        result_.t_max_used = t_max_;
        result_.per_robot.resize(static_cast<std::size_t>(n_robots_));
        trajectory_ = "robot,t,x,y,value\n";

        log_config();
        robots_.resize(static_cast<std::size_t>(n_robots_));
        for (int r = 0; r < n_robots_; ++r) {
            Robot& rb = robots_[static_cast<std::size_t>(r)];
            rb.state.robot_id = r;
            rb.state.position = cs_.start;
            std::seed_seq sseq{static_cast<std::uint64_t>(r), seed_, std::uint64_t{0x5157}};
            rb.state.rng.seed(sseq);
            if (const auto* b = std::get_if<BayesPolicy>(&policy_)) rb.state.alpha = b->alpha;
            rb.moving = true;
        }

        for (int r = 0; r < n_robots_; ++r) {
            Robot& rb = robots_[static_cast<std::size_t>(r)];
            Vec2 wp;
            if (std::holds_alternative<ExhaustivePolicy>(policy_)) {
                rb.route = routes_[static_cast<std::size_t>(r)];
                wp = rb.route[0];
                rb.route_next = 1;
            } else {
                wp = cs_.field.arena.clamp(take_first_decision(
                    r, n_robots_, cfg_.delta_theta, cfg_.speed, cfg_.t_first, cs_.start));
            }
            rb.state.iteration = 1;
            rb.state.next_waypoint = wp;
            result_.per_robot[static_cast<std::size_t>(r)].decisions = 1;
            log_decision(0.0, r, 0, wp, std::nullopt, std::nullopt);
            if (std::holds_alternative<BayesPolicy>(policy_))
                broadcast(0.0, rb, {});  // waypoint-only packet
            depart(rb, 0.0, wp);
        }
    }

    // --- event handlers ------------------------------------------------------

    void handle(double t, const ArrivalEvent& ev) {
        Robot& rb = robots_[static_cast<std::size_t>(ev.robot)];
        const Leg leg = rb.leg;
        rb.state.previous_position = leg.from;
        rb.state.position = leg.to;

        // samples gathered over the finished leg
        std::vector<Observation> own;
        if ((leg.to - leg.from).norm() > 0.0) {
            own = sample_along(cs_.field, leg.from, leg.to, cfg_.speed, cfg_.sample_rate,
                               leg.depart, noise_sd_, rb.state.rng, ev.robot);
        } else {
            // hovering: one stationary observation per waiting interval
            std::normal_distribution<double> noise(0.0, noise_sd_);
            Observation o;
            o.position = leg.to;
            o.value = cs_.field.value(leg.to) + (noise_sd_ > 0.0 ? noise(rb.state.rng) : 0.0);
            o.time = t;
            o.origin_robot = ev.robot;
            own.push_back(o);
        }
        for (const auto& o : own) append_trajectory(ev.robot, o);
        rb.last_leg_obs = own;

        if (std::holds_alternative<BayesPolicy>(policy_)) {
            for (const auto& o : own) rb.state.dataset.insert(o);
            arrive_bayes(t, rb);
        } else if (std::holds_alternative<RandomWalkPolicy>(policy_)) {
            const Vec2 wp = random_walk_step(rb.state.position, cfg_.speed, cfg_.t_later,
                                             cs_.field.arena, rb.state.rng);
            rb.state.iteration += 1;
            commit_decision(t, rb, wp, std::nullopt, std::nullopt);
        } else {
            if (rb.route_next < rb.route.size()) {
                const Vec2 wp = rb.route[rb.route_next++];
                rb.state.iteration += 1;
                commit_decision(t, rb, wp, std::nullopt, std::nullopt);
            } else {
                rb.moving = false;  // route finished; park
            }
        }
    }

    void arrive_bayes(double t, Robot& rb) {
        DecisionOptions opts;
        opts.n_max = cfg_.n_max;
        opts.quadrature_nodes = cfg_.quadrature_nodes;
        opts.sample_rate = cfg_.sample_rate;
        opts.recent_window = cfg_.t_later;
        opts.fit_budget = cfg_.fit_budget;

        const Vec2 wp = take_decision(rb.state, cfg_.speed, cfg_.t_later, cs_.field.arena, opts);

        // raw knowledge gain of the chosen leg, logged for every alpha
        AcquisitionContext ctx;
        ctx.model = &*rb.state.model;
        ctx.current_position = rb.state.position;
        for (const auto& [id, plan] : rb.state.peer_table) ctx.peer_plans.push_back(plan);
        ctx.alpha = 0.0;
        ctx.speed = cfg_.speed;
        ctx.horizon = cfg_.t_later;
        ctx.arena = cs_.field.arena;
        ctx.quadrature_nodes = cfg_.quadrature_nodes;
        ctx.sample_rate = cfg_.sample_rate;
        const double g = AcquisitionEvaluator(ctx).knowledge_gain(wp, cfg_.quadrature_nodes);

        auto& stats = result_.per_robot[static_cast<std::size_t>(rb.state.robot_id)];
        stats.knowledge_gain_total += g;
        commit_decision(t, rb, wp, g, rb.state.dataset.size());
        broadcast(t + cfg_.decision_latency, rb, rb.last_leg_obs);
    }

    void commit_decision(double t, Robot& rb, const Vec2& wp, std::optional<double> g,
                         std::optional<std::size_t> n_train) {
        result_.per_robot[static_cast<std::size_t>(rb.state.robot_id)].decisions += 1;
        rb.state.next_waypoint = wp;
        log_decision(t, rb.state.robot_id, rb.state.iteration - 1, wp, g, n_train);
        depart(rb, t + cfg_.decision_latency, wp);
    }

    void depart(Robot& rb, double t, const Vec2& wp) {
        const double dist = (wp - rb.state.position).norm();
        rb.leg.from = rb.state.position;
        rb.leg.depart = t;
        if (dist <= cfg_.speed * cfg_.sim_dt) {
            // within one kinematic step: hover and re-decide after a sampling interval
            rb.leg.to = rb.state.position;
            rb.leg.arrive = t + 1.0 / cfg_.sample_rate;
        } else {
            rb.leg.to = wp;
            rb.leg.arrive = t + dist / cfg_.speed;
        }
        queue_.push(rb.leg.arrive, ArrivalEvent{rb.state.robot_id});
    }

    void broadcast(double t, Robot& rb, const std::vector<Observation>& obs) {
        Packet p;
        p.sender = rb.state.robot_id;
        p.waypoint = *rb.state.next_waypoint;
        p.observations = obs;
        p.send_time = t;
        const auto bytes = encode(p, cs_.field.arena, value_range_);
        result_.per_robot[static_cast<std::size_t>(rb.state.robot_id)].bytes_sent += bytes.size();
        log_event({{"event", "broadcast"},
                   {"t", t},
                   {"robot", rb.state.robot_id},
                   {"bytes", bytes.size()},
                   {"n_obs", obs.size()}});
        if (n_robots_ == 1) return;
        const Packet delivered = decode(bytes, cs_.field.arena, value_range_, p.sender, t);
        for (int r = 0; r < n_robots_; ++r) {
            if (r == rb.state.robot_id) continue;
            queue_.push(t + cfg_.delivery_latency, DeliveryEvent{delivered, r});
        }
    }

    void handle(double t, const DeliveryEvent& ev) {
        Robot& rb = robots_[static_cast<std::size_t>(ev.recipient)];
        receive_information(rb.state, ev.packet);
        log_event({{"event", "delivery"},
                   {"t", t},
                   {"from", ev.packet.sender},
                   {"to", ev.recipient},
                   {"n_obs", ev.packet.observations.size()}});
    }

    void handle(double, const TickEvent&) {}  // exists to pin the t_max scan

    // --- termination ---------------------------------------------------------

    /// Advance the 1 ms termination grid up to min(t_to, t_max). Sets the
    /// outcome and returns true once the run is over. Found wins ties with
    /// the time limit on the same tick.
    bool scan_termination(double t_to) {
        const double dt = cfg_.sim_dt;
        const double t_stop = std::min(t_to, t_max_);
        const auto k_end = static_cast<std::int64_t>(std::floor(t_stop / dt + 1e-9));

        std::int64_t found_k = std::numeric_limits<std::int64_t>::max();
        int found_robot = -1;
        for (int r = 0; r < n_robots_; ++r) {
            const auto k = earliest_hit(robots_[static_cast<std::size_t>(r)].leg, next_scan_k_,
                                        k_end, dt);
            if (k.has_value() && *k < found_k) {
                found_k = *k;
                found_robot = r;
            }
        }
        if (found_robot >= 0) {
            result_.outcome = Outcome::Found;
            result_.completion_time = static_cast<double>(found_k) * dt;
            result_.found_by = found_robot;
            return true;
        }
        next_scan_k_ = k_end + 1;
        if (t_to >= t_max_) {
            result_.outcome = Outcome::Timeout;
            result_.completion_time = t_max_;
            result_.found_by = -1;
            return true;
        }
        return false;
    }

    /// Earliest tick k in [k_from, k_end] with the robot within epsilon of
    /// the source. The robot sits at leg.from until depart, moves linearly,
    /// then parks at leg.to, so the within-epsilon times form up to three
    /// closed windows that are solved exactly and then snapped to the grid.
    std::optional<std::int64_t> earliest_hit(const Leg& leg, std::int64_t k_from,
                                             std::int64_t k_end, double dt) const {
        if (k_from > k_end) return std::nullopt;
        const Vec2 src = cs_.field.global_max_location;
        const double eps2 = epsilon_ * epsilon_;
        auto hit = [&](double t) { return (leg.position_at(t) - src).squaredNorm() <= eps2; };

        std::pair<double, double> windows[3];
        int n_windows = 0;
        const double inf = std::numeric_limits<double>::infinity();
        if ((leg.from - src).squaredNorm() <= eps2) windows[n_windows++] = {0.0, leg.depart};

        const double duration = leg.arrive - leg.depart;
        const double len = (leg.to - leg.from).norm();
        if (len > 0.0 && duration > 0.0) {
            const Vec2 vel = (leg.to - leg.from) / duration;
            const Vec2 w = leg.from - src;
            const double c2 = vel.squaredNorm();
            const double c1 = 2.0 * w.dot(vel);
            const double disc = c1 * c1 - 4.0 * c2 * (w.squaredNorm() - eps2);
            if (disc >= 0.0) {
                const double root = std::sqrt(disc);
                const double a = std::max(leg.depart + (-c1 - root) / (2.0 * c2), leg.depart);
                const double b = std::min(leg.depart + (-c1 + root) / (2.0 * c2), leg.arrive);
                if (b >= a) windows[n_windows++] = {a, b};
            }
        }
        if ((leg.to - src).squaredNorm() <= eps2) windows[n_windows++] = {leg.arrive, inf};

        std::optional<std::int64_t> best;
        for (int i = 0; i < n_windows; ++i) {
            const auto [a, b] = windows[i];
            auto k = std::max(k_from, static_cast<std::int64_t>(std::ceil(a / dt - 1e-9)));
            // verify on grid; a couple of extra ticks absorb boundary rounding
            for (int tries = 0; k <= k_end && static_cast<double>(k) * dt <= b + dt && tries < 4;
                 ++k, ++tries) {
                if (hit(static_cast<double>(k) * dt)) {
                    if (!best.has_value() || k < *best) best = k;
                    break;
                }
            }
        }
        return best;
    }

    // --- wrap-up -------------------------------------------------------------

    void finalize() {
        if (std::holds_alternative<BayesPolicy>(policy_)) {
            double sum = 0.0;
            int counted = 0;
            for (auto& rb : robots_) {
                auto& stats = result_.per_robot[static_cast<std::size_t>(rb.state.robot_id)];
                if (rb.state.model.has_value()) {
                    stats.has_model = true;
                    stats.mapping_error =
                        mapping_error(*rb.state.model, cs_.field, cfg_.mapping_lattice);
                    sum += stats.mapping_error;
                    ++counted;
                }
            }
            if (counted > 0) result_.mapping_error = sum / counted;
        }
        json term{{"event", "termination"},
                  {"t", result_.completion_time},
                  {"outcome", result_.outcome == Outcome::Found ? "found" : "timeout"}};
        if (result_.found_by >= 0) term["robot"] = result_.found_by;
        if (std::isfinite(result_.mapping_error)) term["mapping_error"] = result_.mapping_error;
        log_event(term);
        result_.trajectory_csv = std::move(trajectory_);
    }

    // --- logging ---------------------------------------------------------------

    void log_event(const json& j) { result_.log_lines.push_back(j.dump()); }

    void log_config() {
        json pj;
        if (const auto* b = std::get_if<BayesPolicy>(&policy_))
            pj = {{"name", "bayes"}, {"alpha", b->alpha}};
        else if (std::holds_alternative<RandomWalkPolicy>(policy_))
            pj = {{"name", "random"}};
        else
            pj = {{"name", "exhaustive"}, {"swath", std::get<ExhaustivePolicy>(policy_).swath}};
        log_event({{"event", "run_config"},
                   {"version", kVersion},
                   {"case", cs_.id},
                   {"policy", pj},
                   {"n_robots", n_robots_},
                   {"seed", seed_},
                   {"t_max", t_max_},
                   {"epsilon", epsilon_},
                   {"noise_sd", noise_sd_},
                   {"speed", cfg_.speed},
                   {"t_first", cfg_.t_first},
                   {"t_later", cfg_.t_later},
                   {"n_max", cfg_.n_max},
                   {"delta_theta", cfg_.delta_theta}});
    }

    void log_decision(double t, int robot, int k, const Vec2& wp, std::optional<double> g,
                      std::optional<std::size_t> n_train) {
        json j{{"event", "decision"},
               {"t", t},
               {"robot", robot},
               {"k", k},
               {"waypoint", {wp.x(), wp.y()}}};
        if (g.has_value()) j["g"] = *g;
        if (n_train.has_value()) j["n_train"] = *n_train;
        log_event(j);
    }

    void append_trajectory(int robot, const Observation& o) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%.3f,%.9f,%.9f,%.9f\n", robot, o.time, o.position.x(),
                      o.position.y(), o.value);
        trajectory_ += buf;
    }

    const CaseStudy& cs_;
    Policy policy_;
    int n_robots_;
    std::uint64_t seed_;
    RunConfig cfg_;

    double epsilon_ = 0.05;
    double noise_sd_ = 0.0;
    double t_max_ = 0.0;
    double default_t_max_ = 0.0;
    ValueRange value_range_;
    std::vector<std::vector<Vec2>> routes_;

    std::vector<Robot> robots_;
    EventQueue queue_;
    std::int64_t next_scan_k_ = 0;
    RunResult result_;
    std::string trajectory_;
};

}  // namespace

RunResult run(const CaseStudy& cs, const Policy& policy, int n_robots, std::uint64_t seed,
              const RunConfig& config) {
    Engine engine(cs, policy, n_robots, seed, config);
    return engine.execute();
}

Metrics collect_metrics(const RunResult& result) {
    Metrics m;
    m.outcome = result.outcome == Outcome::Found ? "found" : "timeout";
    m.completion_time = result.completion_time;
    m.n_robots = static_cast<int>(result.per_robot.size());
    double dec = 0.0, kg = 0.0;
    for (const auto& r : result.per_robot) {
        dec += r.decisions;
        kg += r.knowledge_gain_total;
        m.total_bytes += r.bytes_sent;
    }
    if (m.n_robots > 0) {
        m.mean_decisions = dec / m.n_robots;
        m.mean_knowledge_gain = kg / m.n_robots;
    }
    m.mapping_error = result.mapping_error;
    return m;
}

}  // namespace swarm
