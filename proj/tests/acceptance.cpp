// Acceptance suite: prints one [PASS]/[FAIL] line per criterion and exits
// with the number of failures. Criteria 6-8 replay the benchmark studies at
// desk scale and dominate the runtime; independent runs go on a small pool.
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "swarm/bench.hpp"
#include "swarm/sim.hpp"

using namespace swarm;
namespace fs = std::filesystem;

namespace {

struct Checker {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

int g_failures = 0;

void criterion(int id, const std::string& name, const std::function<void(Checker&)>& body) {
    Checker c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", id, name.c_str(), secs,
                c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
    if (!c.ok) ++g_failures;
}

/// Run n jobs on up to `workers` threads; each job touches only its slot.
void parallel_jobs(int n, int workers, const std::function<void(int)>& fn) {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, n); ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// --------------------------------------------------------------------------
// shared random-model helpers (same spirit as the unit-test fixtures)

struct RandomContext {
    GpModel model;
    AcquisitionContext ctx;
};

RandomContext make_random_context(std::mt19937_64& rng, int max_points, int quadrature_nodes) {
    std::uniform_real_distribution<double> pos(0.5, 9.5);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> n_points(2, max_points);
    std::uniform_int_distribution<int> n_peers(0, 3);

    RandomContext rc;
    const int n = n_points(rng);
    std::vector<Vec2> xs;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        xs.push_back({pos(rng), pos(rng)});
        y(i) = val(rng);
    }
    Hyperparameters h;
    h.signal_variance = 0.3 + unit(rng);
    h.length_scales = {0.5 + 2.0 * unit(rng), 0.5 + 2.0 * unit(rng)};
    h.noise_variance = 1e-4 + 1e-2 * unit(rng);
    h.beta = val(rng);
    rc.model = GpModel::build(xs, y, h);

    rc.ctx.model = &rc.model;
    rc.ctx.current_position = {pos(rng), pos(rng)};
    rc.ctx.alpha = unit(rng);
    rc.ctx.speed = 0.1;
    rc.ctx.horizon = 10.0;
    rc.ctx.arena = {{0.0, 0.0}, {10.0, 10.0}};
    rc.ctx.quadrature_nodes = quadrature_nodes;
    const int peers = n_peers(rng);
    for (int p = 0; p < peers; ++p) {
        const Vec2 a{pos(rng), pos(rng)};
        const double ang = 2.0 * std::numbers::pi * unit(rng);
        rc.ctx.peer_plans.push_back(
            {p + 1, a, a + unit(rng) * Vec2{std::cos(ang), std::sin(ang)}});
    }
    return rc;
}

RunConfig study_config() {
    RunConfig rc;
    rc.fit_budget = {5, 2, 8};
    return rc;
}

}  // namespace

// ---------------------------------------------------------------------------

int main() {
    criterion(1, "gp-oracle-equivalence", [](Checker& c) {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> pos(0.0, 5.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_int_distribution<int> size(1, 10);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = size(rng);
            std::vector<Vec2> xs;
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                xs.push_back({pos(rng), pos(rng)});
                y(i) = gauss(rng);
            }
            Hyperparameters h;
            h.signal_variance = 0.5 + 1.5 * unit(rng);
            h.length_scales = {0.3 + 2.0 * unit(rng), 0.3 + 2.0 * unit(rng)};
            h.noise_variance = 1e-3 + 0.1 * unit(rng);
            h.beta = gauss(rng);

            const GpModel m = GpModel::build(xs, y, h);
            const double ll = log_likelihood(xs, y, h);
            const double ll_oracle = oracle::log_likelihood(xs, y, h);
            c.expect(std::abs(ll - ll_oracle) <= 1e-10 * std::max(1.0, std::abs(ll_oracle)),
                     "loglik mismatch at trial " + std::to_string(trial));
            for (int q = 0; q < 3; ++q) {
                const Vec2 query{pos(rng), pos(rng)};
                const auto got = m.posterior(query);
                const auto want = oracle::posterior(xs, y, h, query);
                const double scale = std::max(1.0, std::abs(want.mean));
                c.expect(std::abs(got.mean - want.mean) <= 1e-10 * scale,
                         "posterior mean mismatch at trial " + std::to_string(trial));
                c.expect(std::abs(got.variance - std::max(want.variance, 0.0)) <=
                             1e-10 * std::max(1.0, std::abs(want.variance)),
                         "posterior variance mismatch at trial " + std::to_string(trial));
            }
            if (!c.ok) break;
        }
    });

    criterion(2, "acquisition-constraints", [](Checker& c) {
        std::mt19937_64 rng(77);
        int invariance_checked = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            auto rc = make_random_context(rng, 8, 16);
            const Vec2 wp = plan_waypoint(rc.ctx);
            const double step = (wp - rc.ctx.current_position).norm();
            c.expect(step >= 0.0 && step <= rc.ctx.max_step() + 1e-9,
                     "step bound violated at trial " + std::to_string(trial));
            c.expect(rc.ctx.arena.contains(wp, 1e-9),
                     "arena bound violated at trial " + std::to_string(trial));

            if (trial % 20 == 0) {
                ++invariance_checked;
                auto pure_exploit = rc.ctx;
                pure_exploit.alpha = 1.0;
                auto no_peers = pure_exploit;
                no_peers.peer_plans.clear();
                const Vec2 a = plan_waypoint(pure_exploit);
                const Vec2 b = plan_waypoint(no_peers);
                c.expect(a.x() == b.x() && a.y() == b.y(),
                         "alpha=1 not invariant to peer plans at trial " + std::to_string(trial));

                auto pure_explore = rc.ctx;
                pure_explore.alpha = 0.0;
                Eigen::VectorXd flipped = rc.model.targets();
                flipped = -flipped.array() + 0.5;  // moves the mean argmax
                const GpModel other =
                    GpModel::build(rc.model.inputs(), flipped, rc.model.hyper());
                auto ctx_other = pure_explore;
                ctx_other.model = &other;
                const Vec2 d = plan_waypoint(pure_explore);
                const Vec2 e = plan_waypoint(ctx_other);
                c.expect(d.x() == e.x() && d.y() == e.y(),
                         "alpha=0 not invariant to the mean argmax at trial " +
                             std::to_string(trial));
            }
            if (!c.ok) break;
        }
        c.expect(invariance_checked >= 50, "invariance subchecks did not run");
    });

    criterion(3, "quadrature-convergence", [](Checker& c) {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> pos(1.0, 9.0);
        for (int trial = 0; trial < 50; ++trial) {
            auto rc = make_random_context(rng, 8, 64);
            rc.ctx.alpha = 0.0;
            AcquisitionEvaluator eval(rc.ctx);
            const Vec2 target{pos(rng), pos(rng)};
            const double g64 = eval.knowledge_gain(target, 64);
            const double g128 = eval.knowledge_gain(target, 128);
            c.expect(std::abs(g128 - g64) <= 1e-3 * std::max(std::abs(g64), 1e-12),
                     "relative change " + fmt(std::abs(g128 - g64) / std::max(g64, 1e-12)) +
                         " at trial " + std::to_string(trial));
            if (!c.ok) break;
        }
    });

    criterion(4, "wire-format", [](Checker& c) {
        const BoundingBox arena{{0.0, 0.0}, {10.0, 10.0}};
        const ValueRange range{0.0, 4.0};
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> pos(0.0, 10.0);
        std::uniform_real_distribution<double> val(0.0, 4.0);
        std::uniform_int_distribution<int> n_obs(0, 80);

        Packet empty;
        empty.waypoint = {5.0, 5.0};
        c.expect(encode(empty, arena, range).size() == 4, "empty packet size");

        Packet full = empty;
        for (int i = 0; i < 60; ++i) full.observations.push_back({{pos(rng), pos(rng)}, val(rng)});
        c.expect(encode(full, arena, range).size() == 364, "60-observation packet size");

        const double pos_tol = arena.extent().x() / 65536.0;
        const double val_tol = range.span() / 65536.0;
        for (int trial = 0; trial < 1000; ++trial) {
            Packet p;
            p.sender = trial % 7;
            p.waypoint = {pos(rng), pos(rng)};
            const int n = n_obs(rng);
            for (int i = 0; i < n; ++i) p.observations.push_back({{pos(rng), pos(rng)}, val(rng)});
            const auto bytes = encode(p, arena, range);
            c.expect(bytes.size() == 4 + 6 * static_cast<std::size_t>(n), "packet size");
            const Packet q = decode(bytes, arena, range, p.sender, 0.0);
            c.expect(std::abs(q.waypoint.x() - p.waypoint.x()) <= pos_tol &&
                         std::abs(q.waypoint.y() - p.waypoint.y()) <= pos_tol,
                     "waypoint tolerance at trial " + std::to_string(trial));
            for (std::size_t i = 0; i < p.observations.size(); ++i) {
                c.expect(
                    (q.observations[i].position - p.observations[i].position).cwiseAbs().maxCoeff() <=
                            pos_tol &&
                        std::abs(q.observations[i].value - p.observations[i].value) <= val_tol,
                    "observation tolerance at trial " + std::to_string(trial));
            }
            if (!c.ok) break;
        }
    });

    criterion(5, "first-decision-geometry", [](Checker& c) {
        const double d = 0.4;  // 0.1 m/s for 4 s
        struct Case {
            int n;
            double dtheta;
        };
        for (const Case tc : {Case{1, 360.0}, Case{4, 360.0}, Case{2, 90.0}, Case{5, 120.0}}) {
            for (int r = 0; r < tc.n; ++r) {
                const Vec2 wp = take_first_decision(r, tc.n, tc.dtheta, 0.1, 4.0, {0.0, 0.0});
                const double want_deg = tc.dtheta == 360.0
                                            ? r * tc.dtheta / tc.n
                                            : (r + 1) * tc.dtheta / (tc.n + 1);
                const double want_rad = want_deg * std::numbers::pi / 180.0;
                const Vec2 want{d * std::cos(want_rad), d * std::sin(want_rad)};
                c.expect((wp - want).norm() <= 1e-12,
                         "angle mismatch at n=" + std::to_string(tc.n) + " r=" + std::to_string(r));
                c.expect(std::abs(wp.norm() - d) <= 1e-12, "segment length not V*T_first");
            }
        }
    });

    criterion(6, "study3-ordering", [](Checker& c) {
        struct Cell {
            int case_id;
            double bayes_time = 0.0;
            bool bayes_found = false;
            double exhaustive_time = 0.0;
            bool exhaustive_found = false;
        };
        std::vector<Cell> cells{{1}, {2}, {3}, {4}};
        parallel_jobs(static_cast<int>(cells.size()), 2, [&](int i) {
            Cell& cell = cells[static_cast<std::size_t>(i)];
            const CaseStudy cs = canonical_case(cell.case_id);
            const RunResult b = run(cs, BayesPolicy{0.4}, 5, 1, study_config());
            cell.bayes_time = b.completion_time;
            cell.bayes_found = b.outcome == Outcome::Found;
            const RunResult e = run(cs, ExhaustivePolicy{0.1}, 5, 1, study_config());
            cell.exhaustive_time = e.completion_time;
            cell.exhaustive_found = e.outcome == Outcome::Found;
        });
        for (const auto& cell : cells) {
            const std::string tag = "case " + std::to_string(cell.case_id);
            c.expect(cell.bayes_found, tag + ": search policy timed out");
            c.expect(cell.exhaustive_found, tag + ": exhaustive did not finish");
            c.expect(cell.bayes_time < cell.exhaustive_time,
                     tag + ": not faster than exhaustive (" + fmt(cell.bayes_time) + " vs " +
                         fmt(cell.exhaustive_time) + ")");
            if (cell.case_id != 2) {
                c.expect(cell.exhaustive_time >= 2.0 * cell.bayes_time,
                         tag + ": speedup below 2x (" + fmt(cell.exhaustive_time) + "/" +
                             fmt(cell.bayes_time) + ")");
            }
        }
    });

    criterion(7, "alpha-trend", [](Checker& c) {
        const CaseStudy cs = canonical_case(2);
        const double alphas[3] = {0.0, 0.4, 1.0};
        const std::uint64_t seeds[3] = {1, 2, 3};
        double err[3][3];
        parallel_jobs(9, 2, [&](int i) {
            const int ai = i / 3, si = i % 3;
            const RunResult r =
                run(cs, BayesPolicy{alphas[ai]}, 4, seeds[si], study_config());
            err[ai][si] = r.mapping_error;
        });
        double mean[3];
        for (int a = 0; a < 3; ++a) mean[a] = (err[a][0] + err[a][1] + err[a][2]) / 3.0;
        c.expect(std::isfinite(mean[0]) && std::isfinite(mean[1]) && std::isfinite(mean[2]),
                 "mapping error undefined");
        c.expect(mean[0] <= mean[1] + 1e-12,
                 "error(0)=" + fmt(mean[0]) + " > error(0.4)=" + fmt(mean[1]));
        c.expect(mean[1] <= mean[2] + 1e-12,
                 "error(0.4)=" + fmt(mean[1]) + " > error(1)=" + fmt(mean[2]));
        c.expect(mean[2] >= 1.5 * mean[0],
                 "error(1)=" + fmt(mean[2]) + " < 1.5 * error(0)=" + fmt(mean[0]));
    });

    criterion(8, "scalability-trend", [](Checker& c) {
        const CaseStudy cs = canonical_case(4);
        const int sizes[4] = {2, 5, 10, 20};
        double time[4], nd[4];
        bool found[4];
        parallel_jobs(4, 2, [&](int i) {
            const RunResult r = run(cs, BayesPolicy{0.4}, sizes[i], 1, study_config());
            time[i] = r.completion_time;
            found[i] = r.outcome == Outcome::Found;
            nd[i] = collect_metrics(r).mean_decisions;
        });
        for (int i = 0; i < 4; ++i)
            c.expect(found[i] || sizes[i] == 2,
                     "size " + std::to_string(sizes[i]) + " timed out");
        c.expect(time[3] < time[0], "time(20)=" + fmt(time[3]) + " !< time(2)=" + fmt(time[0]));
        c.expect(nd[3] < nd[0],
                 "decisions(20)=" + fmt(nd[3]) + " !< decisions(2)=" + fmt(nd[0]));
    });

    criterion(9, "termination-correctness", [](Checker& c) {
        // fixture budgets
        const double expected[4][2] = {{500, 4000}, {100, 50000}, {500, 60000}, {700, 60000}};
        for (int id = 1; id <= 4; ++id) {
            const CaseStudy cs = canonical_case(id);
            c.expect(cs.t_max_bayes == expected[id - 1][0] &&
                         cs.t_max_random == expected[id - 1][1],
                     "case " + std::to_string(id) + " budget mismatch");
            c.expect(cs.epsilon == 0.05, "epsilon is not 5 cm");
        }

        // found exactly when within epsilon
        const Vec2 src{1.0, 1.0};
        c.expect(check_termination({{1.0, 1.0495}}, src, 0.05, 0.0, 10.0) ==
                     TerminationStatus::Found,
                 "within epsilon not Found");
        c.expect(check_termination({{1.0, 1.0505}}, src, 0.05, 0.0, 10.0) ==
                     TerminationStatus::Continue,
                 "outside epsilon not Continue");
        c.expect(check_termination({{1.0, 1.0505}}, src, 0.05, 10.0, 10.0) ==
                     TerminationStatus::Timeout,
                 "budget exhausted not Timeout");
        c.expect(check_termination({{1.0, 1.05}}, src, 0.05, 10.0, 10.0) ==
                     TerminationStatus::Found,
                 "Found must win exact ties");

        // engine: a start inside the epsilon ball terminates immediately
        CaseStudy cs = canonical_case(1);
        cs.start = cs.field.global_max_location + Vec2{0.04, 0.0};
        RunConfig rc;
        rc.fit_budget = {2, 1, 2};
        const RunResult immediate = run(cs, BayesPolicy{0.4}, 2, 1, rc);
        c.expect(immediate.outcome == Outcome::Found && immediate.completion_time == 0.0,
                 "start within epsilon must be Found at t=0");

        // engine: zero budget and a distant source times out at t=0
        cs.start = canonical_case(1).start;
        rc.t_max = 0.0;
        const RunResult zero = run(cs, BayesPolicy{0.4}, 2, 1, rc);
        c.expect(zero.outcome == Outcome::Timeout && zero.completion_time == 0.0,
                 "zero budget must time out at t=0");

        // a run that times out reports exactly the configured budget
        rc.t_max = 30.0;
        const RunResult capped = run(cs, BayesPolicy{0.0}, 1, 1, rc);
        if (capped.outcome == Outcome::Timeout)
            c.expect(capped.completion_time == 30.0, "timeout must report t_max");
    });

    criterion(10, "determinism", [](Checker& c) {
        namespace sb = swarm::bench;
        const fs::path base = fs::temp_directory_path() / "swarmsearch_acceptance";
        fs::remove_all(base);

        auto read = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };

        sb::ExperimentConfig cfg;
        cfg.case_id = 2;
        cfg.policy = "bayes";
        cfg.alpha = 0.4;
        cfg.n_robots = 4;
        cfg.seeds = {7};

        // library runs under worker pools 1 and 8
        int codes[2];
        for (int i = 0; i < 2; ++i) {
            setenv("SWARMSEARCH_WORKERS", i == 0 ? "1" : "8", 1);
            cfg.out_dir = (base / ("run" + std::to_string(i))).string();
            codes[i] = sb::cmd_run(cfg);

            sb::ExperimentConfig sweep = cfg;
            sweep.alphas = {0.0, 0.4};
            sweep.seeds = {1, 2};
            sweep.overrides.t_max = 30.0;
            sweep.out_dir = (base / ("sweep" + std::to_string(i))).string();
            sb::cmd_sweep_alpha(sweep);
        }
        unsetenv("SWARMSEARCH_WORKERS");

        c.expect(codes[0] == 0, "case 2 with 4 robots must end in Found (exit 0)");
        c.expect(codes[0] == codes[1], "exit codes differ across pool sizes");
        for (const char* name : {"runlog.ndjson", "trajectory.csv", "metrics.json"})
            c.expect(read(base / "run0" / name) == read(base / "run1" / name),
                     std::string(name) + " differs across pool sizes");
        c.expect(read(base / "sweep0" / "sweep_alpha.csv") ==
                     read(base / "sweep1" / "sweep_alpha.csv"),
                 "sweep_alpha.csv differs across pool sizes");

        // the CLI end-to-end run agrees with the library
        const std::string cmd = std::string(SWARMSEARCH_CLI_PATH) +
                                " run --case 2 --policy bayes --alpha 0.4 --robots 4 --seed 7" +
                                " --out " + (base / "cli").string() + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        c.expect(WEXITSTATUS(status) == 0, "CLI run exit code");
        c.expect(read(base / "cli" / "runlog.ndjson") == read(base / "run0" / "runlog.ndjson"),
                 "CLI log differs from library log");
    });

    if (g_failures == 0)
        std::printf("acceptance: all criteria passed\n");
    else
        std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return g_failures;
}
