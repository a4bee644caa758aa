#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swarm/sim.hpp"

namespace swarm::bench {

/// Optional overrides of the per-run defaults; absent fields keep the
/// built-in values (speed 0.1 m/s, horizons 4 s / 10 s, n_max 400,
/// epsilon from the case, delta_theta 360).
struct Overrides {
    std::optional<double> speed;
    std::optional<double> t_first;
    std::optional<double> t_later;
    std::optional<std::uint64_t> n_max;
    std::optional<double> epsilon;
    std::optional<int> quadrature_nodes;
    std::optional<double> delta_theta;
    std::optional<double> t_max;
    std::optional<double> noise_sd;
    std::optional<double> swath;
    std::optional<int> mapping_lattice;
};

/// One experiment description: a single run or a sweep.
struct ExperimentConfig {
    int case_id = 1;
    std::string policy = "bayes";  // bayes | random | exhaustive
    double alpha = 0.4;
    int n_robots = 5;
    std::vector<double> alphas;        // sweep-alpha cells
    std::vector<int> sizes;            // sweep-size cells
    std::vector<std::uint64_t> seeds;  // default {1}
    std::string out_dir = "out";
    std::string cases_path;            // empty: embedded definitions

    std::string to_json_text() const;
    static ExperimentConfig from_json_text(const std::string& text);

    Overrides overrides;

    void validate() const;
    /// Apply one `key=value` override; throws on unknown keys or bad values.
    void apply_override(const std::string& key_value);
};

CaseStudy resolve_case(const ExperimentConfig& cfg);
RunConfig resolve_run_config(const ExperimentConfig& cfg);
Policy resolve_policy(const ExperimentConfig& cfg);

/// Worker-pool width: SWARMSEARCH_WORKERS when set, else the hardware
/// concurrency. Sweep cells run in parallel; output order never depends on
/// the pool width.
int worker_count();

/// Single run. Writes runlog.ndjson, trajectory.csv and metrics.json under
/// out_dir. Returns 0 on Found, 2 on Timeout.
int cmd_run(const ExperimentConfig& cfg);

/// Study of the exploitation coefficient: one run per (alpha, seed), plus a
/// per-alpha summary row. Writes sweep_alpha.csv.
int cmd_sweep_alpha(const ExperimentConfig& cfg);

/// Swarm-size scaling study: one run per (size, seed). Writes sweep_size.csv.
int cmd_sweep_size(const ExperimentConfig& cfg);

/// Three-way comparison on one case: the GP policy (first seed), random walk
/// (all seeds, best time reported), exhaustive coverage. Writes compare.csv
/// and prints the speedup ratios.
int cmd_compare(const ExperimentConfig& cfg);

/// Hex dump of an encoded packet, for wire-format debugging.
int cmd_dump_packet(int case_id, const Vec2& waypoint,
                    const std::vector<Observation>& observations);

}  // namespace swarm::bench
