#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swarm/bench.hpp"
#include "swarm/version.hpp"

namespace {

swarm::Vec2 parse_point(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("expected x,y: " + s);
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"swarmsearch: decentralized swarm source-search simulator"};
    app.set_version_flag("--version", swarm::kVersion);
    app.require_subcommand(1);

    swarm::bench::ExperimentConfig cfg;
    cfg.seeds = {1};
    std::vector<std::string> overrides;
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--case", cfg.case_id, "case study id (1-4)")->required();
        sub->add_option("--robots", cfg.n_robots, "swarm size");
        sub->add_option("--alpha", cfg.alpha, "exploitation coefficient in [0,1]");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--cases", cfg.cases_path, "case definitions JSON (default: embedded)");
        sub->add_option("--override", overrides, "parameter override key=value (repeatable)");
        sub->add_option("--seeds", seeds, "seed list");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& v) { seed = v; seed_set = true; }, "single seed");
    };

    auto* c_run = app.add_subcommand("run", "single simulation run");
    c_run->add_option("--policy", cfg.policy, "bayes | random | exhaustive");
    add_common(c_run);

    auto* c_alpha = app.add_subcommand("sweep-alpha", "sweep the exploitation coefficient");
    c_alpha->add_option("--alphas", cfg.alphas, "alpha values")->required();
    add_common(c_alpha);

    auto* c_size = app.add_subcommand("sweep-size", "sweep the swarm size");
    c_size->add_option("--sizes", cfg.sizes, "swarm sizes")->required();
    add_common(c_size);

    auto* c_cmp = app.add_subcommand("compare", "compare policies on one case");
    add_common(c_cmp);

    auto* c_dump = app.add_subcommand("dump-packet", "hex-dump an encoded packet");
    int dump_case = 1;
    std::string dump_waypoint = "0,0";
    std::vector<std::string> dump_obs;
    c_dump->add_option("--case", dump_case, "case id fixing arena and value range")->required();
    c_dump->add_option("--waypoint", dump_waypoint, "waypoint as x,y")->required();
    c_dump->add_option("--obs", dump_obs, "observation as x,y,value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // errors map to 1; --help/--version stay 0
    }

    try {
        if (seed_set) cfg.seeds = {seed};
        if (!seeds.empty()) cfg.seeds = seeds;

        for (const auto& kv : overrides) cfg.apply_override(kv);

        if (c_run->parsed()) return swarm::bench::cmd_run(cfg);
        if (c_alpha->parsed()) return swarm::bench::cmd_sweep_alpha(cfg);
        if (c_size->parsed()) return swarm::bench::cmd_sweep_size(cfg);
        if (c_cmp->parsed()) return swarm::bench::cmd_compare(cfg);
        if (c_dump->parsed()) {
            std::vector<swarm::Observation> obs;
            for (const auto& s : dump_obs) {
                const auto c1 = s.find(',');
                const auto c2 = s.find(',', c1 + 1);
                if (c1 == std::string::npos || c2 == std::string::npos)
                    throw std::invalid_argument("expected x,y,value: " + s);
                swarm::Observation o;
                o.position = {std::stod(s.substr(0, c1)), std::stod(s.substr(c1 + 1, c2 - c1 - 1))};
                o.value = std::stod(s.substr(c2 + 1));
                obs.push_back(o);
            }
            return swarm::bench::cmd_dump_packet(dump_case, parse_point(dump_waypoint), obs);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
