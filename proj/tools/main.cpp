#include <CLI11.hpp>
#include <iostream>

#include "riddle/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"riddle: stability indices and multifractal spectra of riddled "
                 "basins over expanding interval maps"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int threads = -1;

    const char* names[] = {"check", "basin", "loynes", "stability",
                           "spectrum", "graph", "pressure"};
    const char* descs[] = {
        "validate hypotheses (H1)-(H4) with witness values",
        "classify a basin grid and emit CSV + SVG",
        "thermodynamic vs empirical Loynes exponent",
        "stability indices at requested (x, t) points",
        "multifractal spectrum S(q), alpha(q), f(alpha)",
        "invariant graph values on a grid",
        "pressure curve p(s) with CSV cache"};
    for (int i = 0; i < 7; ++i) {
        auto* sub = app.add_subcommand(names[i], descs[i]);
        sub->add_option("--config", config_path, "TOML configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides [run] output_dir)");
        sub->add_option("--seed", seed, "seed override");
        sub->add_option("--threads", threads, "worker thread count (0 = hardware)");
    }

    CLI11_PARSE(app, argc, argv);

    std::string command = app.get_subcommands().front()->get_name();
    riddle::config::RunConfig cfg;
    try {
        cfg = riddle::config::RunConfig::load(config_path);
    } catch (const riddle::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return e.kind() == "IoError" ? 3 : 2;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (threads >= 0) cfg.threads = threads;

    return riddle::cli::run_command(command, cfg, std::cout);
}
