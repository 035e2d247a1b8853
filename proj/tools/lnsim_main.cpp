#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"

#include "lnsim/scenario.hpp"

// exit codes: 0 ok, 1 config error, 2 runtime error
namespace {

std::vector<lnsim::Scenario> resolve(const std::string& arg) {
    for (const std::string& n : lnsim::bundled_scenario_names())
        if (n == arg) return lnsim::parse_scenarios(lnsim::bundled_scenario_text(n), arg);
    return lnsim::load_scenario_file(arg);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"payment channel network simulator and attack toolkit"};
    app.require_subcommand(1);

    std::string config;
    std::string output_root;
    auto* run = app.add_subcommand("run", "execute a config file or bundled scenario");
    run->add_option("config", config, "config path or bundled scenario name")->required();
    run->add_option("--output-root", output_root,
                    "directory scenario outputs land under (default: LNSIM_OUTPUT_ROOT or 'out')");

    std::string vconfig;
    auto* validate = app.add_subcommand("validate", "parse and check a config without running");
    validate->add_option("config", vconfig, "config path or bundled scenario name")->required();

    auto* list = app.add_subcommand("list-scenarios", "print the bundled scenario names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (list->parsed()) {
            for (const std::string& n : lnsim::bundled_scenario_names()) std::printf("%s\n", n.c_str());
            return 0;
        }
        if (validate->parsed()) {
            auto scenarios = resolve(vconfig);
            for (const lnsim::Scenario& s : scenarios) lnsim::validate_scenario(s);
            std::printf("ok: %zu scenario(s)\n", scenarios.size());
            return 0;
        }
        auto scenarios = resolve(config);
        for (const lnsim::Scenario& s : scenarios) lnsim::validate_scenario(s);
        if (output_root.empty()) {
            const char* env = std::getenv("LNSIM_OUTPUT_ROOT");
            output_root = env && *env ? env : "out";
        }
        bool failed = false;
        for (const lnsim::Scenario& s : scenarios) {
            lnsim::RunReport rep = lnsim::run_scenario(s, output_root);
            if (rep.ok) {
                std::printf("%s: ok, %zu artifact(s) in %s\n", rep.scenario.c_str(),
                            rep.artifacts.size(), rep.output_dir.c_str());
            } else {
                std::fprintf(stderr, "%s: failed at %s\n", rep.scenario.c_str(),
                             rep.error.c_str());
                failed = true;
            }
        }
        return failed ? 2 : 0;
    } catch (const lnsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
