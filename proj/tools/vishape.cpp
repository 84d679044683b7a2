#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "vishape/commands.hpp"
#include "vishape/demos.hpp"
#include "vishape/error.hpp"

using namespace vishape;

int main(int argc, char** argv) {
    CLI::App app{"vishape: obstacle-type variational inequalities, shape sensitivities and "
                 "time-discrete damage evolution on 2D meshes"};
    app.require_subcommand(1);

    std::string config_path, demo_name, out_dir = "out";

    std::vector<CLI::App*> run_subs;
    for (const std::string& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " command");
        sub->add_option("--config", config_path, "path to an INI config file");
        sub->add_option("--demo", demo_name, "name of a shipped demo config");
        sub->add_option("--out", out_dir, "output directory (default: out)");
        run_subs.push_back(sub);
    }
    CLI::App* demos_sub = app.add_subcommand("demos", "list the shipped demo configs");
    CLI::App* demo_sub = app.add_subcommand("demo", "run a shipped demo with its own command");
    std::string demo_to_run;
    demo_sub->add_option("name", demo_to_run, "demo name")->required();
    demo_sub->add_option("--out", out_dir, "output directory (default: out)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (demos_sub->parsed()) {
            for (const DemoEntry& d : demo_catalog())
                std::printf("%-24s %-20s %s\n", d.name.c_str(), d.command.c_str(),
                            d.description.c_str());
            return 0;
        }
        std::string command;
        Config cfg;
        if (demo_sub->parsed()) {
            const DemoEntry& d = find_demo(demo_to_run);
            command = d.command;
            cfg = Config::parse(d.config);
        } else {
            for (size_t i = 0; i < run_subs.size(); ++i)
                if (run_subs[i]->parsed()) command = command_names()[i];
            if (!demo_name.empty() && !config_path.empty())
                throw ConfigError("give either --config or --demo, not both");
            if (!demo_name.empty())
                cfg = Config::parse(find_demo(demo_name).config);
            else if (!config_path.empty())
                cfg = Config::parse_file(config_path);
            else
                throw ConfigError("missing --config or --demo");
        }
        const std::string summary = run_command(command, cfg, out_dir);
        std::printf("%s\n", summary.c_str());
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "error: solver: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 3;
    }
}
