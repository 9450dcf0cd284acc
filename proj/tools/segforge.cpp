#include <CLI11.hpp>
#include <iostream>

#include "segforge/app/commands.hpp"
#include "segforge/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"segforge: few-shot skeleton action segmentation toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    for (const char* name : {"augment", "train", "eval", "synthdata", "inspect"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "INI config file");
        sub->add_option("--set", overrides, "override a config key: section.key=value")->take_all();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : segforge::app::kExitValidation;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    segforge::app::Config cfg;
    try {
        if (!config_path.empty()) cfg = segforge::app::Config::load(config_path);
        for (const auto& o : overrides) cfg.apply_override(o);
    } catch (const segforge::ValidationError& e) {
        std::cerr << "segforge " << command << ": " << e.what() << "\n";
        return segforge::app::kExitValidation;
    }
    return segforge::app::run_command(command, cfg, std::cout, std::cerr);
}
