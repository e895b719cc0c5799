#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gdlab/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitValidation = 2;

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int report_violations(const std::vector<std::string>& violations) {
    for (const auto& v : violations) std::cerr << "invalid config: " << v << "\n";
    return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gdlab: gradient-descent stability and convex-decomposition experiments"};
    app.require_subcommand(1);

    std::string config_path, manifest_path;
    bool dry_run = false;

    CLI::App* cmd_run = app.add_subcommand("run", "execute an experiment config");
    cmd_run->add_option("config", config_path, "experiment config JSON")->required();
    cmd_run->add_flag("--dry-run", dry_run, "validate only, do not execute");

    CLI::App* cmd_validate = app.add_subcommand("validate", "check an experiment config");
    cmd_validate->add_option("config", config_path, "experiment config JSON")->required();

    CLI::App* cmd_plotdata = app.add_subcommand("plotdata", "reshape run artifacts for plotting");
    cmd_plotdata->add_option("manifest", manifest_path, "manifest JSON from a previous run")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_validate->parsed() || cmd_run->parsed()) {
            const std::string text = read_file(config_path);
            const auto violations = gdlab::cli::validate(text);
            if (!violations.empty()) return report_violations(violations);
            if (cmd_validate->parsed() || dry_run) {
                std::cout << "config ok\n";
                return kExitOk;
            }

            // only the output directory may be overridden from the environment
            const char* out_override = std::getenv("GDLAB_OUT_DIR");
            const auto config =
                gdlab::cli::parse_config(text, out_override ? out_override : "");
            const auto manifest = gdlab::cli::run(config);
            std::cout << "wrote " << manifest.artifacts.size() << " artifacts to "
                      << manifest.out_dir << "\n";
            return kExitOk;
        }
        if (cmd_plotdata->parsed()) {
            const auto manifest = gdlab::cli::manifest_from_json(read_file(manifest_path));
            for (const auto& f : gdlab::cli::emit_plotdata(manifest)) std::cout << f << "\n";
            return kExitOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
