#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "pertrl/errors.hpp"
#include "pertrl/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitConditioning = 3;
constexpr int kExitDivergence = 4;

int run_experiment(const std::string& kind_name, const std::string& config_path,
                   const pertrl::RunFlags& flags) {
    pertrl::ExperimentConfig config = pertrl::load_config(config_path);
    const auto kind = pertrl::parse_experiment(kind_name);
    if (!kind) throw pertrl::ConfigError("unknown experiment: " + kind_name);
    config.experiment = *kind;

    const pertrl::RunOutput out = pertrl::run(config, flags);
    for (const std::string& f : out.files) std::cout << "wrote " << f << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"perturbation-structured policy evaluation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    pertrl::RunFlags flags;

    const std::vector<std::string> kinds = {"exact-pe", "rl-pe",  "ppe",
                                            "variance-sweep", "tpfc", "eps-sweep"};
    for (const std::string& kind : kinds) {
        CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", flags.out_dir, "output directory (overrides config)");
        sub->add_flag("--reproducible", flags.reproducible,
                      "suppress timestamps so outputs are byte-stable");
        sub->add_option("--threads", flags.threads, "OpenMP thread count (0 = default)");
    }
    CLI::App* validate = app.add_subcommand("validate", "check a config file");
    validate->add_option("--config", config_path, "experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "cannot open config file: " << config_path << "\n";
                return kExitConfig;
            }
            std::stringstream buf;
            buf << in.rdbuf();
            const auto errors = pertrl::validate_config_text(buf.str());
            if (errors.empty()) {
                std::cout << "ok\n";
                return kExitOk;
            }
            for (const auto& e : errors) std::cerr << "error: " << e << "\n";
            return kExitConfig;
        }
        for (const std::string& kind : kinds)
            if (app.get_subcommand(kind)->parsed())
                return run_experiment(kind, config_path, flags);
        return kExitConfig;
    } catch (const pertrl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pertrl::ConditioningError& e) {
        std::cerr << "numerical refusal: " << e.what() << "\n";
        return kExitConditioning;
    } catch (const pertrl::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
