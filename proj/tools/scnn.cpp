#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "scnn/app.hpp"
#include "scnn/config.hpp"
#include "scnn/error.hpp"

namespace {

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Self-normalizing convolutional text classifiers"};
    cli.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::size_t jobs = 0;
    std::string out_dir;
    cli.add_option("--config", config_path, "Run configuration file (key = value lines)");
    cli.add_option("--set", overrides, "Override a config key, key=value (repeatable)");
    auto* seed_opt = cli.add_option("--seed", seed, "Master RNG seed");
    auto* jobs_opt = cli.add_option("--jobs", jobs, "Parallel cross-validation folds")->check(CLI::PositiveNumber);
    auto* out_opt = cli.add_option("--out", out_dir, "Output directory");

    auto* train = cli.add_subcommand("train", "Train on the training split and write a checkpoint");
    auto* cv = cli.add_subcommand("cv", "Stratified k-fold cross-validation");
    auto* eval = cli.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    std::string checkpoint, vocab;
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval->add_option("--vocab", vocab, "Vocabulary file whose hash must match the checkpoint");
    auto* params = cli.add_subcommand("params", "Parameter counts for all model variants");
    auto* moments = cli.add_subcommand("moments", "Activation moment probe through a deep FC stack");
    auto* synth = cli.add_subcommand("synth", "Write a seeded synthetic labeled corpus (TSV)");

    // Global flags are accepted after the subcommand as well.
    for (auto* sub : {train, cv, eval, params, moments, synth}) sub->fallthrough();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return cli.exit(e);
    }

    try {
        scnn::RunConfig rc = config_path.empty() ? scnn::RunConfig{} : scnn::load_run_config(config_path);
        for (const auto& kv : overrides) scnn::apply_override(rc, kv);
        if (*seed_opt) rc.training.seed = seed;
        if (*jobs_opt) rc.jobs = jobs;
        if (*out_opt) rc.out_dir = out_dir;

        if (*train) {
            scnn::app::cmd_train(rc, std::cout);
        } else if (*cv) {
            scnn::app::cmd_cv(rc, std::cout);
        } else if (*eval) {
            scnn::app::cmd_eval(rc, checkpoint, vocab, std::cout);
        } else if (*params) {
            scnn::app::cmd_params(rc, std::cout);
        } else if (*moments) {
            scnn::app::cmd_moments(rc, std::cout);
        } else if (*synth) {
            scnn::app::cmd_synth(rc, std::cout);
        }
    } catch (const scnn::Error& e) {
        std::cerr << "scnn: error[" << e.kind() << "]: " << one_line(e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "scnn: error[internal]: " << one_line(e.what()) << '\n';
        return 1;
    }
    return 0;
}
