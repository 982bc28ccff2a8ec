#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mlsgan: multi-level sequence GAN for group activity recognition"};
    app.require_subcommand(1);

    mlsgan::cli::CliOverrides overrides;
    std::string config_path;
    auto add_common = [&](CLI::App* cmd, bool need_config = true) {
        CLI::Option* opt = cmd->add_option("--config", config_path, "Run config (JSON)");
        if (need_config) opt->required();
        cmd->add_option("--seed", overrides.seed, "Override the root seed");
        cmd->add_option("--out", overrides.out,
                        "Override the output path (out_dir; for gen-data, the dataset file)");
        cmd->add_option("--checkpoint", overrides.checkpoint, "Override paths.checkpoint");
        cmd->add_option("--variant", overrides.variant, "Override train.variant");
    };

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset file");
    bool gen_text = false;
    add_common(gen);  // --out names the dataset file for this command
    gen->add_flag("--text", gen_text, "Write the text variant of the format");

    auto* train = app.add_subcommand("train", "Train a variant and write checkpoint + metrics");
    bool inject_nan = false;
    add_common(train);
    train->add_flag("--inject-nan", inject_nan, "Test fixture: inject a NaN gradient")
        ->group("");  // hidden

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    add_common(eval);

    auto* ablate = app.add_subcommand("ablate", "Train all six variants on identical data");
    add_common(ablate);

    auto* probe = app.add_subcommand("probe", "Linear probe on a frozen generator's codes");
    add_common(probe);

    auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient suite");
    std::string corrupt;
    grad->add_option("--self-test-corrupt", corrupt, "Test fixture: corrupt a backward pass")
        ->group("");  // hidden

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : mlsgan::cli::kExitConfig;
    }

    using namespace mlsgan::cli;
    if (gen->parsed()) {
        return cmd_gen_data({config_path, overrides, "", gen_text}, std::cout, std::cerr);
    }
    if (train->parsed()) {
        return cmd_train({config_path, overrides, inject_nan}, std::cout, std::cerr);
    }
    if (eval->parsed()) {
        return cmd_eval({config_path, overrides}, std::cout, std::cerr);
    }
    if (ablate->parsed()) {
        return cmd_ablate({config_path, overrides}, std::cout, std::cerr);
    }
    if (probe->parsed()) {
        return cmd_probe({config_path, overrides}, std::cout, std::cerr);
    }
    if (grad->parsed()) {
        return cmd_grad_check({corrupt}, std::cout, std::cerr);
    }
    return kExitConfig;
}
