#pragma once

#include <iosfwd>
#include <string>

#include "run_config.hpp"

namespace mlsgan::cli {

// Exit codes shared by every subcommand:
//   0 success, 1 check failure, 2 config error, 3 IO error, 4 numeric abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

struct GenDataArgs {
    std::string config_path;
    CliOverrides overrides;
    std::string out_path;
    bool text = false;
};
int cmd_gen_data(const GenDataArgs& args, std::ostream& out, std::ostream& err);

struct TrainArgs {
    std::string config_path;
    CliOverrides overrides;
    bool inject_nan = false;  // test fixture for the numeric-abort exit path
};
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

struct EvalArgs {
    std::string config_path;
    CliOverrides overrides;
};
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

struct AblateArgs {
    std::string config_path;
    CliOverrides overrides;
};
int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err);

struct ProbeArgs {
    std::string config_path;
    CliOverrides overrides;
};
int cmd_probe(const ProbeArgs& args, std::ostream& out, std::ostream& err);

struct GradCheckArgs {
    std::string self_test_corrupt;  // "gated_fusion" flips the GFU backward
};
int cmd_grad_check(const GradCheckArgs& args, std::ostream& out, std::ostream& err);

}  // namespace mlsgan::cli
