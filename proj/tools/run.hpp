#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "run_config.hpp"
#include "snep/summation.hpp"

namespace snep::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitSolverFailure = 1,  ///< flagged cells or failed oracle solves
    kExitConfigError = 2,
    kExitInfeasible = 3,     ///< cell cap exceeded or output not writable
};

struct RunOutcome {
    int exit_code = kExitOk;
    std::vector<std::filesystem::path> files;
    MomentReport summary;  ///< finest level in ladder mode; the MC mean in oracle mode
};

/// Executes the configured mode, writing CSV files under config.run.out and progress to `log`.
RunOutcome run(const RunConfig& config, std::ostream& log);

/// The same instance with every random input replaced by its mean.
CournotInstance mean_instance(const CournotInstance& instance);

}  // namespace snep::cli
