#ifndef ILT_LAB_EXPERIMENTS_HPP
#define ILT_LAB_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ilt-lab/config.hpp"

namespace iltlab {

struct RunOptions {
    std::string out_dir = ".";
    std::uint64_t master_seed = 20240801;
    int workers = 1;
};

/// Names of the runnable experiments, in CLI order.
const std::vector<std::string>& experiment_names();

/// Executes one named experiment: writes its CSV artifacts into
/// opts.out_dir and returns 0 when every check in the experiment passed,
/// 1 otherwise. Throws ConfigError for invalid configuration and
/// ilt::BudgetError when a runtime budget is exceeded.
int run(const std::string& experiment, const Config& config, const RunOptions& opts);

}  // namespace iltlab

#endif
