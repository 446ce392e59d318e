#pragma once

#include <string>
#include <vector>

#include "kolmo/config.hpp"

namespace kolmo {

// Result of one CLI task: exit code (0 success, 1 verification fail,
// 2 config/usage error via exceptions), the files written and the text to
// print on stdout.
struct TaskResult {
    int exit_code = 0;
    std::vector<std::string> files;
    std::string stdout_text;
};

// Dispatches on cfg.task_name. Throws Error for configuration problems;
// partial outputs are removed before the exception propagates.
TaskResult run_task(const RunConfig& cfg);

std::vector<std::string> known_tasks();

} // namespace kolmo
