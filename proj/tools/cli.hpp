#pragma once

#include <string>
#include <vector>

namespace hsical::cli {

enum ExitCode { ok = 0, input_error = 1, coverage_error = 2, not_converged = 3 };

/// Runs one command line. argv[0] is the program name.
int run(const std::vector<std::string>& args);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace hsical::cli
