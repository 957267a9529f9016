#pragma once
/**
 * @file cli.hpp
 * @brief Command-line entry point: scatter / spectrum / surgery / verify / catalog
 *        subcommands with deterministic JSON and CSV output.
 *
 * Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 usage error.
 */

namespace specsurg {

int run(int argc, char** argv);

}  // namespace specsurg
