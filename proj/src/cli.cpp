/**
 * @file cli.cpp
 * @brief Subcommand dispatch and argument handling for the command-line tool.
 */

#include "specsurg/cli.hpp"

#include <cstdio>

namespace specsurg {

int run(int, char**) {
  std::fprintf(stderr, "command-line interface not implemented yet\n");
  return 3;
}

}  // namespace specsurg
