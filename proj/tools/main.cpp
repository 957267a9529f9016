/**
 * @file main.cpp
 * @brief Executable entry point.
 */

#include "specsurg/cli.hpp"

int main(int argc, char** argv) { return specsurg::run(argc, argv); }
