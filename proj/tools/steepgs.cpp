// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/cli.hpp"

#include <iostream>

int
main(int argc, char **argv) {
    return steepgs::run_cli(argc, argv, std::cout, std::cerr, std::cin);
}
