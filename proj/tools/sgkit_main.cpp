// SPDX-License-Identifier: Apache-2.0

#include "sgkit/commands.hpp"

int main(int argc, char** argv) { return sgkit::run_cli(argc, argv); }
