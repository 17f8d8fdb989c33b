#include "l1min/cli.hpp"

int main(int argc, char** argv) { return l1min::cli::run(argc, argv); }
