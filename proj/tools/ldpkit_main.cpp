#include "ldpkit/cli.hpp"

int main(int argc, char** argv) { return ldpkit::cli::main(argc, argv); }
