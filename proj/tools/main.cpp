#include "cli.hpp"

int main(int argc, char** argv) { return poac::cli::run(argc, argv); }
