#include "rsenf/cli.hpp"

int main(int argc, char** argv) { return rsenf::run_cli(argc, argv); }
