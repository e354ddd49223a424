#include "ideagraph/cli.hpp"

int main(int argc, char** argv) { return ideagraph::run_cli(argc, argv); }
