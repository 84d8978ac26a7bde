#include "slq/cli.hpp"

int main(int argc, char** argv) { return slq::run_cli(argc, argv); }
