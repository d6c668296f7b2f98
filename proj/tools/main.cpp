#include "embedrank/cli.hpp"

int main(int argc, char** argv) { return embedrank::run_cli(argc, argv); }
