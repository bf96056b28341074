#include "sihft/cli.hpp"

int main(int argc, char** argv) { return sihft::run_cli(argc, argv); }
