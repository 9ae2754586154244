#include "claimforge/pipeline/cli.hpp"

int main(int argc, char** argv) { return claimforge::pipeline::run_cli(argc, argv); }
