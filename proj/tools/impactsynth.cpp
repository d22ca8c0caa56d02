#include "impactsynth/cli/commands.hpp"

int main(int argc, char** argv) { return impactsynth::cli::run_cli(argc, argv); }
