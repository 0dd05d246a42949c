#include "chaosbsde/cli.hpp"

int main(int argc, char** argv) { return chaosbsde::cli::main_entry(argc, argv); }
