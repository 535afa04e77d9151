#include "bilateral/cli.hpp"

int main(int argc, char** argv) { return bilateral::cli::main(argc, argv); }
