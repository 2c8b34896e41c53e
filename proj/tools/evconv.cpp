#include "evconv/cli.hpp"

int main(int argc, char** argv) { return evconv::cli::main(argc, argv); }
