#include "pbsid/cli.hpp"

int main(int argc, char** argv) { return pbsid::cli::main(argc, argv); }
