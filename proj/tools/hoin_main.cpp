#include "hoin/cli.hpp"

int main(int argc, char** argv) { return hoin::cli_main(argc, argv); }
