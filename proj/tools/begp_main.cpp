#include "begp/cli.hpp"

int main(int argc, char** argv) { return begp::cli_main(argc, argv); }
