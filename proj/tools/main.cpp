#include "epsts/cli.hpp"

int main(int argc, char** argv) { return epsts::cli_main(argc, argv); }
