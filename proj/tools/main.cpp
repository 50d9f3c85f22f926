#include "shiftgan/cli.hpp"

int main(int argc, char** argv) { return shiftgan::run_cli(argc, argv); }
