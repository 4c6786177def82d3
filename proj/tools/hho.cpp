#include "hho/cli.hpp"

int main(int argc, char** argv) { return hho::run_cli(argc, argv); }
