#include "litsilicon/cli.hpp"

int main(int argc, char** argv) { return lit::run_cli(argc, argv); }
