#include "bcstab/cli.hpp"

int main(int argc, char** argv) { return bcstab::run_cli(argc, argv); }
