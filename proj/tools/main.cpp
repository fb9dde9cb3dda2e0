#include "switchstab/cli.hpp"

int main(int argc, char** argv) { return switchstab::cli::run(argc, argv); }
