#include "pi3nn/cli.hpp"

int main(int argc, char** argv) { return pi3nn::cli::main(argc, argv); }
