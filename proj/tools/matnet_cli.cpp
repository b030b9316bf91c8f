#include "matnet/cli.hpp"

int main(int argc, char** argv) { return matnet::cli::run(argc, argv); }
