#include "tdist/cli.hpp"

int main(int argc, char** argv) { return tdist::cli::run(argc, argv); }
