#include "svgtok/cli.hpp"

int main(int argc, char** argv) { return svgtok::cli::run(argc, argv); }
