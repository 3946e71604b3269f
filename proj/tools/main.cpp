#include "daeh/cli.hpp"

int main(int argc, char** argv) { return daeh::cli::run(argc, argv); }
