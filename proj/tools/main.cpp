#include "cli.hpp"

int main(int argc, char** argv) { return permdrift::cli::run(argc, argv); }
