#include "cli.hpp"

int main(int argc, char** argv) { return tokengraft::cli::run(argc, argv); }
