#include "essence/cli.hpp"

int main(int argc, char** argv) { return essence::cli::run(argc, argv); }
