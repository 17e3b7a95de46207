#include "cli.hpp"

int main(int argc, char** argv) { return qrt::cli::run(argc, argv); }
