#include "isvrg/bench.hpp"

int main(int argc, char** argv) { return isvrg::bench::cli_run(argc, argv); }
