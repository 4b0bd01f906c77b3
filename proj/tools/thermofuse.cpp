#include "thermofuse/cli.hpp"

int main(int argc, char** argv) { return thermofuse::cli::run(argc, argv); }
