#include "sl1/cli.hpp"

int main(int argc, char** argv) { return sl1::cli::run(argc, argv); }
