#include "ccdispatch/cli.hpp"

int main(int argc, char** argv) { return ccdispatch::run_cli(argc, argv); }
