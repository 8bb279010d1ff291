#include "caflow/cli.hpp"

int main(int argc, char** argv) { return caflow::run_cli(argc, argv); }
