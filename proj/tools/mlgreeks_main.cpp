#include "mlg/cli.hpp"

int main(int argc, char** argv) { return mlg::run_cli(argc, argv); }
