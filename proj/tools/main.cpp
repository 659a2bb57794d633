#include "cli.hpp"

int main(int argc, char** argv) { return hzmgp::cli::run({argv + 1, argv + argc}); }
