#include "tdsmor/cli.hpp"

int main(int argc, char** argv) { return tdsmor::cli::run(argc, argv); }
