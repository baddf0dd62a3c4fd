#include "rotorspin/cli.hpp"

int main(int argc, char** argv) { return rotorspin::run(argc, argv); }
