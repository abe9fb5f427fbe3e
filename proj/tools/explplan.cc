#include "explplan/cli.h"

int main(int argc, char** argv) { return explplan::run(argc, argv); }
