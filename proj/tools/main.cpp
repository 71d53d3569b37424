#include "gridcast/cli.hpp"

int main(int argc, char** argv) { return gridcast::dispatch(argc, argv); }
