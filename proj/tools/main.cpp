#include "prodwave/cli.hpp"

int main(int argc, char** argv)
{
    return prodwave::run(argc, argv);
}
