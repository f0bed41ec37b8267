// SPDX-License-Identifier: Apache-2.0
#include <duet/cli.hpp>

int main(int argc, char** argv)
{
    return duet::run_cli(argc, argv);
}
