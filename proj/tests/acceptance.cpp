#include <catch2/catch_amalgamated.hpp>
#include "hte/hte.hpp"
