#include <doctest.h>
#include "bseg/interaction.hpp"
TEST_SUITE("interaction") {
TEST_CASE("placeholder") { CHECK(true); }
}
