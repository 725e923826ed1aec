#pragma once

// Shared test programs.
namespace termgnn::fixtures {

// Three loops; the first outer loop diverges whenever b < 2 and a > b.
inline constexpr const char* kRunningExample =
    "def main(a,b,c,d) :\n"
    "\n"
    "  while a > b:\n"
    "    a = 2 \n"
    "    while c > d:\n"
    "      d -= 2\n"
    "\n"
    "  while a > 0: \n"
    "    a -= 2\n";

// The running example reduced to the first outer loop.
inline constexpr const char* kRunningSlice =
    "def main(a,b) :\n"
    "  while a > b:\n"
    "    a = 2 \n";

}  // namespace termgnn::fixtures
