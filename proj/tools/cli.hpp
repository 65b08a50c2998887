#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "topk/estimation.hpp"

namespace topk::cli {

enum ExitCode : int { ok = 0, failure = 1, input_error = 2, numeric_error = 3 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flags that reproduce `cfg` on the fit command line.
std::string fit_flags(const FitConfig& cfg);

struct GridSpec {
  std::vector<GridPoint> points;
};

// "K=1,5,10;lapl=0,0.1" -> cartesian product, K-major. Either key may be
// omitted (defaults K=1, lapl=0). Throws InputError when malformed.
GridSpec parse_grid(const std::string& text);

}  // namespace topk::cli
