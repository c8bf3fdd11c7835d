#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tdist/simulate.hpp"

namespace tdist::cli {

// Exit codes: 0 success, 1 fit did not converge, 2 usage, 3 data error,
// 4 no constant regions.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // without argv[0]

// CSV samples: header optional, comma-separated reals, one sample per row.
Matrix read_samples_csv(std::istream& in);
Matrix read_samples_csv_file(const std::string& path);

}  // namespace tdist::cli
