#pragma once

#include <string>
#include <vector>

namespace symbiotic {
namespace cli {

// Exit codes: 0 success, 1 internal failure (e.g. a failed gradcheck),
// 2 usage/config-file errors, 3 data/shape/value errors, 4 divergence.
int run(const std::vector<std::string>& args);

}  // namespace cli
}  // namespace symbiotic
