#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chunkloc/grammar/pattern.hpp"

namespace chunkloc::testing {

// Independent model of the pattern space: NP [PP1 [PP2]] VP as label
// vectors, the VP number equal to the NP number.
using Labels = std::vector<std::string>;
std::vector<Labels> brute_force_patterns();

// Pairs as (p1, p2) strings; unordered kinds are sorted within the pair.
std::set<std::pair<std::string, std::string>> brute_force_pairs(grammar::PairKind kind);
std::set<std::pair<std::string, std::string>> implemented_pairs(grammar::PairKind kind);

}  // namespace chunkloc::testing
