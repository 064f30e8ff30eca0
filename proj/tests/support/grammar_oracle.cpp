#include "grammar_oracle.hpp"

#include <algorithm>

namespace chunkloc::testing {

using grammar::PairKind;

namespace {

std::string number_of(const std::string& label) { return label.substr(label.find('-') + 1); }

}  // namespace

std::vector<Labels> brute_force_patterns() {
  std::vector<Labels> out;
  const std::string nums[] = {"sg", "pl"};
  for (int pps = 0; pps <= 2; ++pps) {
    for (const auto& np : nums) {
      for (const auto& a : nums) {
        for (const auto& b : nums) {
          Labels l{"np-" + np};
          if (pps >= 1) {
            l.push_back("pp1-" + a);
          }
          if (pps == 2) {
            l.push_back("pp2-" + b);
          }
          l.push_back("vp-" + np);
          if (std::find(out.begin(), out.end(), l) == out.end()) {
            out.push_back(l);
          }
        }
      }
    }
  }
  return out;
}

std::set<std::pair<std::string, std::string>> brute_force_pairs(PairKind kind) {
  const auto all = brute_force_patterns();
  auto str = [](const Labels& l) {
    std::string s;
    for (const auto& x : l) {
      s += (s.empty() ? "" : " ") + x;
    }
    return s;
  };
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& p : all) {
    for (const auto& q : all) {
      if (kind == PairKind::gram_number || kind == PairKind::subj_verb) {
        if (p.size() != q.size() || str(p) >= str(q)) {
          continue;
        }
        std::size_t pp_diff = 0;
        for (std::size_t i = 1; i + 1 < p.size(); ++i) {
          pp_diff += p[i] != q[i];
        }
        const bool subject_same = p.front() == q.front();
        if (kind == PairKind::gram_number && subject_same && pp_diff == 1) {
          out.emplace(str(p), str(q));
        }
        if (kind == PairKind::subj_verb && !subject_same && pp_diff == 0) {
          out.emplace(str(p), str(q));
        }
      } else if (p.size() + 1 == q.size()) {
        // p is q with one PP deleted; the surviving PP is renumbered to pp1.
        for (std::size_t drop = 1; drop + 1 < q.size(); ++drop) {
          Labels r{q.front()};
          for (std::size_t i = 1; i + 1 < q.size(); ++i) {
            if (i != drop) {
              r.push_back("pp" + std::to_string(r.size()) + "-" + number_of(q[i]));
            }
          }
          r.push_back(q.back());
          if (r == p) {
            out.emplace(str(p), str(q));
          }
        }
      }
    }
  }
  return out;
}

std::set<std::pair<std::string, std::string>> implemented_pairs(PairKind kind) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& mp : grammar::minimal_pairs(kind)) {
    auto a = mp.p1.str(), b = mp.p2.str();
    if (kind != PairKind::length && a > b) {
      std::swap(a, b);
    }
    out.emplace(a, b);
  }
  return out;
}

}  // namespace chunkloc::testing
