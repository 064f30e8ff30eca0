#include "chunkloc/blm/template.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "chunkloc/embed/synthetic.hpp"
#include "chunkloc/util/error.hpp"
#include "chunkloc/util/text.hpp"

namespace chunkloc::blm {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

BlmTemplate make_agreement() {
  BlmTemplate t{BlmTask::agreement, {}, {}, 1};
  t.context = {{
      {"np-sg", "pp1-sg", "vp-sg"},
      {"np-pl", "pp1-sg", "vp-pl"},
      {"np-sg", "pp1-pl", "vp-sg"},
      {"np-pl", "pp1-pl", "vp-pl"},
      {"np-sg", "pp1-sg", "pp2-sg", "vp-sg"},
      {"np-pl", "pp1-sg", "pp2-sg", "vp-pl"},
      {"np-sg", "pp1-pl", "pp2-sg", "vp-sg"},
  }};
  t.answers = {
      {"Coord", {"np-sg", "pp1-sg", "coord", "vp-sg"}},
      {"correct", {"np-pl", "pp1-pl", "pp2-sg", "vp-pl"}},
      {"WNA", {"np-sg", "pp1-sg", "vp-sg"}},
      {"AE_V", {"np-pl", "pp1-pl", "pp2-pl", "vp-sg"}},
      {"AE_N1", {"np-pl", "pp1-sg", "pp2-pl", "vp-sg"}},
      {"AE_N2", {"np-pl", "pp1-pl", "pp2-sg", "vp-sg"}},
      {"WN1", {"np-pl", "pp1-sg", "pp1-sg", "vp-pl"}},
      {"WN2", {"np-pl", "pp1-pl", "pp2-pl", "vp-pl"}},
  };
  return t;
}

BlmTemplate make_alt_atl() {
  BlmTemplate t{BlmTask::alt_atl, {}, {}, 0};
  t.context = {{
      {"np-agent", "verb-act", "np-loc", "pp-theme"},
      {"np-theme", "verb-pass", "pp-agent"},
      {"np-theme", "verb-pass", "pp-loc", "pp-agent"},
      {"np-theme", "verb-pass", "pp-loc"},
      {"np-loc", "verb-pass", "pp-agent"},
      {"np-loc", "verb-pass", "pp-theme", "pp-agent"},
      {"np-loc", "verb-pass", "pp-theme"},
  }};
  t.answers = {
      {"Correct", {"np-agent", "verb-act", "np-theme", "pp-loc"}},
      {"AgentAct", {"np-agent", "verb-pass", "np-theme", "pp-loc"}},
      {"Alt1", {"np-agent", "verb-act", "np-theme", "np-loc"}},
      {"Alt2", {"np-agent", "verb-act", "pp-theme", "pp-loc"}},
      {"NoEmb", {"np-agent", "verb-act", "npx-theme-loc"}},
      {"LexPrep", {"np-agent", "verb-act", "np-theme", "ppx-loc"}},
      {"SSM1", {"np-theme", "verb-act", "np-agent", "pp-loc"}},
      {"SSM2", {"np-loc", "verb-act", "np-agent", "pp-theme"}},
      {"AASSM", {"np-theme", "verb-act", "np-loc", "pp-agent"}},
  };
  return t;
}

std::string swap_roles(std::string_view label) {
  std::vector<std::string> parts;
  for (const auto p : text::split(label, '-')) {
    parts.emplace_back(p == "theme" ? "loc" : p == "loc" ? "theme" : std::string(p));
  }
  return text::join(parts, "-");
}

BlmTemplate make_atl_alt() {
  BlmTemplate t = make_alt_atl();
  t.task = BlmTask::atl_alt;
  auto swap_all = [](LabelSequence& labels) {
    for (auto& l : labels) {
      l = swap_roles(l);
    }
  };
  for (auto& row : t.context) {
    swap_all(row);
  }
  for (auto& a : t.answers) {
    swap_all(a.labels);
  }
  return t;
}

}  // namespace

std::string_view to_string(BlmTask task) {
  switch (task) {
    case BlmTask::agreement: return "agreement";
    case BlmTask::alt_atl: return "alt-atl";
    case BlmTask::atl_alt: return "atl-alt";
  }
  return "?";
}

BlmTask parse_task(std::string_view text) {
  const auto t = lower(text);
  if (t == "agreement") return BlmTask::agreement;
  if (t == "alt-atl" || t == "alternation-alt-atl") return BlmTask::alt_atl;
  if (t == "atl-alt" || t == "alternation-atl-alt") return BlmTask::atl_alt;
  throw ConfigError("unknown BLM task '" + std::string(text) + "' (expected agreement, alt-atl or atl-alt)");
}

std::string_view to_string(Variation v) {
  switch (v) {
    case Variation::I: return "I";
    case Variation::II: return "II";
    case Variation::III: return "III";
  }
  return "?";
}

Variation parse_variation(std::string_view text) {
  const auto t = lower(text);
  if (t == "i" || t == "1") return Variation::I;
  if (t == "ii" || t == "2") return Variation::II;
  if (t == "iii" || t == "3") return Variation::III;
  throw ConfigError("unknown lexical variation '" + std::string(text) + "' (expected I, II or III)");
}

std::string join_labels(const LabelSequence& labels) { return text::join(labels, " "); }

LabelSequence split_labels(std::string_view text) {
  LabelSequence out;
  for (const auto part : text::split_whitespace(text)) {
    out.emplace_back(part);
  }
  return out;
}

const BlmTemplate& BlmTemplate::of(BlmTask task) {
  static const BlmTemplate agreement = make_agreement();
  static const BlmTemplate alt_atl = make_alt_atl();
  static const BlmTemplate atl_alt = make_atl_alt();
  switch (task) {
    case BlmTask::agreement: return agreement;
    case BlmTask::alt_atl: return alt_atl;
    case BlmTask::atl_alt: return atl_alt;
  }
  throw ConfigError("unknown BLM task");
}

std::size_t candidate_count(BlmTask task) { return BlmTemplate::of(task).answers.size(); }

const std::vector<std::string>& answer_tags(BlmTask task) {
  static const auto make = [](BlmTask t) {
    std::vector<std::string> tags;
    for (const auto& a : BlmTemplate::of(t).answers) {
      tags.push_back(a.tag);
    }
    return tags;
  };
  static const std::vector<std::string> agreement = make(BlmTask::agreement);
  static const std::vector<std::string> alternation = make(BlmTask::alt_atl);
  return task == BlmTask::agreement ? agreement : alternation;
}

std::string_view correct_tag(BlmTask task) { return BlmTemplate::of(task).correct().tag; }

std::vector<std::string> aux_features(BlmTask task) {
  const auto& t = BlmTemplate::of(task);
  std::set<std::string> out;
  auto collect = [&](const LabelSequence& labels) {
    for (auto& f : embed::features_for_labels(labels)) {
      const bool chunk_number = std::find(std::begin(embed::kChunkNumberFeatures),
                                          std::end(embed::kChunkNumberFeatures),
                                          f) != std::end(embed::kChunkNumberFeatures);
      if (!chunk_number) {
        out.insert(std::move(f));
      }
    }
  };
  for (const auto& row : t.context) {
    collect(row);
  }
  for (const auto& a : t.answers) {
    collect(a.labels);
  }
  return {out.begin(), out.end()};
}

}  // namespace chunkloc::blm
