#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chunkloc::blm {

// agreement: subject-verb agreement across intervening PPs.
// alt_atl:   context in the locative-object alternant, answer theme-object.
// atl_alt:   the same templates with theme and location exchanged.
enum class BlmTask : std::uint8_t { agreement, alt_atl, atl_alt };
std::string_view to_string(BlmTask task);
BlmTask parse_task(std::string_view text);
inline constexpr BlmTask kAllTasks[] = {BlmTask::agreement, BlmTask::alt_atl, BlmTask::atl_alt};

// I: one lexical choice per instance. II: every sentence resamples two slots
// of the instance choice. III: every sentence resamples every slot.
enum class Variation : std::uint8_t { I, II, III };
std::string_view to_string(Variation v);
Variation parse_variation(std::string_view text);
inline constexpr Variation kAllVariations[] = {Variation::I, Variation::II, Variation::III};

// Labels per chunk. Agreement labels are chunk-number labels ("np-sg") plus
// "coord"; alternation labels name the role realized by each chunk
// ("np-agent", "verb-pass", "pp-loc", "npx-theme-loc", "ppx-loc").
using LabelSequence = std::vector<std::string>;
std::string join_labels(const LabelSequence& labels);
LabelSequence split_labels(std::string_view text);

struct CandidateSpec {
  std::string tag;
  LabelSequence labels;
};

inline constexpr std::size_t kContextRows = 7;

struct BlmTemplate {
  BlmTask task;
  std::array<LabelSequence, kContextRows> context;
  std::vector<CandidateSpec> answers;
  std::size_t correct_index;

  static const BlmTemplate& of(BlmTask task);

  const CandidateSpec& correct() const { return answers[correct_index]; }
};

std::size_t candidate_count(BlmTask task);
// Error tags in template order; exactly one is the correct tag.
const std::vector<std::string>& answer_tags(BlmTask task);
std::string_view correct_tag(BlmTask task);

// Auxiliary synthetic features of the task's sentences in a fixed order:
// labels that are not chunk-number labels, positioned as the synthetic
// generator names them.
std::vector<std::string> aux_features(BlmTask task);

}  // namespace chunkloc::blm
