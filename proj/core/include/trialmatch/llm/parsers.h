#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trialmatch/datamodel/types.h"

namespace trialmatch::llm {

// Field assignment for one space item. Keys are "<phrase> allowed|required|
// excluded:" segments; known keys fill the matching TrialSpace field, unknown
// keys are left in raw_text only. Values are trimmed and lose one trailing
// period; empty values leave the field absent.
void parse_space_fields(std::string_view item_text, TrialSpace& space);

// Parses a numbered list ("1. ...", "2) ...") into spaces for `nct_id`.
// Lines before the first item are ignored; unnumbered lines continue the
// current item. Items whose case-folded, whitespace-collapsed text repeats an
// earlier item are dropped; ordinals are then assigned 1..n in listed order.
// Returns an empty vector when no numbered item is present.
std::vector<TrialSpace> parse_space_list(std::string_view response, std::string_view nct_id);

// Polarity of the last "Yes!" or "No!" (case-insensitive, not preceded by a
// letter). nullopt when neither token occurs.
std::optional<bool> parse_decision(std::string_view response);

enum class Organ {
  kAdrenalGland, kAmpullaOfVater, kBiliaryTract, kBladderUrinaryTract, kBone, kBowel, kBreast,
  kCervix, kCnsBrain, kEsophagusStomach, kEye, kHeadAndNeck, kKidney, kLiver, kLung, kLymphoid,
  kMyeloid, kOvaryFallopianTube, kPancreas, kPenis, kPeripheralNervousSystem, kPeritoneum,
  kPleura, kProstate, kSkin, kSoftTissue, kTestis, kThymus, kThyroid, kUterus, kVulvaVagina,
  kSolidTumor, kMultiple, kNone,
};

// Canonical response string, e.g. "Esophagus/Stomach", "Solid tumor", "None".
std::string_view to_string(Organ organ);
const std::vector<Organ>& organ_vocabulary();

// Exact match after trimming whitespace and stripping surrounding quotes.
// nullopt is a vocabulary miss.
std::optional<Organ> parse_organ(std::string_view response);

// Per-sentence concept labels from a sentence_tagging response: lines
// "<n>: concept, concept" or "<n>: none". Returns nullopt for a sentence
// whose line is missing or names an unknown concept.
std::vector<std::optional<std::vector<std::string>>> parse_sentence_tags(std::string_view response,
                                                                          std::size_t n_sentences);

}  // namespace trialmatch::llm
