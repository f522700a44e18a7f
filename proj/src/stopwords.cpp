#include <algorithm>
#include <array>

#include "risklab/detector.hpp"

namespace risklab {

namespace {

// Sorted; searched with binary search.
constexpr std::array<std::string_view, 156> kStopWords = {
    "a",       "about",   "above",   "after",      "again",   "against", "all",     "also",    "am",
    "among",   "an",      "and",     "any",        "are",     "around",  "as",      "at",      "be",
    "because", "been",    "before",  "being",      "below",   "between", "both",    "but",     "by",
    "can",     "could",   "did",     "do",         "does",    "doing",   "down",    "during",  "each",
    "either",  "else",    "ever",    "every",      "few",     "for",     "from",    "further", "had",
    "has",     "have",    "having",  "he",         "her",     "here",    "hers",    "herself", "him",
    "himself", "his",     "how",     "however",    "i",       "if",      "in",      "into",    "is",
    "it",      "its",     "itself",  "just",       "least",   "less",    "many",    "may",     "me",
    "might",   "more",    "most",    "much",       "must",    "my",      "myself",  "neither", "no",
    "nor",     "not",     "now",     "of",         "off",     "often",   "on",      "once",    "one",
    "only",    "or",      "other",   "others",     "our",     "ours",    "ourselves", "out",   "over",
    "own",     "per",     "same",    "several",    "she",     "should",  "since",   "so",      "some",
    "such",    "than",    "that",    "the",        "their",   "theirs",  "them",    "themselves", "then",
    "there",   "these",   "they",    "this",       "those",   "though",  "through", "thus",    "to",
    "too",     "under",   "until",   "up",         "upon",    "us",      "very",    "was",     "we",
    "were",    "what",    "when",    "where",      "whether", "which",   "while",   "who",     "whom",
    "whose",   "why",     "will",    "with",       "within",  "without", "would",   "yet",     "you",
    "your",    "yours",   "yourself",
};

}  // namespace

std::span<const std::string_view> stop_words() { return kStopWords; }

bool is_stop_word(std::string_view word) { return std::binary_search(kStopWords.begin(), kStopWords.end(), word); }

}  // namespace risklab
