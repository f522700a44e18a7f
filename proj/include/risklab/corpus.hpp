#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace risklab {

using EventId = std::int64_t;
using Date = std::chrono::year_month_day;

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses a strict YYYY-MM-DD calendar date.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

struct Event {
  EventId id = 0;
  std::string sentence;
  std::optional<std::string> story;
  std::optional<std::string> category;
  Date date{};
  std::vector<std::string> entities;
  std::vector<std::string> references;

  bool operator==(const Event&) const = default;
};

// Ordered, id-unique collection of events with id and story indexes.
// Immutable once loading is done; all accessors are const.
class EventSet {
 public:
  EventSet() = default;

  // Returns false (and leaves the set unchanged) when the id is already taken.
  bool add(Event event);

  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  const Event* find(EventId id) const;

  // Story titles in lexicographic order; only non-empty stories are indexed.
  std::vector<std::string> stories() const;
  std::vector<const Event*> story_events(std::string_view story) const;

  bool operator==(const EventSet& other) const { return events_ == other.events_; }

 private:
  std::vector<Event> events_;
  std::unordered_map<EventId, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_story_;
};

struct Rejection {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct LoadResult {
  EventSet events;
  std::vector<Rejection> rejections;
};

// Reads JSON-Lines event records. Bad records land in the rejection report;
// only an unreadable stream throws.
LoadResult load_events(std::istream& in);
LoadResult load_events_file(const std::string& path);

void write_events(std::ostream& out, const EventSet& events);
void write_rejections(std::ostream& out, const std::vector<Rejection>& rejections);

// Lowercases ASCII letters and collapses whitespace runs into one space.
// Keyword offsets refer to this form.
std::string normalize_sentence(std::string_view sentence);

// Letter/digit runs become lowercase tokens; '$' and the euro sign are
// single-character tokens; everything else separates.
std::vector<std::string> tokenize(std::string_view sentence);

class BagOfWords {
 public:
  BagOfWords() = default;
  explicit BagOfWords(const std::vector<std::string>& tokens);

  const std::map<std::string, int>& entries() const { return counts_; }
  int count(const std::string& word) const;
  std::size_t unique_words() const { return counts_.size(); }
  std::size_t total() const { return total_; }
  bool empty() const { return counts_.empty(); }

  bool operator==(const BagOfWords&) const = default;

 private:
  std::map<std::string, int> counts_;
  std::size_t total_ = 0;
};

BagOfWords bag_of_words(std::string_view sentence);

}  // namespace risklab
