#include "risklab/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace risklab {

using nlohmann::json;

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    if (!std::all_of(first, last, [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
    std::from_chars(first, last, value);
    return value;
  };
  auto y = field(0, 4);
  auto m = field(5, 2);
  auto d = field(8, 2);
  if (!y || !m || !d) return std::nullopt;
  Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
            std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

bool EventSet::add(Event event) {
  if (by_id_.contains(event.id)) return false;
  const std::size_t index = events_.size();
  by_id_.emplace(event.id, index);
  if (event.story && !event.story->empty()) by_story_[*event.story].push_back(index);
  events_.push_back(std::move(event));
  return true;
}

const Event* EventSet::find(EventId id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &events_[it->second];
}

std::vector<std::string> EventSet::stories() const {
  std::vector<std::string> out;
  out.reserve(by_story_.size());
  for (const auto& [story, _] : by_story_) out.push_back(story);
  return out;
}

std::vector<const Event*> EventSet::story_events(std::string_view story) const {
  std::vector<const Event*> out;
  auto it = by_story_.find(story);
  if (it == by_story_.end()) return out;
  for (std::size_t index : it->second) out.push_back(&events_[index]);
  return out;
}

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::optional<std::string> optional_string(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw CorpusError(std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

std::vector<std::string> string_list(const json& record, const char* key) {
  std::vector<std::string> out;
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return out;
  if (!it->is_array()) throw CorpusError(std::string("field '") + key + "' must be an array of strings");
  for (const auto& item : *it) {
    if (!item.is_string()) throw CorpusError(std::string("field '") + key + "' must be an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

Event event_from_json(const json& record) {
  if (!record.is_object()) throw CorpusError("record is not a JSON object");
  Event event;

  auto id = record.find("id");
  if (id == record.end() || !id->is_number_integer()) throw CorpusError("field 'id' must be an integer");
  event.id = id->get<EventId>();

  auto sentence = record.find("sentence");
  if (sentence == record.end() || !sentence->is_string()) throw CorpusError("field 'sentence' must be a string");
  event.sentence = sentence->get<std::string>();
  if (normalize_sentence(event.sentence).empty()) throw CorpusError("field 'sentence' is empty");

  auto date = record.find("date");
  if (date == record.end() || !date->is_string()) throw CorpusError("field 'date' must be an ISO 8601 string");
  auto parsed = parse_date(date->get<std::string>());
  if (!parsed) throw CorpusError("field 'date' is not a valid YYYY-MM-DD date");
  event.date = *parsed;

  event.story = optional_string(record, "story");
  event.category = optional_string(record, "category");
  event.entities = string_list(record, "entities");
  event.references = string_list(record, "references");
  return event;
}

json event_to_json(const Event& event) {
  json record;
  record["id"] = event.id;
  record["sentence"] = event.sentence;
  record["story"] = event.story ? json(*event.story) : json(nullptr);
  record["category"] = event.category ? json(*event.category) : json(nullptr);
  record["date"] = format_date(event.date);
  record["entities"] = event.entities;
  record["references"] = event.references;
  return record;
}

}  // namespace

LoadResult load_events(std::istream& in) {
  if (!in) throw CorpusError("event stream is not readable");
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), is_blank)) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      result.rejections.push_back({line_no, "malformed JSON"});
      continue;
    }
    try {
      Event event = event_from_json(record);
      const EventId id = event.id;
      if (!result.events.add(std::move(event))) {
        result.rejections.push_back({line_no, "duplicate id " + std::to_string(id)});
      }
    } catch (const CorpusError& e) {
      result.rejections.push_back({line_no, e.what()});
    }
  }
  if (in.bad()) throw CorpusError("read error on event stream");
  return result;
}

LoadResult load_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open event file: " + path);
  return load_events(in);
}

void write_events(std::ostream& out, const EventSet& events) {
  for (const Event& event : events.events()) out << event_to_json(event).dump() << '\n';
}

void write_rejections(std::ostream& out, const std::vector<Rejection>& rejections) {
  for (const Rejection& r : rejections) out << json{{"line", r.line}, {"reason", r.reason}}.dump() << '\n';
}

std::string normalize_sentence(std::string_view sentence) {
  std::string out;
  out.reserve(sentence.size());
  bool pending_space = false;
  for (char c : sentence) {
    if (is_blank(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

namespace {

// Decodes one UTF-8 sequence starting at `pos`; malformed bytes decode as
// themselves with length 1.
char32_t decode_utf8(std::string_view s, std::size_t pos, std::size_t& length) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  std::size_t need = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    length = 1;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    need = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    need = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    need = 3;
    cp = lead & 0x07;
  } else {
    length = 1;
    return lead;
  }
  if (pos + need >= s.size()) {
    length = 1;
    return lead;
  }
  for (std::size_t i = 1; i <= need; ++i) {
    const auto byte = static_cast<unsigned char>(s[pos + i]);
    if ((byte & 0xC0) != 0x80) {
      length = 1;
      return lead;
    }
    cp = (cp << 6) | (byte & 0x3F);
  }
  length = need + 1;
  return cp;
}

constexpr char32_t kEuroSign = 0x20AC;

// Non-ASCII code points that act as punctuation or spacing.
bool is_unicode_separator(char32_t cp) {
  return (cp >= 0x0080 && cp <= 0x00BF) || cp == 0x00D7 || cp == 0x00F7 ||
         (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x20A0 && cp <= 0x20CF) ||
         (cp >= 0x3000 && cp <= 0x303F) || cp == 0xFEFF;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };

  std::size_t pos = 0;
  while (pos < sentence.size()) {
    const char c = sentence[pos];
    const auto byte = static_cast<unsigned char>(c);
    if (byte < 0x80) {
      if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
        current.push_back(c);
      } else if (c >= 'A' && c <= 'Z') {
        current.push_back(static_cast<char>(c - 'A' + 'a'));
      } else if (c == '$') {
        flush();
        tokens.emplace_back("$");
      } else {
        flush();
      }
      ++pos;
      continue;
    }
    std::size_t length = 1;
    const char32_t cp = decode_utf8(sentence, pos, length);
    if (cp == kEuroSign) {
      flush();
      tokens.emplace_back(sentence.substr(pos, length));
    } else if (is_unicode_separator(cp)) {
      flush();
    } else {
      current.append(sentence.substr(pos, length));
    }
    pos += length;
  }
  flush();
  return tokens;
}

BagOfWords::BagOfWords(const std::vector<std::string>& tokens) {
  for (const auto& token : tokens) ++counts_[token];
  total_ = tokens.size();
}

int BagOfWords::count(const std::string& word) const {
  auto it = counts_.find(word);
  return it == counts_.end() ? 0 : it->second;
}

BagOfWords bag_of_words(std::string_view sentence) { return BagOfWords(tokenize(sentence)); }

}  // namespace risklab
