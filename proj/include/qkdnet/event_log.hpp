#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "qkdnet/graph.hpp"

namespace qkdnet {

struct Event {
  std::uint64_t round = 0;
  NodeId node = 0;
  std::string event;
  std::string subject;
  std::string outcome;
};

/// Append-only protocol trace; one JSON object per line when written.
class EventLog {
 public:
  enum class Level { off, protocol, full };

  explicit EventLog(Level level = Level::protocol) : level_(level) {}

  Level level() const { return level_; }
  bool wants(Level l) const { return level_ != Level::off && static_cast<int>(l) <= static_cast<int>(level_); }
  void add(Level l, std::uint64_t round, NodeId node, std::string event, std::string subject, std::string outcome);
  void add(std::uint64_t round, NodeId node, std::string event, std::string subject, std::string outcome) {
    add(Level::protocol, round, node, std::move(event), std::move(subject), std::move(outcome));
  }

  const std::vector<Event>& events() const { return events_; }
  std::size_t count(const std::string& event, const std::string& outcome = {}) const;
  void write_jsonl(std::ostream& os) const;

 private:
  Level level_;
  std::vector<Event> events_;
};

}  // namespace qkdnet
