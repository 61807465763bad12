#include "qkdnet/event_log.hpp"

#include "json.hpp"

namespace qkdnet {

void EventLog::add(Level l, std::uint64_t round, NodeId node, std::string event, std::string subject,
                   std::string outcome) {
  if (!wants(l)) return;
  events_.push_back({round, node, std::move(event), std::move(subject), std::move(outcome)});
}

std::size_t EventLog::count(const std::string& event, const std::string& outcome) const {
  std::size_t n = 0;
  for (const auto& e : events_) n += e.event == event && (outcome.empty() || e.outcome == outcome);
  return n;
}

void EventLog::write_jsonl(std::ostream& os) const {
  for (const auto& e : events_) {
    nlohmann::ordered_json j;
    j["round"] = e.round;
    j["node"] = e.node;
    j["event"] = e.event;
    j["subject"] = e.subject;
    j["outcome"] = e.outcome;
    os << j.dump() << '\n';
  }
}

}  // namespace qkdnet
