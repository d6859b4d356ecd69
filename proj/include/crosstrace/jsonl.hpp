// Copyright 2026 The crosstrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Line-delimited JSON formats for spans, events, call graphs, ground truth
// and correlation results. One record per line; writers emit canonical
// (sorted-key) JSON so identical inputs produce identical bytes.

#ifndef CROSSTRACE_JSONL_HPP_
#define CROSSTRACE_JSONL_HPP_

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crosstrace/errors.hpp"
#include "crosstrace/model.hpp"

namespace crosstrace {

namespace detail {

inline Protocol parse_protocol(const std::string& s, std::size_t line) {
  if (s == "http") return Protocol::http;
  if (s == "grpc") return Protocol::grpc;
  if (s == "other") return Protocol::other;
  throw ParseError(line, "unknown protocol '" + s + "'");
}

inline SpanKind parse_kind(const std::string& s, std::size_t line) {
  if (s == "ingress") return SpanKind::ingress;
  if (s == "egress") return SpanKind::egress;
  throw ParseError(line, "unknown span kind '" + s + "'");
}

inline Syscall parse_syscall(const std::string& s, std::size_t line) {
  if (s == "send") return Syscall::send;
  if (s == "recv") return Syscall::recv;
  throw ParseError(line, "unknown syscall '" + s + "'");
}

inline nlohmann::json parse_line(const std::string& text, std::size_t line) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(line, "invalid JSON");
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  return j;
}

template <typename T>
T require(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(line, std::string("field '") + key + "' has wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(line, std::string("field '") + key + "' has wrong type");
  }
}

inline nlohmann::json opt_json(const std::optional<std::string>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json opt_json(const std::optional<std::int64_t>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spans
// ---------------------------------------------------------------------------

inline nlohmann::json span_to_json(const Span& s) {
  return {
      {"span_id", s.span_id},
      {"kind", to_string(s.kind)},
      {"service", s.service},
      {"pid", s.pid},
      {"start_us", s.start_us},
      {"end_us", s.end_us},
      {"protocol", to_string(s.protocol)},
      {"parent_span_id", detail::opt_json(s.parent_span_id)},
      {"trace_id", detail::opt_json(s.trace_id)},
  };
}

inline Span span_from_json(const nlohmann::json& j, std::size_t line) {
  Span s;
  s.span_id = detail::require<std::string>(j, "span_id", line);
  s.kind = detail::parse_kind(detail::require<std::string>(j, "kind", line), line);
  s.service = detail::require<std::string>(j, "service", line);
  s.pid = detail::require<std::int32_t>(j, "pid", line);
  s.start_us = detail::require<std::int64_t>(j, "start_us", line);
  s.end_us = detail::require<std::int64_t>(j, "end_us", line);
  s.protocol = detail::parse_protocol(detail::require<std::string>(j, "protocol", line), line);
  s.parent_span_id = detail::optional_field<std::string>(j, "parent_span_id", line);
  s.trace_id = detail::optional_field<std::string>(j, "trace_id", line);
  return s;
}

inline void write_spans(const std::vector<Span>& spans, std::ostream& out) {
  for (const auto& s : spans) {
    validate(s);
    out << span_to_json(s).dump() << '\n';
  }
  if (!out) throw Error("write_spans: sink write failure");
}

inline std::vector<Span> read_spans(std::istream& in) {
  std::vector<Span> spans;
  std::set<SpanId> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    Span s = span_from_json(detail::parse_line(text, line), line);
    validate(s);
    if (!ids.insert(s.span_id).second)
      throw IntegrityError("duplicate span_id " + s.span_id + " at line " + std::to_string(line));
    spans.push_back(std::move(s));
  }
  return spans;
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

inline nlohmann::json event_to_json(const EventRecord& e) {
  return {
      {"remote", e.remote},
      {"local", e.local},
      {"syscall", to_string(e.syscall)},
      {"protocol", to_string(e.protocol)},
      {"stream_id", detail::opt_json(e.stream_id)},
      {"pid", e.pid},
      {"ts_us", e.ts_us},
      {"prop_span_id", detail::opt_json(e.prop_span_id)},
  };
}

inline EventRecord event_from_json(const nlohmann::json& j, std::size_t line) {
  EventRecord e;
  e.remote = detail::require<std::string>(j, "remote", line);
  e.local = detail::require<std::string>(j, "local", line);
  e.syscall = detail::parse_syscall(detail::require<std::string>(j, "syscall", line), line);
  e.protocol = detail::parse_protocol(detail::require<std::string>(j, "protocol", line), line);
  e.stream_id = detail::optional_field<std::int64_t>(j, "stream_id", line);
  e.pid = detail::require<std::int32_t>(j, "pid", line);
  e.ts_us = detail::require<std::int64_t>(j, "ts_us", line);
  e.prop_span_id = detail::optional_field<std::string>(j, "prop_span_id", line);
  return e;
}

inline void write_events(const std::vector<EventRecord>& events, std::ostream& out) {
  for (const auto& e : events) {
    validate(e);
    out << event_to_json(e).dump() << '\n';
  }
  if (!out) throw Error("write_events: sink write failure");
}

inline std::vector<EventRecord> read_events(std::istream& in) {
  std::vector<EventRecord> events;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    EventRecord e = event_from_json(detail::parse_line(text, line), line);
    validate(e);
    events.push_back(std::move(e));
  }
  return events;
}

// ---------------------------------------------------------------------------
// Call graphs: one document per service.
// ---------------------------------------------------------------------------

inline void write_call_graphs(const std::vector<CallGraph>& graphs, std::ostream& out) {
  for (const auto& g : graphs) {
    nlohmann::json calls = nlohmann::json::array();
    for (std::size_t i = 0; i < g.egress_targets.size(); ++i)
      calls.push_back({{"position", i + 1}, {"target", g.egress_targets[i]}});
    out << nlohmann::json{{"service", g.service}, {"egress_calls", calls}}.dump() << '\n';
  }
}

inline std::vector<CallGraph> read_call_graphs(std::istream& in) {
  std::vector<CallGraph> graphs;
  std::set<std::string> services;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json j = detail::parse_line(text, line);
    CallGraph g;
    g.service = detail::require<std::string>(j, "service", line);
    if (!services.insert(g.service).second)
      throw ParseError(line, "duplicate call graph for service " + g.service);
    auto calls = detail::require<nlohmann::json>(j, "egress_calls", line);
    if (!calls.is_array()) throw ParseError(line, "egress_calls must be an array");
    std::map<int, std::string> by_position;
    for (const auto& c : calls) {
      int pos = detail::require<int>(c, "position", line);
      if (!by_position.emplace(pos, detail::require<std::string>(c, "target", line)).second)
        throw ParseError(line, "duplicate egress position " + std::to_string(pos));
    }
    int expect = 1;
    for (const auto& [pos, target] : by_position) {
      if (pos != expect++)
        throw ParseError(line, "egress positions must be contiguous from 1");
      g.egress_targets.push_back(target);
    }
    graphs.push_back(std::move(g));
  }
  return graphs;
}

// ---------------------------------------------------------------------------
// Ground truth: intra-service tuples plus true inter-service parent links.
// ---------------------------------------------------------------------------

struct GroundTruthFile {
  GroundTruth truth;
  std::map<SpanId, SpanId> inter_links;  // child ingress -> parent egress
};

inline void write_ground_truth(const GroundTruth& truth,
                               const std::map<SpanId, SpanId>& inter_links,
                               std::ostream& out) {
  for (const auto& [ingress, egress] : truth.tuples)
    out << nlohmann::json{{"ingress", ingress}, {"egress", egress}}.dump() << '\n';
  for (const auto& [child, parent] : inter_links)
    out << nlohmann::json{{"child", child}, {"parent", parent}}.dump() << '\n';
}

inline GroundTruthFile read_ground_truth(std::istream& in) {
  GroundTruthFile gt;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json j = detail::parse_line(text, line);
    if (j.contains("ingress")) {
      auto ingress = detail::require<std::string>(j, "ingress", line);
      auto egress = detail::require<std::vector<std::string>>(j, "egress", line);
      if (!gt.truth.tuples.emplace(ingress, std::move(egress)).second)
        throw ParseError(line, "duplicate ground-truth tuple for " + ingress);
    } else if (j.contains("child")) {
      auto child = detail::require<std::string>(j, "child", line);
      auto parent = detail::require<std::string>(j, "parent", line);
      if (!gt.inter_links.emplace(child, parent).second)
        throw ParseError(line, "duplicate inter link for " + child);
    } else {
      throw ParseError(line, "record is neither a tuple nor an inter link");
    }
  }
  validate(gt.truth);
  return gt;
}

// ---------------------------------------------------------------------------
// Correlation results: one line per emitted candidate.
// ---------------------------------------------------------------------------

inline void write_correlation_result(const CorrelationResult& r, std::ostream& out) {
  for (const auto& [ingress, cands] : r.assignments) {
    for (const auto& c : cands) {
      std::vector<bool> dup = c.duplicated;
      dup.resize(c.egress.size(), false);
      out << nlohmann::json{{"ingress", ingress},
                            {"egress", c.egress},
                            {"pds", c.pds},
                            {"cds", c.cds},
                            {"duplicated", dup}}
                 .dump()
          << '\n';
    }
  }
  for (const auto& id : r.unassigned)
    out << nlohmann::json{{"ingress", id},
                          {"egress", nlohmann::json::array()},
                          {"pds", 0.0},
                          {"cds", 0.0},
                          {"duplicated", nlohmann::json::array()}}
               .dump()
        << '\n';
}

inline CorrelationResult read_correlation_result(std::istream& in) {
  CorrelationResult r;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json j = detail::parse_line(text, line);
    auto ingress = detail::require<std::string>(j, "ingress", line);
    CandidateAssignment c;
    c.egress = detail::require<std::vector<std::string>>(j, "egress", line);
    c.pds = detail::require<double>(j, "pds", line);
    c.cds = detail::require<double>(j, "cds", line);
    c.duplicated = detail::require<std::vector<bool>>(j, "duplicated", line);
    if (c.egress.empty()) {
      r.unassigned.push_back(ingress);
    } else {
      r.assignments[ingress].push_back(std::move(c));
      if (r.assignments[ingress].size() > 1) r.multi_candidate = true;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

template <typename Reader>
auto read_file(const std::string& path, Reader reader) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return reader(in);
}

template <typename Writer>
void write_file(const std::string& path, Writer writer) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  writer(out);
}

}  // namespace crosstrace

#endif  // CROSSTRACE_JSONL_HPP_
