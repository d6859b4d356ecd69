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

#ifndef CROSSTRACE_MODEL_HPP_
#define CROSSTRACE_MODEL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crosstrace/errors.hpp"
#include "crosstrace/ids.hpp"

namespace crosstrace {

enum class SpanKind { ingress, egress };
enum class Protocol { http, grpc, other };
enum class Syscall { send, recv };

inline const char* to_string(SpanKind k) { return k == SpanKind::ingress ? "ingress" : "egress"; }
inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::http: return "http";
    case Protocol::grpc: return "grpc";
    default: return "other";
  }
}
inline const char* to_string(Syscall s) { return s == Syscall::send ? "send" : "recv"; }

inline bool is_multiplexed(Protocol p) { return p == Protocol::grpc; }

/// A timed operation observed at one service. Ingress spans cover
/// receive -> respond, egress spans cover send -> receive-response.
struct Span {
  SpanId span_id;
  SpanKind kind = SpanKind::ingress;
  std::string service;
  std::int32_t pid = 0;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
  Protocol protocol = Protocol::http;
  std::optional<SpanId> parent_span_id;
  std::optional<TraceId> trace_id;

  std::int64_t duration_us() const { return end_us - start_us; }
};

inline void validate(const Span& s) {
  if (s.span_id.empty()) throw IntegrityError("span with empty id");
  if (s.end_us < s.start_us)
    throw IntegrityError("span " + s.span_id + ": end_us " + std::to_string(s.end_us) +
                         " < start_us " + std::to_string(s.start_us));
}

/// One syscall-like observation: who talked to whom, in which direction,
/// over which protocol/stream, and when.
struct EventRecord {
  std::string remote;
  std::string local;
  Syscall syscall = Syscall::recv;
  Protocol protocol = Protocol::http;
  std::optional<std::int64_t> stream_id;  // present iff protocol is multiplexed
  std::int32_t pid = 0;
  std::int64_t ts_us = 0;
  std::optional<SpanId> prop_span_id;
};

inline void validate(const EventRecord& e) {
  if (e.ts_us < 0) throw IntegrityError("event with negative ts_us");
  if (e.stream_id.has_value() != is_multiplexed(e.protocol))
    throw IntegrityError("stream_id must be present exactly for multiplexed protocols");
  if (e.stream_id && *e.stream_id < 0) throw IntegrityError("negative stream_id");
}

/// Ordered downstream calls one ingress request triggers at a service.
/// Position k runs 1..n; there are n+1 delay slots around the egress calls.
struct CallGraph {
  std::string service;
  std::vector<std::string> egress_targets;  // index i = position i+1

  int fanout() const { return static_cast<int>(egress_targets.size()); }
  int delay_positions() const { return fanout() + 1; }
};

/// True ingress -> ordered egress children mapping, used for scoring only.
struct GroundTruth {
  std::map<SpanId, std::vector<SpanId>> tuples;
};

inline void validate(const GroundTruth& gt) {
  std::set<SpanId> seen;
  for (const auto& [ingress, egress] : gt.tuples) {
    for (const auto& id : egress) {
      if (!seen.insert(id).second)
        throw IntegrityError("ground truth reuses egress span " + id);
    }
  }
}

struct CandidateAssignment {
  std::vector<SpanId> egress;   // ordered by call-graph position
  double pds = 0.0;
  double cds = 0.0;
  std::vector<bool> duplicated;  // parallel to egress
};

/// Output of cross-thread correlation for one service. In single-candidate
/// mode each assigned ingress span has exactly one entry and egress ids are
/// globally one-to-one; multi-candidate mode appends near-top alternatives
/// whose contested egress ids carry the duplicated flag.
struct CorrelationResult {
  std::map<SpanId, std::vector<CandidateAssignment>> assignments;
  std::vector<SpanId> unassigned;
  bool multi_candidate = false;
  bool degraded = false;          // scored by -CDS because too few high-certainty spans
  int approximate_components = 0;  // conflict sets resolved greedily past the cap
};

/// Checks the one-to-one invariant over primary assignments (first entry per
/// ingress span, non-duplicated ids only).
inline void validate_one_to_one(const CorrelationResult& r) {
  std::set<SpanId> used;
  for (const auto& [ingress, cands] : r.assignments) {
    if (cands.empty()) throw IntegrityError("empty assignment list for " + ingress);
    if (!r.multi_candidate && cands.size() != 1)
      throw IntegrityError("multiple assignments for " + ingress + " in single-candidate mode");
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      const auto& c = cands[ci];
      if (!c.duplicated.empty() && c.duplicated.size() != c.egress.size())
        throw IntegrityError("duplicated flags size mismatch for " + ingress);
      for (std::size_t i = 0; i < c.egress.size(); ++i) {
        bool dup = i < c.duplicated.size() && c.duplicated[i];
        if (dup) continue;
        if (!used.insert(c.egress[i]).second)
          throw IntegrityError("egress span " + c.egress[i] + " assigned twice");
      }
    }
  }
}

}  // namespace crosstrace

#endif  // CROSSTRACE_MODEL_HPP_
