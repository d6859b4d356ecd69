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

// Turns an ordered event stream into ingress/egress spans by replaying the
// open-span map: an event whose key has an opposite-direction open entry
// closes that span; otherwise it opens a new one. Also implements the
// cross-service span-id handoff as a deterministic annotation pass.

#ifndef CROSSTRACE_SPAN_BUILDER_HPP_
#define CROSSTRACE_SPAN_BUILDER_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "crosstrace/errors.hpp"
#include "crosstrace/ids.hpp"
#include "crosstrace/model.hpp"

namespace crosstrace {

/// Lookup key for open spans: socket tuple, protocol, stream and process.
struct PendingKey {
  std::string remote;
  std::string local;
  Protocol protocol = Protocol::http;
  std::optional<std::int64_t> stream_id;
  std::int32_t pid = 0;

  friend bool operator<(const PendingKey& a, const PendingKey& b) {
    return std::tie(a.remote, a.local, a.protocol, a.stream_id, a.pid) <
           std::tie(b.remote, b.local, b.protocol, b.stream_id, b.pid);
  }
  friend bool operator==(const PendingKey& a, const PendingKey& b) {
    return std::tie(a.remote, a.local, a.protocol, a.stream_id, a.pid) ==
           std::tie(b.remote, b.local, b.protocol, b.stream_id, b.pid);
  }
};

inline PendingKey key_of(const EventRecord& e) {
  return PendingKey{e.remote, e.local, e.protocol, e.stream_id, e.pid};
}

/// An open span awaiting its opposite-direction event. recv-opened entries
/// become ingress spans, send-opened entries become egress spans.
struct PendingSpan {
  PendingKey key;
  Syscall open_syscall = Syscall::recv;
  std::int64_t start_us = 0;
  std::optional<SpanId> propagated_parent;  // recv-opened: parent id from the wire
  std::optional<SpanId> self_id;            // send-opened: own id carried for embedding
};

inline SpanKind kind_of(const PendingSpan& p) {
  return p.open_syscall == Syscall::recv ? SpanKind::ingress : SpanKind::egress;
}

struct BuildResult {
  std::vector<Span> spans;
  std::vector<PendingSpan> unclosed;  // dropped at stream end
  std::size_t unclosed_count() const { return unclosed.size(); }
};

/// Builds spans from a timestamp-ordered event stream. Egress spans keep the
/// id embedded on their opening event when present; all other spans get
/// fresh ids from a seeded generator. Unclosed entries are dropped and
/// reported, never emitted as zero-length spans.
inline BuildResult build_spans(const std::vector<EventRecord>& events,
                               const std::map<std::int32_t, std::string>& service_of_pid,
                               std::uint64_t id_seed = 0xb51dULL) {
  BuildResult result;
  IdGenerator ids(id_seed);
  std::map<PendingKey, std::deque<PendingSpan>> pending;
  std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();

  for (const auto& e : events) {
    validate(e);
    if (e.ts_us < prev_ts)
      throw OrderingError("event at ts_us " + std::to_string(e.ts_us) +
                          " precedes an earlier event at " + std::to_string(prev_ts));
    prev_ts = e.ts_us;
    auto svc = service_of_pid.find(e.pid);
    if (svc == service_of_pid.end())
      throw MappingError("no service mapping for pid " + std::to_string(e.pid));

    PendingKey key = key_of(e);
    auto& queue = pending[key];
    auto match = queue.end();
    for (auto it = queue.begin(); it != queue.end(); ++it) {
      if (it->open_syscall != e.syscall) {
        match = it;
        break;
      }
    }
    if (match == queue.end()) {
      PendingSpan p;
      p.key = key;
      p.open_syscall = e.syscall;
      p.start_us = e.ts_us;
      if (e.syscall == Syscall::recv)
        p.propagated_parent = e.prop_span_id;
      else
        p.self_id = e.prop_span_id;
      queue.push_back(std::move(p));
      continue;
    }

    Span s;
    s.kind = kind_of(*match);
    if (s.kind == SpanKind::egress && match->self_id) {
      if (!ids.reserve(*match->self_id))
        throw IntegrityError("duplicate embedded span id " + *match->self_id);
      s.span_id = *match->self_id;
    } else {
      s.span_id = ids.next();
    }
    s.service = svc->second;
    s.pid = e.pid;
    s.start_us = match->start_us;
    s.end_us = e.ts_us;
    s.protocol = key.protocol;
    if (s.kind == SpanKind::ingress) s.parent_span_id = match->propagated_parent;
    queue.erase(match);
    result.spans.push_back(std::move(s));
  }

  for (auto& [key, queue] : pending)
    for (auto& p : queue) result.unclosed.push_back(std::move(p));
  return result;
}

// ---------------------------------------------------------------------------
// Cross-service span-id propagation
// ---------------------------------------------------------------------------

struct PropagationResult {
  std::vector<EventRecord> events;
  std::vector<std::string> warnings;  // dangling senders/receivers, collected
};

namespace detail {

// Replays the pairing automaton just far enough to tell which events open
// spans and of which kind.
struct EventRole {
  bool opens = false;
  SpanKind kind = SpanKind::ingress;
};

inline std::vector<EventRole> classify_events(const std::vector<EventRecord>& events) {
  std::vector<EventRole> roles(events.size());
  std::map<PendingKey, std::deque<Syscall>> open;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    auto& queue = open[key_of(e)];
    auto match = queue.end();
    for (auto it = queue.begin(); it != queue.end(); ++it) {
      if (*it != e.syscall) {
        match = it;
        break;
      }
    }
    if (match == queue.end()) {
      roles[i].opens = true;
      roles[i].kind = e.syscall == Syscall::recv ? SpanKind::ingress : SpanKind::egress;
      queue.push_back(e.syscall);
    } else {
      queue.erase(match);
    }
  }
  return roles;
}

}  // namespace detail

/// Models the metadata channel between the two ends of a cross-service
/// request. Each egress-opening event that carries its span id is matched to
/// the earliest unannotated ingress-opening event on the mirrored connection
/// (remote/local swapped, same protocol and stream), which then receives the
/// sender's span id. Receiver annotations present in the input that name no
/// sender are reported as dangling.
inline PropagationResult propagate_span_ids(const std::vector<EventRecord>& events) {
  PropagationResult out;
  out.events = events;
  auto roles = detail::classify_events(events);

  // Receiver-side ingress-opening events indexed by connection identity.
  std::map<PendingKey, std::deque<std::size_t>> receivers;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (roles[i].opens && roles[i].kind == SpanKind::ingress)
      receivers[key_of(events[i])].push_back(i);
  }

  std::set<SpanId> embedded;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = out.events[i];
    if (!(roles[i].opens && roles[i].kind == SpanKind::egress && e.prop_span_id)) continue;
    embedded.insert(*e.prop_span_id);
    PendingKey mirrored{e.local, e.remote, e.protocol, e.stream_id, 0};
    bool matched = false;
    for (auto it = receivers.lower_bound(mirrored); it != receivers.end(); ++it) {
      const auto& k = it->first;
      if (k.remote != mirrored.remote || k.local != mirrored.local ||
          k.protocol != mirrored.protocol || k.stream_id != mirrored.stream_id)
        break;
      while (!it->second.empty()) {
        std::size_t ri = it->second.front();
        if (out.events[ri].ts_us < e.ts_us) {
          it->second.pop_front();
          continue;
        }
        out.events[ri].prop_span_id = *e.prop_span_id;
        it->second.pop_front();
        matched = true;
        break;
      }
      break;
    }
    if (!matched)
      out.warnings.push_back("no receiver found for egress span " + *e.prop_span_id);
  }

  for (std::size_t i = 0; i < events.size(); ++i) {
    if (roles[i].opens && roles[i].kind == SpanKind::ingress && events[i].prop_span_id &&
        !embedded.count(*events[i].prop_span_id))
      out.warnings.push_back("receiver carries token " + *events[i].prop_span_id +
                             " with no matching sender");
  }
  return out;
}

/// Pulls the parent links present on spans (child ingress -> parent egress).
inline std::map<SpanId, SpanId> extract_inter_links(const std::vector<Span>& spans) {
  std::map<SpanId, SpanId> links;
  for (const auto& s : spans)
    if (s.kind == SpanKind::ingress && s.parent_span_id) links[s.span_id] = *s.parent_span_id;
  return links;
}

}  // namespace crosstrace

#endif  // CROSSTRACE_SPAN_BUILDER_HPP_
