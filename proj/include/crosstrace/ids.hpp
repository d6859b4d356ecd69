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

#ifndef CROSSTRACE_IDS_HPP_
#define CROSSTRACE_IDS_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>

namespace crosstrace {

// Span and trace identifiers are opaque 16-char lowercase hex strings.
using SpanId = std::string;
using TraceId = std::string;

inline std::string to_hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Seeded generator of unique span ids. Re-draws on collision so ids stay
/// unique within one generator's lifetime.
class IdGenerator {
 public:
  explicit IdGenerator(std::uint64_t seed) : rng_(seed) {}

  SpanId next() {
    for (;;) {
      SpanId id = to_hex16(rng_());
      if (used_.insert(id).second) return id;
    }
  }

  /// Marks an externally supplied id as taken. Returns false if already used.
  bool reserve(const SpanId& id) { return used_.insert(id).second; }

 private:
  std::mt19937_64 rng_;
  std::unordered_set<SpanId> used_;
};

/// Deterministic trace id for a connected component, derived from its
/// smallest member span id.
inline TraceId derive_trace_id(const SpanId& min_member) {
  return to_hex16(fnv1a64(min_member));
}

}  // namespace crosstrace

#endif  // CROSSTRACE_IDS_HPP_
