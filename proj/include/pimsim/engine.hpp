/*
 * Copyright 2026 the pimsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace pimsim {

using SimTime = uint64_t;

/// Fatal protocol/usage error inside the simulator. Indicates a bug, not a
/// modeled condition; the CLI maps it to a nonzero exit.
struct SimBug : std::logic_error {
    explicit SimBug(const std::string& what) : std::logic_error(what) {}
};

/// Resource/limit error (watchdog, config-driven caps).
struct SimLimit : std::runtime_error {
    explicit SimLimit(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Deterministic counter-based RNG. A stream is keyed by (seed, label); the
// n-th draw of a stream is a pure function of (seed, label, n), so adding a
// new stream never perturbs existing ones.
// ---------------------------------------------------------------------------

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}
inline uint64_t fnv1a(const char* s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (; *s; ++s) {
        h ^= static_cast<uint8_t>(*s);
        h *= 0x100000001B3ull;
    }
    return h;
}
inline uint64_t fnv1a_step(uint64_t h, uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (i * 8)) & 0xFF;
        h *= 0x100000001B3ull;
    }
    return h;
}
}  // namespace detail

class RngStream {
  public:
    RngStream() : key_(0), idx_(0) {}
    RngStream(uint64_t seed, const std::string& label)
        : key_(detail::splitmix64(seed ^ detail::fnv1a(label.c_str()))), idx_(0) {}

    uint64_t next() { return detail::splitmix64(key_ + 0x9E3779B97F4A7C15ull * ++idx_); }

    /// Uniform integer in [lo, hi]. lo > hi is rejected.
    int64_t uniform(int64_t lo, int64_t hi) {
        if (lo > hi) throw SimBug("RngStream::uniform: lo > hi");
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        if (span == 0) return lo + static_cast<int64_t>(next());  // full 2^64 range
        // Lemire multiply-shift; bias < 2^-64, deterministic across platforms.
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * span;
        return lo + static_cast<int64_t>(static_cast<uint64_t>(m >> 64));
    }

    double uniform01() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

    uint64_t draws() const { return idx_; }

  private:
    uint64_t key_;
    uint64_t idx_;
};

// ---------------------------------------------------------------------------
// Nondeterminism source. Random mode draws from a seeded stream; exhaustive
// mode replays a prefix of a choice path and records fanouts so an explorer
// can enumerate the tree. Default mode always picks 0 (fully deterministic).
// ---------------------------------------------------------------------------

class Chooser {
  public:
    virtual ~Chooser() = default;
    /// Pick an alternative in [0, n). n >= 1.
    virtual size_t choose(size_t n, const char* label) = 0;
    /// True when running under tree enumeration (enables lazy race branching).
    virtual bool exhaustive() const { return false; }
};

class DefaultChooser final : public Chooser {
  public:
    size_t choose(size_t n, const char*) override {
        if (n == 0) throw SimBug("choose: empty alternative set");
        return 0;
    }
};

class RandomChooser final : public Chooser {
  public:
    RandomChooser(uint64_t seed, const std::string& label) : stream_(seed, label) {}
    size_t choose(size_t n, const char*) override {
        if (n == 0) throw SimBug("choose: empty alternative set");
        return static_cast<size_t>(stream_.uniform(0, static_cast<int64_t>(n) - 1));
    }

  private:
    RngStream stream_;
};

/// Replays `path`; past the end takes alternative 0. Records the fanout of
/// every choice point it meets, and whether any branching point past the
/// depth bound was suppressed (exploration then reports partial coverage).
class TreeChooser final : public Chooser {
  public:
    TreeChooser(std::vector<uint32_t> path, size_t depth_bound)
        : path_(std::move(path)), depth_bound_(depth_bound) {}

    size_t choose(size_t n, const char* label) override {
        if (n == 0) throw SimBug("choose: empty alternative set");
        fanouts_.push_back(static_cast<uint32_t>(n));
        labels_.push_back(label);
        size_t pos = fanouts_.size() - 1;
        if (pos < path_.size()) {
            if (path_[pos] >= n) throw SimBug("TreeChooser: replay path out of range");
            return path_[pos];
        }
        if (pos >= depth_bound_ && n > 1) truncated_ = true;
        return 0;
    }
    bool exhaustive() const override { return true; }

    const std::vector<uint32_t>& fanouts() const { return fanouts_; }
    const std::vector<const char*>& labels() const { return labels_; }
    bool truncated() const { return truncated_; }

  private:
    std::vector<uint32_t> path_;
    size_t depth_bound_;
    std::vector<uint32_t> fanouts_;
    std::vector<const char*> labels_;
    bool truncated_ = false;
};

// ---------------------------------------------------------------------------
// Discrete-event engine. Single logical thread; total dispatch order is
// (fire_time, tie_seq), so a run is a pure function of its inputs.
// ---------------------------------------------------------------------------

struct Event {
    SimTime fire_time = 0;
    uint64_t tie_seq = 0;
    int target = -1;  // component id, for diagnostics/trace hashing
    std::function<void()> payload;
};

class Engine {
  public:
    SimTime now() const { return now_; }

    void schedule_at(SimTime t, int target, std::function<void()> fn) {
        if (t < now_) {
            throw SimBug("schedule_at: event in the past (t=" + std::to_string(t) +
                         " now=" + std::to_string(now_) + " target=" + std::to_string(target) + ")");
        }
        queue_.push(Event{t, ++tie_counter_, target, std::move(fn)});
    }
    void schedule_in(SimTime delay, int target, std::function<void()> fn) {
        schedule_at(now_ + delay, target, std::move(fn));
    }

    /// Dispatch everything with fire_time <= limit (or until quiescence).
    /// Returns the time of the last dispatched event (now()).
    SimTime run_until(SimTime limit) {
        while (!queue_.empty() && queue_.top().fire_time <= limit) {
            Event ev = queue_.top();
            queue_.pop();
            now_ = ev.fire_time;
            ++dispatched_;
            trace_hash_ = detail::fnv1a_step(trace_hash_, ev.fire_time);
            trace_hash_ = detail::fnv1a_step(trace_hash_, ev.tie_seq);
            trace_hash_ = detail::fnv1a_step(trace_hash_, static_cast<uint64_t>(ev.target));
            if (watchdog_ && dispatched_ > watchdog_) {
                throw SimLimit("event watchdog exceeded (" + std::to_string(watchdog_) +
                               " events): likely livelock");
            }
            ev.payload();
            if (event_hook_) event_hook_(dispatched_);
        }
        return now_;
    }
    SimTime run() { return run_until(UINT64_MAX); }

    bool quiescent() const { return queue_.empty(); }
    uint64_t dispatched() const { return dispatched_; }
    void set_watchdog(uint64_t max_events) { watchdog_ = max_events; }
    /// Called after every dispatched event with the dispatch count (used for
    /// periodic invariant checking).
    void set_event_hook(std::function<void(uint64_t)> h) { event_hook_ = std::move(h); }
    /// FNV hash over the dispatch sequence; equal seeds/config => equal hash.
    uint64_t trace_hash() const { return trace_hash_; }

  private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
            return a.tie_seq > b.tie_seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    SimTime now_ = 0;
    uint64_t tie_counter_ = 0;
    uint64_t dispatched_ = 0;
    uint64_t watchdog_ = 0;
    uint64_t trace_hash_ = 0xCBF29CE484222325ull;
    std::function<void(uint64_t)> event_hook_;
};

}  // namespace pimsim
