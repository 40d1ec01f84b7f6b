/*
 * Copyright 2026 the tcpsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
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
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace tcpsim {

/// Simulated time in seconds.
using SimTime = double;

/// Base class for everything this library throws.
class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad field, unknown key, unreachable node, ...).
/// The CLI maps this to exit code 1.
class ConfigError : public SimError {
public:
    using SimError::SimError;
};

/// Protocol violation or fault while a simulation is running.
/// The CLI maps this to exit code 2.
class ProtocolError : public SimError {
public:
    using SimError::SimError;
};

/// Identifies a scheduled event so it can be cancelled (RTO timers are
/// cancelled and re-armed on every ACK).
struct EventHandle {
    SimTime at = 0;
    std::uint64_t seq = std::numeric_limits<std::uint64_t>::max();

    bool valid() const { return seq != std::numeric_limits<std::uint64_t>::max(); }
    void invalidate() { seq = std::numeric_limits<std::uint64_t>::max(); }
};

// Single-threaded event scheduler. Events with equal fire time execute in
// insertion order, so a run is a pure function of the event program.
class EventQueue {
public:
    using Action = std::function<void()>;

    SimTime now() const { return now_; }
    std::size_t pending() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    EventHandle schedule(SimTime at, Action action) {
        if (at < now_) {
            std::ostringstream os;
            os << "schedule: event time " << at << " is before current clock " << now_;
            throw std::logic_error(os.str());
        }
        Key key{at, next_seq_++};
        events_.emplace(key, std::move(action));
        return EventHandle{key.at, key.seq};
    }

    EventHandle schedule_in(SimTime delay, Action action) {
        return schedule(now_ + delay, std::move(action));
    }

    /// Removes a pending event. Returns false if it already fired or was
    /// cancelled before.
    bool cancel(const EventHandle& h) {
        if (!h.valid())
            return false;
        return events_.erase(Key{h.at, h.seq}) > 0;
    }

    /// Executes every event with fire time <= t_end in (time, insertion)
    /// order, then advances the clock to t_end. Returns the number executed.
    std::size_t run_until(SimTime t_end) {
        std::size_t executed = 0;
        while (!events_.empty()) {
            auto it = events_.begin();
            if (it->first.at > t_end)
                break;
            auto node = events_.extract(it);
            now_ = node.key().at;
            Action action = std::move(node.mapped());
            try {
                action();
            } catch (const std::exception& e) {
                std::ostringstream os;
                os << "event at t=" << node.key().at << " seq=" << node.key().seq
                   << " failed: " << e.what();
                throw ProtocolError(os.str());
            }
            ++executed;
        }
        if (t_end > now_)
            now_ = t_end;
        return executed;
    }

private:
    struct Key {
        SimTime at;
        std::uint64_t seq;
        bool operator<(const Key& o) const {
            if (at != o.at)
                return at < o.at;
            return seq < o.seq;
        }
    };

    std::map<Key, Action> events_;
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
};

// Seeded uniform source for the loss process. mt19937_64 is fully specified
// by the standard, so the same seed yields the same stream on every
// platform; golden traces depend on that. The [0,1) mapping takes the top
// 53 bits rather than std::uniform_real_distribution, whose output is
// implementation-defined.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Next value in [0,1), 53-bit resolution.
    double next_uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace tcpsim
