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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tcpsim/engine.hpp"
#include "tcpsim/packet.hpp"

namespace tcpsim {

enum class TraceKind {
    Send,
    Recv,
    Enq,
    Deq,
    DropQueue,
    DropLoss,
    Ack,
    Cwnd,
    RtoFire,
    Retransmit,
};

inline const char* to_string(TraceKind k) {
    switch (k) {
    case TraceKind::Send: return "send";
    case TraceKind::Recv: return "recv";
    case TraceKind::Enq: return "enq";
    case TraceKind::Deq: return "deq";
    case TraceKind::DropQueue: return "drop_queue";
    case TraceKind::DropLoss: return "drop_loss";
    case TraceKind::Ack: return "ack";
    case TraceKind::Cwnd: return "cwnd";
    case TraceKind::RtoFire: return "rto_fire";
    case TraceKind::Retransmit: return "retransmit";
    }
    return "?";
}

inline bool trace_kind_from(std::string_view s, TraceKind& out) {
    static constexpr TraceKind kinds[] = {
        TraceKind::Send, TraceKind::Recv,     TraceKind::Enq,  TraceKind::Deq,
        TraceKind::DropQueue, TraceKind::DropLoss, TraceKind::Ack,  TraceKind::Cwnd,
        TraceKind::RtoFire,   TraceKind::Retransmit,
    };
    for (TraceKind k : kinds) {
        if (s == to_string(k)) {
            out = k;
            return true;
        }
    }
    return false;
}

// One trace record. Times and the aux value are quantized to 1e-6 units at
// emission and stored as integers, so a summary computed in memory and one
// recomputed from the written file see identical inputs.
//
// aux carries the cwnd value (in MSS) for kind=cwnd and the RTT sample (in
// seconds, 0 = no sample taken) for kind=ack. For kind=cwnd the seq field
// holds ssthresh in micro-MSS; everywhere else seq is the packet's seq_no.
struct TraceRecord {
    std::int64_t t_us = 0;
    TraceKind kind = TraceKind::Send;
    NodeId node = 0;
    FlowId flow = 0;
    std::uint64_t pkt = 0;
    std::int64_t size = 0;
    std::int64_t seq = 0;
    std::int64_t aux_u = 0;

    double t() const { return static_cast<double>(t_us) * 1e-6; }
    double aux() const { return static_cast<double>(aux_u) * 1e-6; }
};

inline std::int64_t to_micros(double v) { return std::llround(v * 1e6); }

/// Fixed-point rendering of micro-units, e.g. 48576 -> "0.048576".
inline std::string format_micros(std::int64_t u) {
    bool neg = u < 0;
    std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(u + 1)) + 1 : static_cast<std::uint64_t>(u);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%llu.%06llu", neg ? "-" : "",
                  static_cast<unsigned long long>(mag / 1000000),
                  static_cast<unsigned long long>(mag % 1000000));
    return buf;
}

class TraceLog {
public:
    void emit(SimTime t, TraceKind kind, NodeId node, FlowId flow, std::uint64_t pkt,
              std::int64_t size, std::int64_t seq, double aux = 0.0) {
        records_.push_back(TraceRecord{to_micros(t), kind, node, flow, pkt, size, seq, to_micros(aux)});
    }

    void push(const TraceRecord& r) { records_.push_back(r); }

    const std::vector<TraceRecord>& records() const { return records_; }
    bool empty() const { return records_.empty(); }
    std::size_t size() const { return records_.size(); }
    void reserve(std::size_t n) { records_.reserve(n); }

    /// Time of the last record, i.e. the observed span of the run. 0 if empty.
    double span_s() const { return records_.empty() ? 0.0 : records_.back().t(); }

    static std::string format_line(const TraceRecord& r) {
        std::string line;
        line.reserve(96);
        line += "t=";
        line += format_micros(r.t_us);
        line += " ev=";
        line += to_string(r.kind);
        line += " node=";
        line += std::to_string(r.node);
        line += " flow=";
        line += std::to_string(r.flow);
        line += " pkt=";
        line += std::to_string(r.pkt);
        line += " size=";
        line += std::to_string(r.size);
        line += " seq=";
        line += std::to_string(r.seq);
        line += " aux=";
        line += format_micros(r.aux_u);
        return line;
    }

    static TraceRecord parse_line(std::string_view line) {
        TraceRecord r;
        std::string_view rest = line;
        r.t_us = parse_micros_field(take_field(rest, "t"));
        std::string_view ev = take_field(rest, "ev");
        if (!trace_kind_from(ev, r.kind))
            throw ConfigError("trace: unknown event kind '" + std::string(ev) + "'");
        r.node = static_cast<NodeId>(parse_int_field(take_field(rest, "node")));
        r.flow = static_cast<FlowId>(parse_int_field(take_field(rest, "flow")));
        r.pkt = static_cast<std::uint64_t>(parse_int_field(take_field(rest, "pkt")));
        r.size = parse_int_field(take_field(rest, "size"));
        r.seq = parse_int_field(take_field(rest, "seq"));
        r.aux_u = parse_micros_field(take_field(rest, "aux"));
        if (!rest.empty())
            throw ConfigError("trace: trailing data '" + std::string(rest) + "'");
        return r;
    }

    void write(std::ostream& os) const {
        for (const TraceRecord& r : records_) {
            os << format_line(r);
            os.put('\n');
        }
    }

    /// Reads a trace written by write(). Lines starting with '#' are banner
    /// or comment lines and are skipped.
    static TraceLog read(std::istream& is) {
        TraceLog log;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#')
                continue;
            try {
                log.records_.push_back(parse_line(line));
            } catch (const ConfigError& e) {
                throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        return log;
    }

private:
    // Grabs "key=value" (space-delimited) from the front of rest.
    static std::string_view take_field(std::string_view& rest, std::string_view key) {
        while (!rest.empty() && rest.front() == ' ')
            rest.remove_prefix(1);
        if (rest.substr(0, key.size()) != key || rest.size() <= key.size() || rest[key.size()] != '=')
            throw ConfigError("trace: expected field '" + std::string(key) + "'");
        rest.remove_prefix(key.size() + 1);
        std::size_t end = rest.find(' ');
        std::string_view value = rest.substr(0, end);
        rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
        return value;
    }

    static std::int64_t parse_int_field(std::string_view v) {
        std::int64_t out = 0;
        bool neg = false;
        std::size_t i = 0;
        if (i < v.size() && (v[i] == '-' || v[i] == '+')) {
            neg = v[i] == '-';
            ++i;
        }
        if (i == v.size())
            throw ConfigError("trace: bad integer '" + std::string(v) + "'");
        for (; i < v.size(); ++i) {
            if (v[i] < '0' || v[i] > '9')
                throw ConfigError("trace: bad integer '" + std::string(v) + "'");
            out = out * 10 + (v[i] - '0');
        }
        return neg ? -out : out;
    }

    static std::int64_t parse_micros_field(std::string_view v) {
        std::size_t dot = v.find('.');
        if (dot == std::string_view::npos || v.size() - dot - 1 != 6)
            throw ConfigError("trace: bad fixed-point value '" + std::string(v) + "'");
        bool neg = !v.empty() && v.front() == '-';
        std::int64_t whole = parse_int_field(v.substr(0, dot));
        std::int64_t frac = parse_int_field(v.substr(dot + 1));
        std::int64_t mag = (neg ? -whole : whole) * 1000000 + frac;
        return neg ? -mag : mag;
    }

    std::vector<TraceRecord> records_;
};

}  // namespace tcpsim
