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

#include <algorithm>
#include <cstdint>
#include <optional>

#include "tcpsim/engine.hpp"
#include "tcpsim/netmodel.hpp"
#include "tcpsim/packet.hpp"

namespace tcpsim {

/// "Unlimited" sentinel for unbounded FTP sources; large enough to never be
/// the binding constraint, small enough to add without overflow.
inline constexpr std::int64_t kUnboundedBytes = std::int64_t{1} << 56;

// Greedy file source feeding a TCP sender. Offers data whenever asked until
// total_bytes is exhausted; no total means an unbounded transfer.
struct FtpSource {
    FlowId flow_id = 0;
    std::optional<std::int64_t> total_bytes;

    std::int64_t available(std::int64_t already_sent) const {
        if (!total_bytes)
            return kUnboundedBytes;
        return std::max<std::int64_t>(*total_bytes - already_sent, 0);
    }
};

// Constant-bit-rate source over UDP. Emission k happens at
// start + k * period (computed by multiplication, so the spacing is exact)
// for every k with emission time strictly before stop.
class CbrSource {
public:
    CbrSource(FlowId flow, NodeId src, NodeId dst, double rate_bps, std::int64_t packet_bytes,
              SimTime start, SimTime stop, EventQueue& queue, Network& net, TraceLog& trace)
        : flow_(flow),
          src_(src),
          dst_(dst),
          packet_bytes_(packet_bytes),
          period_(static_cast<double>(packet_bytes) * 8.0 / rate_bps),
          start_(start),
          stop_(stop),
          queue_(queue),
          net_(net),
          trace_(trace) {
        if (rate_bps <= 0)
            throw ConfigError("cbr.rate: must be positive");
        if (packet_bytes <= 0)
            throw ConfigError("cbr.packet: must be positive");
    }

    double period_s() const { return period_; }
    SimTime emission_time(std::int64_t k) const { return start_ + static_cast<double>(k) * period_; }
    std::int64_t emitted() const { return next_index_; }

    /// Schedules the first emission (if any fits before stop).
    void start() { schedule_next(); }

private:
    void schedule_next() {
        SimTime t = emission_time(next_index_);
        if (t >= stop_)
            return;
        queue_.schedule(t, [this]() { emit(); });
    }

    void emit() {
        SimTime now = queue_.now();
        Packet pkt;
        pkt.pkt_id = net_.alloc_packet_id();
        pkt.flow_id = flow_;
        pkt.src = src_;
        pkt.dst = dst_;
        pkt.size_bytes = packet_bytes_;
        pkt.kind = PacketKind::UdpCbr;
        pkt.seq_no = next_index_;
        pkt.created_at = now;
        trace_.emit(now, TraceKind::Send, src_, flow_, pkt.pkt_id, pkt.size_bytes, pkt.seq_no);
        net_.inject(pkt, now);
        ++next_index_;
        schedule_next();
    }

    FlowId flow_;
    NodeId src_;
    NodeId dst_;
    std::int64_t packet_bytes_;
    double period_;
    SimTime start_;
    SimTime stop_;
    EventQueue& queue_;
    Network& net_;
    TraceLog& trace_;
    std::int64_t next_index_ = 0;
};

}  // namespace tcpsim
