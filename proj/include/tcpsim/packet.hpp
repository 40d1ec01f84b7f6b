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

#include "tcpsim/engine.hpp"

namespace tcpsim {

using NodeId = int;
using FlowId = int;

enum class PacketKind { TcpData, TcpAck, UdpCbr };

inline const char* to_string(PacketKind k) {
    switch (k) {
    case PacketKind::TcpData: return "tcp_data";
    case PacketKind::TcpAck: return "tcp_ack";
    case PacketKind::UdpCbr: return "udp_cbr";
    }
    return "?";
}

// The unit that flows through links and queues.
//
// seq_no is overloaded by kind: first payload byte for TCP data, cumulative
// ack number for ACKs, emission index for CBR. Retransmissions are fresh
// packets (new pkt_id, same seq_no).
struct Packet {
    std::uint64_t pkt_id = 0;
    FlowId flow_id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    std::int64_t size_bytes = 0;
    PacketKind kind = PacketKind::TcpData;
    std::int64_t seq_no = 0;
    SimTime created_at = 0;
};

}  // namespace tcpsim
