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
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tcpsim/trace.hpp"

namespace tcpsim {

// All measurements here are pure functions of the trace: recomputing any of
// them from a written-and-reparsed trace file gives bit-identical results
// (record times are integer micro-units either way, and rates are
// normalized by the span of the trace itself, not by external config).

struct SeriesPoint {
    double t = 0;
    double value = 0;
};

struct RttStats {
    std::int64_t samples = 0;
    double min_s = 0, max_s = 0, avg_s = 0;
    std::uint64_t min_pkt = 0, max_pkt = 0;
};

struct DelayStats {
    std::int64_t count = 0;
    double min_s = 0, max_s = 0, avg_s = 0;
};

struct PacketCounts {
    std::int64_t generated = 0;  // send records at the source (retransmissions included)
    std::int64_t received = 0;   // recv records at the sink (duplicates included)
    double avg_size_src = 0, avg_size_sink = 0;
};

struct FlowSummary {
    FlowId flow_id = 0;
    std::int64_t generated_pkts = 0;
    std::int64_t received_pkts = 0;
    double avg_pkt_size_src = 0;
    double avg_pkt_size_sink = 0;
    RttStats rtt;
    DelayStats e2e;
    double throughput_bps = 0;  // all delivered bytes over the trace span
    double goodput_bps = 0;     // first-delivery bytes only
    std::optional<double> completion_time_s;
    std::int64_t retransmissions = 0;
    std::int64_t rto_count = 0;
    std::int64_t dropped_queue = 0;  // payload packets only
    std::int64_t dropped_loss = 0;
    std::int64_t in_flight_end = 0;
    double span_s = 0;
};

inline bool flow_known(const TraceLog& trace, FlowId flow) {
    for (const TraceRecord& r : trace.records())
        if (r.flow == flow)
            return true;
    return false;
}

inline std::vector<FlowId> flows_in_trace(const TraceLog& trace) {
    std::set<FlowId> ids;
    for (const TraceRecord& r : trace.records())
        ids.insert(r.flow);
    return {ids.begin(), ids.end()};
}

/// Delivered bits/s per half-open window [k*w, (k+1)*w). Windows with no
/// arrivals report 0; the series covers the whole trace span so stall
/// intervals stay visible.
inline std::vector<SeriesPoint> throughput_series(const TraceLog& trace, FlowId flow,
                                                  double window_s) {
    if (window_s <= 0)
        throw ConfigError("throughput window must be positive");
    if (!flow_known(trace, flow))
        throw ConfigError("unknown flow " + std::to_string(flow));
    std::int64_t w_us = to_micros(window_s);
    if (w_us <= 0)
        throw ConfigError("throughput window must be at least 1us");

    std::int64_t last_us = trace.records().back().t_us;
    std::size_t windows = static_cast<std::size_t>(last_us / w_us) + 1;
    std::vector<std::int64_t> bytes(windows, 0);
    for (const TraceRecord& r : trace.records())
        if (r.kind == TraceKind::Recv && r.flow == flow)
            bytes[static_cast<std::size_t>(r.t_us / w_us)] += r.size;

    std::vector<SeriesPoint> out;
    out.reserve(windows);
    for (std::size_t k = 0; k < windows; ++k)
        out.push_back({static_cast<double>(k) * window_s,
                       static_cast<double>(bytes[k]) * 8.0 / window_s});
    return out;
}

/// (t, cwnd in MSS) samples in emission order.
inline std::vector<SeriesPoint> cwnd_series(const TraceLog& trace, FlowId flow) {
    std::vector<SeriesPoint> out;
    for (const TraceRecord& r : trace.records())
        if (r.kind == TraceKind::Cwnd && r.flow == flow)
            out.push_back({r.t(), r.aux()});
    return out;
}

/// RTT stats over the samples carried by ack records (aux == 0 marks an ack
/// that produced no sample and is skipped). samples == 0 is the empty-stats
/// marker, not a fault.
inline RttStats rtt_stats(const TraceLog& trace, FlowId flow) {
    RttStats st;
    double sum = 0;
    for (const TraceRecord& r : trace.records()) {
        if (r.kind != TraceKind::Ack || r.flow != flow || r.aux_u <= 0)
            continue;
        double sample = r.aux();
        if (st.samples == 0 || sample < st.min_s) {
            st.min_s = sample;
            st.min_pkt = r.pkt;
        }
        if (st.samples == 0 || sample > st.max_s) {
            st.max_s = sample;
            st.max_pkt = r.pkt;
        }
        sum += sample;
        ++st.samples;
    }
    if (st.samples > 0)
        st.avg_s = sum / static_cast<double>(st.samples);
    return st;
}

/// Per delivered packet: recv time minus the matching send time (packets
/// are created when sent, so the send record carries created_at).
inline DelayStats e2e_delay_stats(const TraceLog& trace, FlowId flow) {
    DelayStats st;
    std::unordered_map<std::uint64_t, std::int64_t> sent_at;
    double sum = 0;
    for (const TraceRecord& r : trace.records()) {
        if (r.flow != flow)
            continue;
        if (r.kind == TraceKind::Send) {
            sent_at.emplace(r.pkt, r.t_us);
        } else if (r.kind == TraceKind::Recv) {
            auto it = sent_at.find(r.pkt);
            if (it == sent_at.end())
                continue;
            double delay = static_cast<double>(r.t_us - it->second) * 1e-6;
            if (st.count == 0 || delay < st.min_s)
                st.min_s = delay;
            if (st.count == 0 || delay > st.max_s)
                st.max_s = delay;
            sum += delay;
            ++st.count;
        }
    }
    if (st.count > 0)
        st.avg_s = sum / static_cast<double>(st.count);
    return st;
}

inline PacketCounts packet_counts(const TraceLog& trace, FlowId flow) {
    PacketCounts pc;
    std::int64_t src_bytes = 0, sink_bytes = 0;
    for (const TraceRecord& r : trace.records()) {
        if (r.flow != flow)
            continue;
        if (r.kind == TraceKind::Send) {
            ++pc.generated;
            src_bytes += r.size;
        } else if (r.kind == TraceKind::Recv) {
            ++pc.received;
            sink_bytes += r.size;
        }
    }
    if (pc.generated > 0)
        pc.avg_size_src = static_cast<double>(src_bytes) / static_cast<double>(pc.generated);
    if (pc.received > 0)
        pc.avg_size_sink = static_cast<double>(sink_bytes) / static_cast<double>(pc.received);
    return pc;
}

/// First-delivery bytes: the first recv of each distinct seq_no counts,
/// duplicates (retransmitted segments) do not.
inline std::int64_t goodput_bytes(const TraceLog& trace, FlowId flow) {
    std::int64_t bytes = 0;
    std::unordered_set<std::int64_t> seen;
    for (const TraceRecord& r : trace.records())
        if (r.kind == TraceKind::Recv && r.flow == flow && seen.insert(r.seq).second)
            bytes += r.size;
    return bytes;
}

inline std::int64_t received_bytes(const TraceLog& trace, FlowId flow) {
    std::int64_t bytes = 0;
    for (const TraceRecord& r : trace.records())
        if (r.kind == TraceKind::Recv && r.flow == flow)
            bytes += r.size;
    return bytes;
}

/// Completion as observable in the trace: the first ack covering the highest
/// byte the sender ever emitted. Flows that never sent (or were never fully
/// acked) report nothing.
inline std::optional<double> completion_time(const TraceLog& trace, FlowId flow) {
    std::int64_t total = -1;
    for (const TraceRecord& r : trace.records())
        if (r.kind == TraceKind::Send && r.flow == flow)
            total = std::max(total, r.seq + r.size);
    if (total < 0)
        return std::nullopt;
    for (const TraceRecord& r : trace.records())
        if (r.kind == TraceKind::Ack && r.flow == flow && r.seq >= total)
            return r.t();
    return std::nullopt;
}

inline FlowSummary build_flow_summary(const TraceLog& trace, FlowId flow) {
    if (!flow_known(trace, flow))
        throw ConfigError("unknown flow " + std::to_string(flow));
    FlowSummary s;
    s.flow_id = flow;
    PacketCounts pc = packet_counts(trace, flow);
    s.generated_pkts = pc.generated;
    s.received_pkts = pc.received;
    s.avg_pkt_size_src = pc.avg_size_src;
    s.avg_pkt_size_sink = pc.avg_size_sink;
    s.rtt = rtt_stats(trace, flow);
    s.e2e = e2e_delay_stats(trace, flow);
    s.span_s = trace.span_s();
    if (s.span_s > 0) {
        s.throughput_bps = static_cast<double>(received_bytes(trace, flow)) * 8.0 / s.span_s;
        s.goodput_bps = static_cast<double>(goodput_bytes(trace, flow)) * 8.0 / s.span_s;
    }
    s.completion_time_s = completion_time(trace, flow);

    // payload drops: drop records whose pkt id appeared in a send record of
    // this flow (excludes ACKs dropped on a lossy reverse path)
    std::unordered_set<std::uint64_t> sent_ids;
    for (const TraceRecord& r : trace.records())
        if (r.kind == TraceKind::Send && r.flow == flow)
            sent_ids.insert(r.pkt);
    for (const TraceRecord& r : trace.records()) {
        if (r.flow != flow)
            continue;
        switch (r.kind) {
        case TraceKind::Retransmit: ++s.retransmissions; break;
        case TraceKind::RtoFire: ++s.rto_count; break;
        case TraceKind::DropQueue:
            if (sent_ids.count(r.pkt))
                ++s.dropped_queue;
            break;
        case TraceKind::DropLoss:
            if (sent_ids.count(r.pkt))
                ++s.dropped_loss;
            break;
        default: break;
        }
    }
    s.in_flight_end = s.generated_pkts - s.received_pkts - s.dropped_queue - s.dropped_loss;
    return s;
}

namespace detail {
inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
inline std::string fixed9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}
}  // namespace detail

/// Flat key=value rendering, one line per field, keys prefixed
/// "flow.<id>.".
inline std::string summary_to_kv(const FlowSummary& s) {
    std::string p = "flow." + std::to_string(s.flow_id) + ".";
    std::string out;
    auto add = [&](const std::string& key, const std::string& value) {
        out += p;
        out += key;
        out += '=';
        out += value;
        out += '\n';
    };
    add("generated_pkts", std::to_string(s.generated_pkts));
    add("received_pkts", std::to_string(s.received_pkts));
    add("avg_pkt_size_src_bytes", detail::fixed6(s.avg_pkt_size_src));
    add("avg_pkt_size_sink_bytes", detail::fixed6(s.avg_pkt_size_sink));
    add("rtt_samples", std::to_string(s.rtt.samples));
    add("rtt_min_s", detail::fixed9(s.rtt.min_s));
    add("rtt_min_pkt", std::to_string(s.rtt.min_pkt));
    add("rtt_max_s", detail::fixed9(s.rtt.max_s));
    add("rtt_max_pkt", std::to_string(s.rtt.max_pkt));
    add("rtt_avg_s", detail::fixed9(s.rtt.avg_s));
    add("e2e_delay_count", std::to_string(s.e2e.count));
    add("e2e_delay_min_s", detail::fixed9(s.e2e.min_s));
    add("e2e_delay_max_s", detail::fixed9(s.e2e.max_s));
    add("e2e_delay_avg_s", detail::fixed9(s.e2e.avg_s));
    add("throughput_bps", detail::fixed6(s.throughput_bps));
    add("goodput_bps", detail::fixed6(s.goodput_bps));
    add("completion_time_s",
        s.completion_time_s ? detail::fixed6(*s.completion_time_s) : "incomplete");
    add("retransmissions", std::to_string(s.retransmissions));
    add("rto_count", std::to_string(s.rto_count));
    add("dropped_queue", std::to_string(s.dropped_queue));
    add("dropped_loss", std::to_string(s.dropped_loss));
    add("in_flight_end", std::to_string(s.in_flight_end));
    add("span_s", detail::fixed6(s.span_s));
    return out;
}

inline std::string series_to_csv(const std::vector<SeriesPoint>& series, const std::string& t_header,
                                 const std::string& v_header) {
    std::string out = t_header + "," + v_header + "\n";
    for (const SeriesPoint& p : series) {
        out += detail::fixed6(p.t);
        out += ',';
        out += detail::fixed6(p.value);
        out += '\n';
    }
    return out;
}

}  // namespace tcpsim
