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

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tcpsim/engine.hpp"
#include "tcpsim/packet.hpp"
#include "tcpsim/trace.hpp"

namespace tcpsim {

// A directed point-to-point link. A "bidirectional link" is two of these
// with identical parameters.
struct LinkConfig {
    NodeId from = 0;
    NodeId to = 0;
    double bandwidth_bps = 2e6;
    double prop_delay_s = 0.010;
    double loss_rate = 0.0;
    int queue_capacity_pkts = 100;
};

enum class EnqueueResult { Accepted, DroppedQueue };

struct FlowCounters {
    std::int64_t injected = 0;
    std::int64_t delivered = 0;
    std::int64_t dropped_queue = 0;
    std::int64_t dropped_loss = 0;

    std::int64_t in_flight() const { return injected - delivered - dropped_queue - dropped_loss; }
};

// Nodes, links and static shortest-path routes. Packets are injected at
// their source node and hop along links until delivered to the handler at
// their destination. Each link has a bounded DropTail FIFO; the in-service
// packet occupies no queue slot (capacity counts waiting packets only).
//
// Loss is applied when serialization finishes: scripted (flow, seq) drops
// fire first and exactly once each; otherwise, on links with loss_rate > 0,
// a uniform draw decides the packet's fate. Links with loss_rate == 0 never
// consume the random stream.
class Network {
public:
    using DeliverFn = std::function<void(const Packet&, SimTime)>;

    Network(EventQueue& queue, RandomSource& rng, TraceLog& trace, int node_count)
        : queue_(queue), rng_(rng), trace_(trace), node_count_(node_count) {
        if (node_count <= 0)
            throw ConfigError("topology.nodes: must be positive");
    }

    int node_count() const { return node_count_; }

    int add_link(const LinkConfig& cfg) {
        check_node(cfg.from, "link.from");
        check_node(cfg.to, "link.to");
        if (cfg.from == cfg.to)
            throw ConfigError("link: from == to (" + std::to_string(cfg.from) + ")");
        if (cfg.bandwidth_bps <= 0)
            throw ConfigError("link.bw: must be positive");
        if (cfg.prop_delay_s <= 0)
            throw ConfigError("link.delay: must be positive");
        if (cfg.loss_rate < 0 || cfg.loss_rate > 1)
            throw ConfigError("link.loss: must be in [0,1]");
        if (cfg.queue_capacity_pkts <= 0)
            throw ConfigError("link.queue: must be positive");
        Link link;
        link.cfg = cfg;
        links_.push_back(std::move(link));
        routes_built_ = false;
        return static_cast<int>(links_.size()) - 1;
    }

    void set_deliver_handler(DeliverFn fn) { deliver_ = std::move(fn); }

    std::uint64_t alloc_packet_id() { return next_pkt_id_++; }

    int link_count() const { return static_cast<int>(links_.size()); }
    const LinkConfig& link_config(int idx) const { return links_.at(idx).cfg; }
    std::size_t queue_length(int idx) const { return links_.at(idx).buffer.size(); }
    std::size_t peak_queue_length(int idx) const { return links_.at(idx).peak_queue; }
    bool link_busy(int idx) const { return links_.at(idx).busy; }

    int find_link(NodeId from, NodeId to) const {
        for (std::size_t i = 0; i < links_.size(); ++i)
            if (links_[i].cfg.from == from && links_[i].cfg.to == to)
                return static_cast<int>(i);
        return -1;
    }

    /// First TCP_DATA packet of this flow with this seq_no to finish
    /// serialization on the link is dropped; later ones (retransmissions)
    /// pass.
    void add_scripted_loss(int link_idx, FlowId flow, std::int64_t seq_no) {
        links_.at(link_idx).scripted.push_back({flow, seq_no});
    }

    /// Next-hop link from `at` toward `dst`; -1 means local (at == dst),
    /// throws if unreachable.
    int route_link(NodeId at, NodeId dst) {
        ensure_routes();
        check_node(at, "route.at");
        check_node(dst, "route.dst");
        if (at == dst)
            return -1;
        int idx = next_hop_[at][dst];
        if (idx < 0)
            throw ConfigError("route: node " + std::to_string(dst) + " unreachable from " +
                              std::to_string(at));
        return idx;
    }

    bool reachable(NodeId at, NodeId dst) {
        ensure_routes();
        return at == dst || next_hop_[at][dst] >= 0;
    }

    /// Hands a packet to the network at its source node.
    void inject(const Packet& pkt, SimTime now) {
        counters_[pkt.flow_id].injected++;
        if (pkt.src == pkt.dst) {
            deliver(pkt, now);
            return;
        }
        forward(pkt.src, pkt, now);
    }

    EnqueueResult enqueue(int link_idx, const Packet& pkt, SimTime now) {
        Link& l = links_.at(link_idx);
        if (!l.busy) {
            trace_.emit(now, TraceKind::Enq, l.cfg.from, pkt.flow_id, pkt.pkt_id, pkt.size_bytes,
                        pkt.seq_no);
            start_transmit(link_idx, pkt, now);
            return EnqueueResult::Accepted;
        }
        if (static_cast<int>(l.buffer.size()) < l.cfg.queue_capacity_pkts) {
            trace_.emit(now, TraceKind::Enq, l.cfg.from, pkt.flow_id, pkt.pkt_id, pkt.size_bytes,
                        pkt.seq_no);
            l.buffer.push_back(pkt);
            if (l.buffer.size() > l.peak_queue)
                l.peak_queue = l.buffer.size();
            return EnqueueResult::Accepted;
        }
        trace_.emit(now, TraceKind::DropQueue, l.cfg.from, pkt.flow_id, pkt.pkt_id, pkt.size_bytes,
                    pkt.seq_no);
        counters_[pkt.flow_id].dropped_queue++;
        return EnqueueResult::DroppedQueue;
    }

    const FlowCounters& counters(FlowId flow) { return counters_[flow]; }
    const std::map<FlowId, FlowCounters>& all_counters() const { return counters_; }

private:
    struct ScriptedLoss {
        FlowId flow;
        std::int64_t seq_no;
    };

    struct Link {
        LinkConfig cfg;
        std::deque<Packet> buffer;
        bool busy = false;
        std::size_t peak_queue = 0;
        std::vector<ScriptedLoss> scripted;
    };

    void check_node(NodeId n, const char* field) const {
        if (n < 0 || n >= node_count_)
            throw ConfigError(std::string(field) + ": node " + std::to_string(n) +
                              " out of range [0," + std::to_string(node_count_) + ")");
    }

    void ensure_routes() {
        if (routes_built_)
            return;
        // BFS from every node; ties broken by link insertion order.
        next_hop_.assign(node_count_, std::vector<int>(node_count_, -1));
        for (NodeId src = 0; src < node_count_; ++src) {
            std::vector<int> dist(node_count_, -1);
            std::deque<NodeId> work;
            dist[src] = 0;
            work.push_back(src);
            while (!work.empty()) {
                NodeId u = work.front();
                work.pop_front();
                for (std::size_t i = 0; i < links_.size(); ++i) {
                    if (links_[i].cfg.from != u)
                        continue;
                    NodeId v = links_[i].cfg.to;
                    if (dist[v] >= 0)
                        continue;
                    dist[v] = dist[u] + 1;
                    next_hop_[src][v] = (u == src) ? static_cast<int>(i) : next_hop_[src][u];
                    work.push_back(v);
                }
            }
        }
        routes_built_ = true;
    }

    void forward(NodeId at, const Packet& pkt, SimTime now) {
        enqueue(route_link(at, pkt.dst), pkt, now);
    }

    void deliver(const Packet& pkt, SimTime now) {
        counters_[pkt.flow_id].delivered++;
        if (deliver_)
            deliver_(pkt, now);
    }

    void start_transmit(int link_idx, const Packet& pkt, SimTime now) {
        Link& l = links_[link_idx];
        l.busy = true;
        trace_.emit(now, TraceKind::Deq, l.cfg.from, pkt.flow_id, pkt.pkt_id, pkt.size_bytes,
                    pkt.seq_no);
        double serialization = static_cast<double>(pkt.size_bytes) * 8.0 / l.cfg.bandwidth_bps;
        queue_.schedule(now + serialization,
                        [this, link_idx, pkt]() { end_transmit(link_idx, pkt); });
    }

    void end_transmit(int link_idx, const Packet& pkt) {
        SimTime now = queue_.now();
        Link& l = links_[link_idx];

        bool lost = false;
        if (pkt.kind == PacketKind::TcpData && !l.scripted.empty()) {
            for (auto it = l.scripted.begin(); it != l.scripted.end(); ++it) {
                if (it->flow == pkt.flow_id && it->seq_no == pkt.seq_no) {
                    l.scripted.erase(it);
                    lost = true;
                    break;
                }
            }
        }
        if (!lost && l.cfg.loss_rate > 0.0)
            lost = rng_.next_uniform() < l.cfg.loss_rate;

        if (lost) {
            trace_.emit(now, TraceKind::DropLoss, l.cfg.from, pkt.flow_id, pkt.pkt_id,
                        pkt.size_bytes, pkt.seq_no);
            counters_[pkt.flow_id].dropped_loss++;
        } else {
            NodeId to = l.cfg.to;
            queue_.schedule(now + l.cfg.prop_delay_s, [this, to, pkt]() {
                if (pkt.dst == to)
                    deliver(pkt, queue_.now());
                else
                    forward(to, pkt, queue_.now());
            });
        }

        if (!l.buffer.empty()) {
            Packet next = l.buffer.front();
            l.buffer.pop_front();
            start_transmit(link_idx, next, now);
        } else {
            l.busy = false;
        }
    }

    EventQueue& queue_;
    RandomSource& rng_;
    TraceLog& trace_;
    int node_count_;
    std::vector<Link> links_;
    std::vector<std::vector<int>> next_hop_;
    bool routes_built_ = false;
    DeliverFn deliver_;
    std::map<FlowId, FlowCounters> counters_;
    std::uint64_t next_pkt_id_ = 1;
};

}  // namespace tcpsim
