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
#include <cstdio>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tcpsim/engine.hpp"
#include "tcpsim/metrics.hpp"
#include "tcpsim/netmodel.hpp"
#include "tcpsim/tcp.hpp"
#include "tcpsim/traffic.hpp"
#include "tcpsim/trace.hpp"

namespace tcpsim {

inline constexpr int kDefaultQueueCapacity = 100;
inline constexpr double kDefaultBandwidthBps = 2e6;
inline constexpr double kDefaultPropDelayS = 0.010;

struct TcpFlowConfig {
    FlowId id = 1;
    NodeId src = 0;
    NodeId dst = 4;
    TcpVariant variant = TcpVariant::Tahoe;
    std::optional<std::int64_t> total_bytes;  // empty = unbounded
    TcpConfig tcp;
};

struct CbrFlowConfig {
    FlowId id = 2;
    NodeId src = 1;
    NodeId dst = 5;
    double rate_bps = 5e5;
    std::int64_t packet_bytes = 210;
    double start_s = 0.0;
    std::optional<double> stop_s;  // empty = whole run
};

struct ScriptedLossSpec {
    FlowId flow = 0;
    std::int64_t segment_index = 0;  // seq_no / mss of the data segment to drop
};

// A complete experiment description. Serializes to/from the text format in
// config_text.hpp; run_scenario(cfg) is deterministic given the seed.
struct ScenarioConfig {
    int nodes = 0;
    std::vector<LinkConfig> links;
    std::vector<TcpFlowConfig> tcp_flows;
    std::vector<CbrFlowConfig> cbr_flows;
    double duration_s = 141.0;
    std::uint64_t seed = 1;
    double throughput_window_s = 1.0;
    // the link that carries the noise process: sweeps override its
    // loss_rate, scripted losses fire on it
    std::optional<std::pair<NodeId, NodeId>> noise_link;
    std::vector<ScriptedLossSpec> scripted_losses;

    const TcpFlowConfig* tcp_flow(FlowId id) const {
        for (const auto& f : tcp_flows)
            if (f.id == id)
                return &f;
        return nullptr;
    }

    int find_link(NodeId from, NodeId to) const {
        for (std::size_t i = 0; i < links.size(); ++i)
            if (links[i].from == from && links[i].to == to)
                return static_cast<int>(i);
        return -1;
    }

    void validate() const {
        if (nodes <= 0)
            throw ConfigError("topology.nodes: must be positive");
        if (duration_s <= 0)
            throw ConfigError("experiment.duration_s: must be positive");
        if (throughput_window_s <= 0)
            throw ConfigError("experiment.throughput_window_s: must be positive");
        if (links.empty())
            throw ConfigError("links: at least one link required");

        // a scratch network checks the link fields and gives us routing
        EventQueue q;
        RandomSource rng(0);
        TraceLog t;
        Network net(q, rng, t, nodes);
        for (const LinkConfig& l : links)
            net.add_link(l);

        std::set<FlowId> ids;
        for (const TcpFlowConfig& f : tcp_flows) {
            if (f.id <= 0)
                throw ConfigError("ftp.flow: must be positive");
            if (!ids.insert(f.id).second)
                throw ConfigError("flows: duplicate flow id " + std::to_string(f.id));
            if (f.src == f.dst)
                throw ConfigError("ftp.src: equals dst");
            if (!net.reachable(f.src, f.dst) || !net.reachable(f.dst, f.src))
                throw ConfigError("ftp.dst: node " + std::to_string(f.dst) +
                                  " not reachable both ways from " + std::to_string(f.src));
            if (f.total_bytes && *f.total_bytes <= 0)
                throw ConfigError("ftp.bytes: must be positive or unbounded");
            if (f.tcp.mss_bytes <= 0)
                throw ConfigError("ftp.mss: must be positive");
            if (f.tcp.awnd_segments <= 0)
                throw ConfigError("ftp.awnd: must be positive");
            if (f.tcp.dupack_threshold <= 0)
                throw ConfigError("ftp.dupack_threshold: must be positive");
            if (f.tcp.initial_cwnd_mss < 1.0)
                throw ConfigError("ftp.cwnd0: must be at least 1");
            if (f.tcp.initial_ssthresh_mss < 2.0)
                throw ConfigError("ftp.ssthresh0: must be at least 2");
            if (f.tcp.rto_min_s <= 0 || f.tcp.rto_max_s < f.tcp.rto_min_s)
                throw ConfigError("ftp.rto_min/rto_max: need 0 < rto_min <= rto_max");
            if (f.tcp.rto_backoff_cap < 1)
                throw ConfigError("ftp.backoff_cap: must be at least 1");
            if (f.tcp.ack_bytes <= 0)
                throw ConfigError("ftp.ack_bytes: must be positive");
        }
        for (const CbrFlowConfig& f : cbr_flows) {
            if (f.id <= 0)
                throw ConfigError("cbr.flow: must be positive");
            if (!ids.insert(f.id).second)
                throw ConfigError("flows: duplicate flow id " + std::to_string(f.id));
            if (f.src == f.dst)
                throw ConfigError("cbr.src: equals dst");
            if (!net.reachable(f.src, f.dst))
                throw ConfigError("cbr.dst: node " + std::to_string(f.dst) +
                                  " not reachable from " + std::to_string(f.src));
            if (f.rate_bps <= 0)
                throw ConfigError("cbr.rate: must be positive");
            if (f.packet_bytes <= 0)
                throw ConfigError("cbr.packet: must be positive");
            if (f.start_s < 0)
                throw ConfigError("cbr.start: must be non-negative");
            if (f.stop_s && *f.stop_s <= f.start_s)
                throw ConfigError("cbr.stop: must be after start");
        }

        if (noise_link) {
            if (find_link(noise_link->first, noise_link->second) < 0)
                throw ConfigError("experiment.noise_link: no such link " +
                                  std::to_string(noise_link->first) + "->" +
                                  std::to_string(noise_link->second));
        }
        if (!scripted_losses.empty()) {
            if (!noise_link)
                throw ConfigError("experiment.scripted_loss: requires noise_link");
            const LinkConfig& nl = links[find_link(noise_link->first, noise_link->second)];
            if (nl.loss_rate > 0)
                throw ConfigError(
                    "experiment.scripted_loss: noise link already has loss_rate > 0; "
                    "scripted and random loss may not target the same link");
            for (const ScriptedLossSpec& s : scripted_losses) {
                if (!tcp_flow(s.flow))
                    throw ConfigError("experiment.scripted_loss: flow " + std::to_string(s.flow) +
                                      " is not a TCP flow");
                if (s.segment_index < 0)
                    throw ConfigError("experiment.scripted_loss: seg must be non-negative");
            }
        }
    }
};

struct DumbbellOverrides {
    std::optional<int> queue_capacity_pkts;
    std::optional<std::int64_t> ftp_total_bytes;  // set -> bounded transfer
    std::optional<double> duration_s;
    std::optional<std::uint64_t> seed;
    bool include_cbr = true;
    std::optional<int> awnd_segments;
    std::optional<double> initial_ssthresh_mss;
    std::optional<int> mss_bytes;
    std::optional<double> throughput_window_s;
};

/// The Fig.-2 dumbbell: n0,n1 sources, n2-n3 routers, n4,n5 sinks. All links
/// 2 Mbps / 10 ms both ways; DropTail at every link; loss (noise) only on
/// the forward n2->n3 link. FTP/TCP n0->n4, CBR/UDP n1->n5.
inline ScenarioConfig build_dumbbell(double loss_rate, TcpVariant variant,
                                           const DumbbellOverrides& ov = {}) {
    if (loss_rate < 0 || loss_rate > 1)
        throw ConfigError("loss_rate: must be in [0,1], got " + std::to_string(loss_rate));

    ScenarioConfig cfg;
    cfg.nodes = 6;
    int qcap = ov.queue_capacity_pkts.value_or(kDefaultQueueCapacity);
    auto both = [&](NodeId a, NodeId b) {
        cfg.links.push_back({a, b, kDefaultBandwidthBps, kDefaultPropDelayS, 0.0, qcap});
        cfg.links.push_back({b, a, kDefaultBandwidthBps, kDefaultPropDelayS, 0.0, qcap});
    };
    both(0, 2);
    both(1, 2);
    both(2, 3);
    both(3, 4);
    both(3, 5);
    cfg.links[cfg.find_link(2, 3)].loss_rate = loss_rate;
    cfg.noise_link = std::make_pair(2, 3);

    TcpFlowConfig ftp;
    ftp.id = 1;
    ftp.src = 0;
    ftp.dst = 4;
    ftp.variant = variant;
    ftp.total_bytes = ov.ftp_total_bytes;
    if (ov.mss_bytes)
        ftp.tcp.mss_bytes = *ov.mss_bytes;
    if (ov.awnd_segments) {
        ftp.tcp.awnd_segments = *ov.awnd_segments;
        ftp.tcp.initial_ssthresh_mss = static_cast<double>(*ov.awnd_segments);
    }
    if (ov.initial_ssthresh_mss)
        ftp.tcp.initial_ssthresh_mss = *ov.initial_ssthresh_mss;
    cfg.tcp_flows.push_back(ftp);

    if (ov.include_cbr) {
        CbrFlowConfig cbr;
        cbr.id = 2;
        cbr.src = 1;
        cbr.dst = 5;
        cfg.cbr_flows.push_back(cbr);
    }

    cfg.duration_s = ov.duration_s.value_or(141.0);
    cfg.seed = ov.seed.value_or(1);
    if (ov.throughput_window_s)
        cfg.throughput_window_s = *ov.throughput_window_s;
    cfg.validate();
    return cfg;
}

struct RunResult {
    TraceLog trace;
    std::vector<FlowSummary> summaries;  // ordered by flow id
    std::map<FlowId, FlowCounters> conservation;  // every packet, ACKs included
    ScenarioConfig config_echo;
    std::uint64_t seed = 0;
    std::size_t event_count = 0;

    const FlowSummary& summary(FlowId id) const {
        for (const FlowSummary& s : summaries)
            if (s.flow_id == id)
                return s;
        throw ConfigError("no summary for flow " + std::to_string(id));
    }
};

// Owns one simulation instance: event queue, RNG, network, endpoints and
// trace sink. Strictly single-threaded; independent instances may run
// concurrently.
class Simulation {
public:
    explicit Simulation(const ScenarioConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
        cfg_.validate();
        net_ = std::make_unique<Network>(queue_, rng_, trace_, cfg_.nodes);
        for (const LinkConfig& l : cfg_.links)
            net_->add_link(l);

        if (!cfg_.scripted_losses.empty()) {
            int noise_idx = net_->find_link(cfg_.noise_link->first, cfg_.noise_link->second);
            for (const ScriptedLossSpec& s : cfg_.scripted_losses) {
                const TcpFlowConfig* f = cfg_.tcp_flow(s.flow);
                net_->add_scripted_loss(noise_idx, s.flow, s.segment_index * f->tcp.mss_bytes);
            }
        }

        net_->set_deliver_handler(
            [this](const Packet& pkt, SimTime now) { deliver(pkt, now); });

        for (const TcpFlowConfig& f : cfg_.tcp_flows) {
            FtpSource source{f.id, f.total_bytes};
            auto emit = [this, f](std::int64_t seq, std::int64_t size) {
                Packet pkt;
                pkt.pkt_id = net_->alloc_packet_id();
                pkt.flow_id = f.id;
                pkt.src = f.src;
                pkt.dst = f.dst;
                pkt.size_bytes = size;
                pkt.kind = PacketKind::TcpData;
                pkt.seq_no = seq;
                pkt.created_at = queue_.now();
                net_->inject(pkt, queue_.now());
                return pkt.pkt_id;
            };
            auto avail = [source](std::int64_t offset) { return source.available(offset); };
            senders_.emplace(f.id, std::make_unique<TcpSender>(f.id, f.src, f.variant, f.tcp,
                                                               queue_, trace_, emit, avail));
            receivers_.emplace(f.id, TcpReceiver{});
            flow_meta_.emplace(f.id, f);
        }
        for (const CbrFlowConfig& f : cfg_.cbr_flows) {
            double stop = f.stop_s.value_or(cfg_.duration_s);
            cbr_sources_.push_back(std::make_unique<CbrSource>(
                f.id, f.src, f.dst, f.rate_bps, f.packet_bytes, f.start_s, stop, queue_, *net_,
                trace_));
        }
    }

    RunResult run() {
        for (auto& [id, sender] : senders_) {
            TcpSender* s = sender.get();
            queue_.schedule(0.0, [s]() { s->start(0.0); });
        }
        for (auto& cbr : cbr_sources_)
            cbr->start();

        std::size_t events = queue_.run_until(cfg_.duration_s);

        RunResult result;
        result.config_echo = cfg_;
        result.seed = cfg_.seed;
        result.event_count = events;
        result.conservation = net_->all_counters();
        for (FlowId id : flows_in_trace(trace_))
            result.summaries.push_back(build_flow_summary(trace_, id));
        result.trace = std::move(trace_);
        return result;
    }

    /// Trace gathered so far; still valid after a fault aborted run().
    const TraceLog& trace() const { return trace_; }
    const Network& network() const { return *net_; }
    const TcpSender& sender(FlowId id) const { return *senders_.at(id); }

private:
    void deliver(const Packet& pkt, SimTime now) {
        switch (pkt.kind) {
        case PacketKind::TcpData: {
            trace_.emit(now, TraceKind::Recv, pkt.dst, pkt.flow_id, pkt.pkt_id, pkt.size_bytes,
                        pkt.seq_no);
            auto it = receivers_.find(pkt.flow_id);
            if (it == receivers_.end())
                throw ProtocolError("data for unknown flow " + std::to_string(pkt.flow_id));
            std::int64_t ack_no = it->second.on_segment(pkt);
            const TcpFlowConfig& f = flow_meta_.at(pkt.flow_id);
            Packet ack;
            ack.pkt_id = net_->alloc_packet_id();
            ack.flow_id = pkt.flow_id;
            ack.src = f.dst;
            ack.dst = f.src;
            ack.size_bytes = f.tcp.ack_bytes;
            ack.kind = PacketKind::TcpAck;
            ack.seq_no = ack_no;
            ack.created_at = now;
            net_->inject(ack, now);
            break;
        }
        case PacketKind::TcpAck: {
            auto it = senders_.find(pkt.flow_id);
            if (it == senders_.end())
                throw ProtocolError("ack for unknown flow " + std::to_string(pkt.flow_id));
            it->second->on_ack_packet(pkt, now);
            break;
        }
        case PacketKind::UdpCbr:
            trace_.emit(now, TraceKind::Recv, pkt.dst, pkt.flow_id, pkt.pkt_id, pkt.size_bytes,
                        pkt.seq_no);
            break;
        }
    }

    ScenarioConfig cfg_;
    EventQueue queue_;
    RandomSource rng_;
    TraceLog trace_;
    std::unique_ptr<Network> net_;
    std::map<FlowId, std::unique_ptr<TcpSender>> senders_;
    std::map<FlowId, TcpReceiver> receivers_;
    std::map<FlowId, TcpFlowConfig> flow_meta_;
    std::vector<std::unique_ptr<CbrSource>> cbr_sources_;
};

inline RunResult run_scenario(const ScenarioConfig& cfg) {
    Simulation sim(cfg);
    return sim.run();
}

struct SweepRow {
    double loss_rate = 0;
    TcpVariant variant = TcpVariant::Tahoe;
    std::uint64_t seed = 0;
    double goodput_bps = 0;
    double throughput_bps = 0;
    std::optional<double> completion_s;
    std::int64_t retransmissions = 0;
    std::int64_t rto_count = 0;
};

struct SweepCell {
    double loss_rate = 0;
    TcpVariant variant = TcpVariant::Tahoe;
    int seeds = 0;
    double goodput_mean = 0, goodput_stddev = 0;
    double throughput_mean = 0, throughput_stddev = 0;
    int completed_runs = 0;
    double completion_mean = 0, completion_stddev = 0;
    double retransmissions_mean = 0;
    double rto_count_mean = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;    // loss-major, then variant, then seed
    std::vector<SweepCell> cells;  // one per (loss, variant)
};

namespace detail {

inline void mean_stddev(const std::vector<double>& xs, double& mean, double& stddev) {
    mean = 0;
    stddev = 0;
    if (xs.empty())
        return;
    for (double x : xs)
        mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2)
        return;  // stddev of a single run is reported as 0
    double ss = 0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

/// Cartesian product of loss rates x variants x seeds over the base
/// scenario. The base must name a noise_link (where the swept loss applies)
/// and contain exactly the TCP flow whose metrics fill the rows. Cells run
/// independently (optionally in parallel); results are keyed by coordinates,
/// so execution order never shows in the output.
inline SweepResult run_sweep(const ScenarioConfig& base, const std::vector<double>& loss_rates,
                             const std::vector<TcpVariant>& variants,
                             const std::vector<std::uint64_t>& seeds, unsigned jobs = 0) {
    if (loss_rates.empty())
        throw ConfigError("sweep.losses: list must be non-empty");
    if (variants.empty())
        throw ConfigError("sweep.variants: list must be non-empty");
    if (seeds.empty())
        throw ConfigError("sweep.seeds: list must be non-empty");
    if (!base.noise_link)
        throw ConfigError("experiment.noise_link: required for a sweep");
    if (base.tcp_flows.size() != 1)
        throw ConfigError("sweep: base scenario must have exactly one TCP flow");
    for (double l : loss_rates)
        if (l < 0 || l > 1)
            throw ConfigError("sweep.losses: loss rate must be in [0,1]");
    base.validate();

    FlowId tcp_id = base.tcp_flows[0].id;
    int noise_idx = base.find_link(base.noise_link->first, base.noise_link->second);

    struct Job {
        ScenarioConfig cfg;
        double loss;
        TcpVariant variant;
        std::uint64_t seed;
    };
    std::vector<Job> jobs_list;
    for (double loss : loss_rates) {
        for (TcpVariant v : variants) {
            for (std::uint64_t seed : seeds) {
                Job j;
                j.cfg = base;
                j.cfg.links[noise_idx].loss_rate = loss;
                j.cfg.tcp_flows[0].variant = v;
                j.cfg.seed = seed;
                j.loss = loss;
                j.variant = v;
                j.seed = seed;
                jobs_list.push_back(std::move(j));
            }
        }
    }

    if (jobs == 0)
        jobs = std::max(1u, std::thread::hardware_concurrency());

    auto run_one = [tcp_id](const Job& j) {
        RunResult r = run_scenario(j.cfg);
        const FlowSummary& s = r.summary(tcp_id);
        SweepRow row;
        row.loss_rate = j.loss;
        row.variant = j.variant;
        row.seed = j.seed;
        row.goodput_bps = s.goodput_bps;
        row.throughput_bps = s.throughput_bps;
        row.completion_s = s.completion_time_s;
        row.retransmissions = s.retransmissions;
        row.rto_count = s.rto_count;
        return row;
    };

    SweepResult result;
    result.rows.resize(jobs_list.size());
    std::vector<std::string> failures;
    for (std::size_t start = 0; start < jobs_list.size(); start += jobs) {
        std::size_t batch = std::min<std::size_t>(jobs, jobs_list.size() - start);
        std::vector<std::future<SweepRow>> futures;
        futures.reserve(batch);
        for (std::size_t k = 0; k < batch; ++k)
            futures.push_back(std::async(std::launch::async, run_one,
                                         std::cref(jobs_list[start + k])));
        for (std::size_t k = 0; k < batch; ++k) {
            const Job& j = jobs_list[start + k];
            try {
                result.rows[start + k] = futures[k].get();
            } catch (const std::exception& e) {
                char coord[96];
                std::snprintf(coord, sizeof(coord), "cell loss=%.4f variant=%s seed=%llu: ",
                              j.loss, to_string(j.variant),
                              static_cast<unsigned long long>(j.seed));
                failures.push_back(coord + std::string(e.what()));
            }
        }
    }
    if (!failures.empty()) {
        std::string msg = "sweep failures:";
        for (const std::string& f : failures)
            msg += "\n  " + f;
        throw ProtocolError(msg);
    }

    for (double loss : loss_rates) {
        for (TcpVariant v : variants) {
            SweepCell cell;
            cell.loss_rate = loss;
            cell.variant = v;
            std::vector<double> goodput, throughput, completion, retrans, rto;
            for (const SweepRow& row : result.rows) {
                if (row.loss_rate != loss || row.variant != v)
                    continue;
                ++cell.seeds;
                goodput.push_back(row.goodput_bps);
                throughput.push_back(row.throughput_bps);
                retrans.push_back(static_cast<double>(row.retransmissions));
                rto.push_back(static_cast<double>(row.rto_count));
                if (row.completion_s)
                    completion.push_back(*row.completion_s);
            }
            cell.completed_runs = static_cast<int>(completion.size());
            detail::mean_stddev(goodput, cell.goodput_mean, cell.goodput_stddev);
            detail::mean_stddev(throughput, cell.throughput_mean, cell.throughput_stddev);
            detail::mean_stddev(completion, cell.completion_mean, cell.completion_stddev);
            double unused;
            detail::mean_stddev(retrans, cell.retransmissions_mean, unused);
            detail::mean_stddev(rto, cell.rto_count_mean, unused);
            result.cells.push_back(cell);
        }
    }
    return result;
}

inline std::string sweep_csv(const SweepResult& sweep) {
    std::string out =
        "loss_rate,variant,seed,goodput_bps,throughput_bps,completion_s,retransmissions,"
        "rto_count\n";
    char buf[256];
    for (const SweepRow& r : sweep.rows) {
        std::snprintf(buf, sizeof(buf), "%.4f,%s,%llu,%.6f,%.6f,", r.loss_rate,
                      to_string(r.variant), static_cast<unsigned long long>(r.seed),
                      r.goodput_bps, r.throughput_bps);
        out += buf;
        if (r.completion_s) {
            std::snprintf(buf, sizeof(buf), "%.6f", *r.completion_s);
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%lld,%lld\n",
                      static_cast<long long>(r.retransmissions),
                      static_cast<long long>(r.rto_count));
        out += buf;
    }
    return out;
}

inline std::string sweep_summary_csv(const SweepResult& sweep) {
    std::string out =
        "loss_rate,variant,seeds,goodput_mean_bps,goodput_stddev_bps,throughput_mean_bps,"
        "throughput_stddev_bps,completed_runs,completion_mean_s,completion_stddev_s,"
        "retransmissions_mean,rto_count_mean\n";
    char buf[320];
    for (const SweepCell& c : sweep.cells) {
        std::snprintf(buf, sizeof(buf), "%.4f,%s,%d,%.6f,%.6f,%.6f,%.6f,%d,", c.loss_rate,
                      to_string(c.variant), c.seeds, c.goodput_mean, c.goodput_stddev,
                      c.throughput_mean, c.throughput_stddev, c.completed_runs);
        out += buf;
        if (c.completed_runs > 0) {
            std::snprintf(buf, sizeof(buf), "%.6f,%.6f", c.completion_mean, c.completion_stddev);
            out += buf;
        } else {
            out += ",";
        }
        std::snprintf(buf, sizeof(buf), ",%.6f,%.6f\n", c.retransmissions_mean, c.rto_count_mean);
        out += buf;
    }
    return out;
}

}  // namespace tcpsim
