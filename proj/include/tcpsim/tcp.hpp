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
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>

#include "tcpsim/engine.hpp"
#include "tcpsim/packet.hpp"
#include "tcpsim/trace.hpp"

namespace tcpsim {

enum class TcpVariant { Tahoe, Reno };

inline const char* to_string(TcpVariant v) {
    return v == TcpVariant::Tahoe ? "tahoe" : "reno";
}

struct TcpConfig {
    int mss_bytes = 536;
    int awnd_segments = 64;   // receiver's advertised window, fixed
    int dupack_threshold = 3;
    double initial_cwnd_mss = 1.0;
    double initial_ssthresh_mss = 64.0;
    double rto_min_s = 1.0;
    double rto_max_s = 64.0;
    int rto_backoff_cap = 64;
    int ack_bytes = 40;
};

// Jacobson mean/variance estimator with the RFC 6298 constants.
// Samples from retransmitted segments never reach update() (Karn's rule,
// enforced by the sender).
struct RttEstimator {
    double srtt = 0.0;
    double rttvar = 0.0;
    double rto = 1.0;
    bool has_sample = false;

    void update(double sample_s, double rto_min_s, double rto_max_s) {
        if (sample_s <= 0.0)
            throw ProtocolError("rtt sample must be positive");
        if (!has_sample) {
            srtt = sample_s;
            rttvar = sample_s / 2.0;
            has_sample = true;
        } else {
            rttvar = 0.75 * rttvar + 0.25 * std::abs(srtt - sample_s);
            srtt = 0.875 * srtt + 0.125 * sample_s;
        }
        rto = std::clamp(srtt + 4.0 * rttvar, rto_min_s, rto_max_s);
    }
};

// Receiving endpoint: pure cumulative ACK, out-of-order segments buffered
// until the gap fills. One ACK per data segment, no delayed ACK.
class TcpReceiver {
public:
    std::int64_t rcv_nxt() const { return rcv_nxt_; }
    std::size_t buffered_ranges() const { return ooo_.size(); }

    /// Processes the byte range [begin, end) and returns the ack number to
    /// emit (always rcv_nxt, also for duplicates).
    std::int64_t on_segment(std::int64_t begin, std::int64_t end) {
        if (end <= rcv_nxt_)
            return rcv_nxt_;  // stale duplicate, ACK and discard
        if (begin <= rcv_nxt_) {
            rcv_nxt_ = end;
            // absorb buffered ranges that became contiguous
            auto it = ooo_.begin();
            while (it != ooo_.end() && it->first <= rcv_nxt_) {
                rcv_nxt_ = std::max(rcv_nxt_, it->second);
                it = ooo_.erase(it);
            }
        } else {
            insert_out_of_order(begin, end);
        }
        return rcv_nxt_;
    }

    std::int64_t on_segment(const Packet& seg) {
        return on_segment(seg.seq_no, seg.seq_no + seg.size_bytes);
    }

private:
    void insert_out_of_order(std::int64_t begin, std::int64_t end) {
        auto next = ooo_.lower_bound(begin);
        if (next != ooo_.begin()) {
            auto prev = std::prev(next);
            if (prev->second >= begin) {
                begin = prev->first;
                end = std::max(end, prev->second);
                ooo_.erase(prev);
            }
        }
        while (next != ooo_.end() && next->first <= end) {
            end = std::max(end, next->second);
            next = ooo_.erase(next);
        }
        ooo_[begin] = end;
    }

    std::int64_t rcv_nxt_ = 0;
    std::map<std::int64_t, std::int64_t> ooo_;  // begin -> end
};

// Sending endpoint: slow start, congestion avoidance, fast retransmit, and
// (Reno) fast recovery with dup-ACK window inflation. cwnd and ssthresh are
// kept in MSS units with fractional accumulation.
//
// Loss reactions:
//   Tahoe: on the 3rd dup ACK, halve ssthresh, set cwnd to 1 and pull
//     snd_nxt back to snd_una -- slow start re-sends from the hole
//     (go-back-N), so recovery needs no timer.
//   Reno: on the 3rd dup ACK, halve both, retransmit the one segment and
//     enter fast recovery; each further dup ACK inflates the usable window
//     by one MSS. A new ACK at or above the recovery point (highest byte
//     sent at entry) exits with cwnd = ssthresh; a partial ACK below it
//     resets the dup count (deflating the window) but does not exit.
//   Timeout: halve ssthresh, cwnd = 1, double the backoff, go-back-N.
class TcpSender {
public:
    /// Injects a data segment into the network, returns its packet id.
    using EmitFn = std::function<std::uint64_t(std::int64_t seq, std::int64_t size)>;
    /// Bytes the application still offers at a given byte offset.
    using AvailFn = std::function<std::int64_t(std::int64_t offset)>;

    TcpSender(FlowId flow, NodeId node, TcpVariant variant, const TcpConfig& cfg,
              EventQueue& queue, TraceLog& trace, EmitFn emit, AvailFn available)
        : flow_(flow),
          node_(node),
          variant_(variant),
          cfg_(cfg),
          queue_(queue),
          trace_(trace),
          emit_(std::move(emit)),
          available_(std::move(available)),
          cwnd_(cfg.initial_cwnd_mss),
          ssthresh_(cfg.initial_ssthresh_mss) {
        if (cfg.mss_bytes <= 0)
            throw ConfigError("flow.mss: must be positive");
        if (cfg.awnd_segments <= 0)
            throw ConfigError("flow.awnd: must be positive");
        if (cfg.dupack_threshold <= 0)
            throw ConfigError("flow.dupack_threshold: must be positive");
        estimator_.rto = std::clamp(1.0, cfg.rto_min_s, cfg.rto_max_s);
    }

    TcpSender(const TcpSender&) = delete;
    TcpSender& operator=(const TcpSender&) = delete;

    void start(SimTime now) {
        trace_cwnd(now);
        try_send(now);
    }

    /// Entry point for an arriving ACK packet. Emits one `ack` trace record
    /// per arrival and dispatches to the new-ACK or dup-ACK path.
    void on_ack_packet(const Packet& ack, SimTime now) {
        std::int64_t ack_no = ack.seq_no;
        if (ack_no > snd_nxt_ && ack_no > snd_max_)
            throw ProtocolError("flow " + std::to_string(flow_) + ": ack " +
                                std::to_string(ack_no) + " beyond snd_nxt " +
                                std::to_string(snd_nxt_));
        if (ack_no > snd_una_)
            on_new_ack(ack_no, now, ack.pkt_id, ack.size_bytes);
        else if (ack_no == snd_una_ && snd_nxt_ > snd_una_)
            on_dup_ack(now, ack.pkt_id, ack.size_bytes);
        else
            trace_.emit(now, TraceKind::Ack, node_, flow_, ack.pkt_id, ack.size_bytes, ack_no);
    }

    // min(awnd, cwnd + ndup) * mss - flight, floored at 0. The dup-ACK
    // inflation term is live only for a Reno sender past the threshold.
    double usable_window_bytes() const {
        double ndup = 0.0;
        if (variant_ == TcpVariant::Reno && in_fast_recovery_ && dup_acks_ >= cfg_.dupack_threshold)
            ndup = static_cast<double>(dup_acks_);
        double wnd_mss = std::min(static_cast<double>(cfg_.awnd_segments), cwnd_ + ndup);
        double usable = wnd_mss * cfg_.mss_bytes - static_cast<double>(flight_bytes());
        return std::max(usable, 0.0);
    }

    void on_new_ack(std::int64_t ack_no, SimTime now, std::uint64_t ack_pkt_id = 0,
                    std::int64_t ack_size = 0) {
        if (ack_no <= snd_una_)
            throw ProtocolError("on_new_ack: not a new ack");

        double sample = take_rtt_sample(ack_no, now);
        trace_.emit(now, TraceKind::Ack, node_, flow_, ack_pkt_id, ack_size, ack_no, sample);

        snd_una_ = ack_no;
        if (snd_nxt_ < snd_una_)
            snd_nxt_ = snd_una_;  // jump past a go-back-N rewind
        dup_acks_ = 0;
        rto_backoff_ = 1;
        tahoe_ignore_dups_ = false;
        inflight_.erase(inflight_.begin(), inflight_.upper_bound(ack_no));

        if (in_fast_recovery_ && ack_no >= recovery_point_) {
            // recovery ACK: deflate back to the halved window
            in_fast_recovery_ = false;
            cwnd_ = ssthresh_;
        } else if (cwnd_ < ssthresh_) {
            cwnd_ += 1.0;  // slow start, one MSS per new ACK
        } else {
            cwnd_ += 1.0 / cwnd_;  // congestion avoidance, ~one MSS per RTT
        }
        trace_cwnd(now);

        if (!completed_ && available_(snd_una_) == 0) {
            completed_ = true;
            completion_time_ = now;
        }

        if (flight_bytes() > 0)
            restart_timer(now);
        else
            cancel_timer();

        try_send(now);
    }

    void on_dup_ack(SimTime now, std::uint64_t ack_pkt_id = 0, std::int64_t ack_size = 0) {
        trace_.emit(now, TraceKind::Ack, node_, flow_, ack_pkt_id, ack_size, snd_una_);
        if (variant_ == TcpVariant::Tahoe && tahoe_ignore_dups_)
            return;  // already reacted to this episode; wait for new data to be acked

        ++dup_acks_;
        if (dup_acks_ == cfg_.dupack_threshold) {
            ssthresh_ = std::max(operative_window_mss() / 2.0, 2.0);
            if (variant_ == TcpVariant::Tahoe) {
                cwnd_ = 1.0;
                dup_acks_ = 0;
                tahoe_ignore_dups_ = true;
                snd_nxt_ = snd_una_;  // slow start re-sends from the hole
                trace_cwnd(now);
                restart_timer(now);
                try_send(now);
            } else {
                cwnd_ = ssthresh_;
                in_fast_recovery_ = true;
                recovery_point_ = snd_nxt_;
                trace_cwnd(now);
                retransmit_front(now);
                restart_timer(now);
                try_send(now);
            }
        } else if (dup_acks_ > cfg_.dupack_threshold && variant_ == TcpVariant::Reno &&
                   in_fast_recovery_) {
            try_send(now);  // window inflation admits one new segment per dup ACK
        }
    }

    void on_timeout(SimTime now) {
        if (snd_nxt_ == snd_una_)
            return;  // stray fire, nothing outstanding
        trace_.emit(now, TraceKind::RtoFire, node_, flow_, 0, 0, snd_una_);
        ++rto_count_;

        ssthresh_ = std::max(operative_window_mss() / 2.0, 2.0);
        cwnd_ = 1.0;
        dup_acks_ = 0;
        in_fast_recovery_ = false;
        tahoe_ignore_dups_ = false;
        rto_backoff_ = std::min(rto_backoff_ * 2, cfg_.rto_backoff_cap);
        snd_nxt_ = snd_una_;  // go-back-N from the hole
        trace_cwnd(now);
        restart_timer(now);
        try_send(now);
    }

    /// Emits whole segments while the window has room and the source offers
    /// data. A short segment is emitted only as the very last one of a
    /// bounded transfer. Returns the number of segments sent.
    int try_send(SimTime now) {
        int sent = 0;
        while (true) {
            std::int64_t avail = available_(snd_nxt_);
            if (avail <= 0)
                break;
            std::int64_t seg = std::min<std::int64_t>(cfg_.mss_bytes, avail);
            if (usable_window_bytes() < static_cast<double>(seg))
                break;
            emit_segment(snd_nxt_, seg, now);
            ++sent;
        }
        return sent;
    }

    // state inspection
    double cwnd() const { return cwnd_; }
    double ssthresh() const { return ssthresh_; }
    int dup_acks() const { return dup_acks_; }
    bool in_fast_recovery() const { return in_fast_recovery_; }
    std::int64_t snd_una() const { return snd_una_; }
    std::int64_t snd_nxt() const { return snd_nxt_; }
    std::int64_t snd_max() const { return snd_max_; }
    std::int64_t flight_bytes() const { return snd_nxt_ - snd_una_; }
    int rto_backoff() const { return rto_backoff_; }
    const RttEstimator& rtt() const { return estimator_; }
    TcpVariant variant() const { return variant_; }
    const TcpConfig& config() const { return cfg_; }
    std::int64_t segments_sent() const { return segments_sent_; }
    std::int64_t retransmits() const { return retransmits_; }
    std::int64_t rto_count() const { return rto_count_; }
    bool timer_armed() const { return timer_.valid(); }
    bool completed() const { return completed_; }
    SimTime completion_time() const { return completion_time_; }

private:
    struct SegmentInfo {
        SimTime sent_at;
        bool retransmitted;
    };

    double flight_mss() const {
        return static_cast<double>(flight_bytes()) / cfg_.mss_bytes;
    }

    // Halving base for loss reactions: the window actually in force. Flight
    // would overstate it during fast recovery (inflation sends) and skip the
    // repeated halvings that multi-loss episodes are supposed to cost.
    double operative_window_mss() const {
        return std::min(cwnd_, static_cast<double>(cfg_.awnd_segments));
    }

    void emit_segment(std::int64_t seq, std::int64_t size, SimTime now) {
        bool retx = seq < snd_max_;
        std::uint64_t pkt_id = emit_(seq, size);
        trace_.emit(now, TraceKind::Send, node_, flow_, pkt_id, size, seq);
        if (retx) {
            trace_.emit(now, TraceKind::Retransmit, node_, flow_, pkt_id, size, seq);
            ++retransmits_;
        }
        ++segments_sent_;
        inflight_[seq + size] = SegmentInfo{now, retx};
        snd_nxt_ = seq + size;
        snd_max_ = std::max(snd_max_, snd_nxt_);
        if (!timer_.valid())
            restart_timer(now);
    }

    // Reno fast retransmit: one-off re-send of the segment at snd_una
    // without disturbing snd_nxt (flight keeps its meaning for inflation).
    void retransmit_front(SimTime now) {
        auto it = inflight_.upper_bound(snd_una_);
        std::int64_t end = (it != inflight_.end()) ? it->first
                                                   : snd_una_ + std::min<std::int64_t>(
                                                                    cfg_.mss_bytes, flight_bytes());
        std::int64_t size = end - snd_una_;
        std::uint64_t pkt_id = emit_(snd_una_, size);
        trace_.emit(now, TraceKind::Send, node_, flow_, pkt_id, size, snd_una_);
        trace_.emit(now, TraceKind::Retransmit, node_, flow_, pkt_id, size, snd_una_);
        ++segments_sent_;
        ++retransmits_;
        inflight_[end] = SegmentInfo{now, true};
    }

    double take_rtt_sample(std::int64_t ack_no, SimTime now) {
        auto it = inflight_.find(ack_no);
        if (it == inflight_.end() || it->second.retransmitted)
            return 0.0;
        double sample = now - it->second.sent_at;
        if (sample <= 0.0)
            return 0.0;
        estimator_.update(sample, cfg_.rto_min_s, cfg_.rto_max_s);
        return sample;
    }

    void restart_timer(SimTime now) {
        cancel_timer();
        double interval = std::min(estimator_.rto * rto_backoff_, cfg_.rto_max_s);
        timer_ = queue_.schedule(now + interval, [this]() {
            timer_.invalidate();
            on_timeout(queue_.now());
        });
    }

    void cancel_timer() {
        if (timer_.valid()) {
            queue_.cancel(timer_);
            timer_.invalidate();
        }
    }

    void trace_cwnd(SimTime now) {
        trace_.emit(now, TraceKind::Cwnd, node_, flow_, 0, 0, to_micros(ssthresh_), cwnd_);
    }

    FlowId flow_;
    NodeId node_;
    TcpVariant variant_;
    TcpConfig cfg_;
    EventQueue& queue_;
    TraceLog& trace_;
    EmitFn emit_;
    AvailFn available_;

    double cwnd_;
    double ssthresh_;
    int dup_acks_ = 0;
    bool in_fast_recovery_ = false;
    bool tahoe_ignore_dups_ = false;
    std::int64_t recovery_point_ = 0;
    std::int64_t snd_una_ = 0;
    std::int64_t snd_nxt_ = 0;
    std::int64_t snd_max_ = 0;
    int rto_backoff_ = 1;
    RttEstimator estimator_;
    EventHandle timer_;
    std::map<std::int64_t, SegmentInfo> inflight_;  // segment end byte -> info

    std::int64_t segments_sent_ = 0;
    std::int64_t retransmits_ = 0;
    std::int64_t rto_count_ = 0;
    bool completed_ = false;
    SimTime completion_time_ = 0;
};

}  // namespace tcpsim
