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
#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "tcpsim/metrics.hpp"

using namespace tcpsim;

namespace {

// recv of `size` bytes for flow 1 at node 9
void recv(TraceLog& t, double at, std::int64_t size, std::int64_t seq, std::uint64_t pkt) {
    t.emit(at, TraceKind::Recv, 9, 1, pkt, size, seq);
}

void send(TraceLog& t, double at, std::int64_t size, std::int64_t seq, std::uint64_t pkt) {
    t.emit(at, TraceKind::Send, 0, 1, pkt, size, seq);
}

}  // namespace

TEST_CASE("throughput windows sum received bytes, half-open boundaries", "[metrics]") {
    TraceLog t;
    for (int i = 0; i < 10; ++i)
        recv(t, 0.05 + i * 0.01, 1000, i * 1000, 100 + i);
    recv(t, 0.999999, 500, 90000, 200);  // still window 0
    recv(t, 1.000000, 500, 91000, 201);  // window 1
    t.emit(5.2, TraceKind::Cwnd, 0, 1, 0, 0, 0, 3.0);  // extends the span

    auto series = throughput_series(t, 1, 1.0);
    REQUIRE(series.size() == 6);  // span 5.2 -> windows 0..5
    REQUIRE(series[0].t == 0.0);
    REQUIRE(series[0].value == Catch::Approx(8.0 * 10500.0));
    REQUIRE(series[1].value == Catch::Approx(8.0 * 500.0));
    REQUIRE(series[4].t == 4.0);
    REQUIRE(series[4].value == 0.0);  // stall windows stay visible
}

TEST_CASE("throughput series times window totals equals total bytes", "[metrics]") {
    std::mt19937_64 gen(3);
    TraceLog t;
    std::int64_t total = 0;
    for (int i = 0; i < 500; ++i) {
        std::int64_t size = 40 + static_cast<std::int64_t>(gen() % 1460);
        double at = static_cast<double>(gen() % 20000000) * 1e-6;  // within 20 s
        recv(t, at, size, i * 2000, 1000 + i);
        total += size;
    }
    // records must be time-ordered for a real trace; rebuild sorted
    TraceLog sorted;
    auto recs = t.records();
    std::sort(recs.begin(), recs.end(),
              [](const TraceRecord& a, const TraceRecord& b) { return a.t_us < b.t_us; });
    for (const TraceRecord& r : recs)
        sorted.push(r);

    for (double w : {1.0, 0.25}) {
        double sum = 0;
        for (const SeriesPoint& p : throughput_series(sorted, 1, w))
            sum += p.value * w / 8.0;
        REQUIRE(sum == Catch::Approx(static_cast<double>(total)).margin(1e-6));
    }
}

TEST_CASE("cwnd series extracts the aux values in order", "[metrics]") {
    TraceLog t;
    t.emit(0.0, TraceKind::Cwnd, 0, 1, 0, 0, 0, 1.0);
    t.emit(0.1, TraceKind::Cwnd, 0, 1, 0, 0, 0, 2.0);
    t.emit(0.2, TraceKind::Cwnd, 0, 2, 0, 0, 0, 7.0);  // other flow
    t.emit(0.3, TraceKind::Cwnd, 0, 1, 0, 0, 0, 3.0);
    auto series = cwnd_series(t, 1);
    REQUIRE(series.size() == 3);
    REQUIRE(series[1].value == 2.0);
    REQUIRE(series[2].t == Catch::Approx(0.3));
}

TEST_CASE("rtt stats cover min, max, mean and the sample carriers", "[metrics]") {
    TraceLog t;
    t.emit(1.0, TraceKind::Ack, 0, 1, 11, 40, 1000, 0.3);
    t.emit(2.0, TraceKind::Ack, 0, 1, 12, 40, 2000, 0.5);
    t.emit(3.0, TraceKind::Ack, 0, 1, 13, 40, 3000, 0.6);
    t.emit(4.0, TraceKind::Ack, 0, 1, 14, 40, 3000, 0.0);  // no sample, skipped
    RttStats st = rtt_stats(t, 1);
    REQUIRE(st.samples == 3);
    REQUIRE(st.min_s == Catch::Approx(0.3).margin(1e-9));
    REQUIRE(st.max_s == Catch::Approx(0.6).margin(1e-9));
    REQUIRE(st.avg_s == Catch::Approx(1.4 / 3.0).margin(1e-9));
    REQUIRE(st.min_pkt == 11);
    REQUIRE(st.max_pkt == 13);
}

TEST_CASE("a single rtt sample is min, max and mean at once", "[metrics]") {
    TraceLog t;
    t.emit(1.0, TraceKind::Ack, 0, 1, 11, 40, 1000, 0.42);
    RttStats st = rtt_stats(t, 1);
    REQUIRE(st.samples == 1);
    REQUIRE(st.min_s == st.max_s);
    REQUIRE(st.min_s == st.avg_s);
}

TEST_CASE("zero samples is a marker, not a fault", "[metrics]") {
    TraceLog t;
    t.emit(1.0, TraceKind::Send, 0, 1, 1, 536, 0);
    RttStats st = rtt_stats(t, 1);
    REQUIRE(st.samples == 0);
}

TEST_CASE("e2e delay pairs each recv with its send", "[metrics]") {
    TraceLog t;
    send(t, 0.0, 1000, 0, 1);
    send(t, 0.001, 1000, 1000, 2);
    recv(t, 0.042, 1000, 0, 1);
    recv(t, 0.047, 1000, 1000, 2);
    DelayStats st = e2e_delay_stats(t, 1);
    REQUIRE(st.count == 2);
    REQUIRE(st.min_s == Catch::Approx(0.042).margin(1e-9));
    REQUIRE(st.max_s == Catch::Approx(0.046).margin(1e-9));
    REQUIRE(st.avg_s == Catch::Approx(0.044).margin(1e-9));
}

TEST_CASE("packet counts and average sizes split source and sink", "[metrics]") {
    TraceLog t;
    send(t, 0.0, 536, 0, 1);
    send(t, 0.1, 536, 536, 2);
    send(t, 0.2, 300, 1072, 3);
    recv(t, 0.5, 536, 0, 1);
    recv(t, 0.6, 300, 1072, 3);
    PacketCounts pc = packet_counts(t, 1);
    REQUIRE(pc.generated == 3);
    REQUIRE(pc.received == 2);
    REQUIRE(pc.avg_size_src == Catch::Approx((536.0 + 536.0 + 300.0) / 3.0));
    REQUIRE(pc.avg_size_sink == Catch::Approx(418.0));
}

TEST_CASE("goodput counts first deliveries only, throughput counts all", "[metrics]") {
    TraceLog t;
    send(t, 0.0, 536, 0, 1);
    send(t, 0.5, 536, 0, 2);  // retransmission, new packet id
    t.emit(0.5, TraceKind::Retransmit, 0, 1, 2, 536, 0);
    recv(t, 0.7, 536, 0, 1);
    recv(t, 0.9, 536, 0, 2);  // duplicate delivery
    REQUIRE(received_bytes(t, 1) == 1072);
    REQUIRE(goodput_bytes(t, 1) == 536);
    FlowSummary s = build_flow_summary(t, 1);
    REQUIRE(s.retransmissions == 1);
    REQUIRE(s.throughput_bps == Catch::Approx(2.0 * s.goodput_bps));
}

TEST_CASE("completion is the first ack covering the last sent byte", "[metrics]") {
    TraceLog t;
    send(t, 0.0, 536, 0, 1);
    send(t, 0.0, 464, 536, 2);
    t.emit(0.07, TraceKind::Ack, 0, 1, 3, 40, 536, 0.07);
    t.emit(0.09, TraceKind::Ack, 0, 1, 4, 40, 1000, 0.0);
    auto done = completion_time(t, 1);
    REQUIRE(done.has_value());
    REQUIRE(*done == Catch::Approx(0.09).margin(1e-9));
}

TEST_CASE("unfinished transfers report no completion", "[metrics]") {
    TraceLog t;
    send(t, 0.0, 536, 0, 1);
    t.emit(0.07, TraceKind::Ack, 0, 1, 2, 40, 100, 0.0);  // partial
    REQUIRE_FALSE(completion_time(t, 1).has_value());
}

TEST_CASE("unknown flows are rejected", "[metrics]") {
    TraceLog t;
    send(t, 0.0, 536, 0, 1);
    REQUIRE_THROWS_AS(throughput_series(t, 7, 1.0), ConfigError);
    REQUIRE_THROWS_AS(build_flow_summary(t, 7), ConfigError);
    REQUIRE_THROWS_AS(throughput_series(t, 1, 0.0), ConfigError);
}

TEST_CASE("trace lines round-trip byte for byte", "[metrics]") {
    TraceLog t;
    send(t, 0.0, 536, 0, 1);
    t.emit(0.004771, TraceKind::Enq, 0, 1, 1, 536, 0);
    t.emit(1.25, TraceKind::Cwnd, 0, 1, 0, 0, to_micros(32.0), 10.099999);
    t.emit(2.0, TraceKind::DropLoss, 2, 1, 9, 536, 1072);
    recv(t, 3.5, 536, 0, 1);

    std::ostringstream out;
    t.write(out);
    std::istringstream in(out.str());
    TraceLog back = TraceLog::read(in);
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const TraceRecord& a = t.records()[i];
        const TraceRecord& b = back.records()[i];
        REQUIRE(a.t_us == b.t_us);
        REQUIRE(a.kind == b.kind);
        REQUIRE(a.node == b.node);
        REQUIRE(a.flow == b.flow);
        REQUIRE(a.pkt == b.pkt);
        REQUIRE(a.size == b.size);
        REQUIRE(a.seq == b.seq);
        REQUIRE(a.aux_u == b.aux_u);
    }
    std::ostringstream again;
    back.write(again);
    REQUIRE(again.str() == out.str());

    // summaries recomputed from the reparsed trace are bit-identical
    FlowSummary s1 = build_flow_summary(t, 1);
    FlowSummary s2 = build_flow_summary(back, 1);
    REQUIRE(summary_to_kv(s1) == summary_to_kv(s2));
    REQUIRE(s1.throughput_bps == s2.throughput_bps);
    REQUIRE(s1.rtt.avg_s == s2.rtt.avg_s);
}

TEST_CASE("trace parser rejects malformed lines", "[metrics]") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return TraceLog::read(in);
    };
    REQUIRE_THROWS_AS(parse("t=0.000000 ev=warp node=0 flow=1 pkt=1 size=5 seq=0 aux=0.000000\n"),
                      ConfigError);
    REQUIRE_THROWS_AS(parse("t=0.000000 ev=send node=0 flow=1 pkt=1 size=5 seq=0\n"), ConfigError);
    REQUIRE_THROWS_AS(parse("t=0.0 ev=send node=0 flow=1 pkt=1 size=5 seq=0 aux=0.000000\n"),
                      ConfigError);
    REQUIRE_THROWS_AS(
        parse("t=0.000000 ev=send node=0 flow=1 pkt=1 size=5 seq=0 aux=0.000000 junk=1\n"),
        ConfigError);
    // banner and blank lines are fine
    TraceLog ok = parse("# tcpsim v9.9.9\n\nt=0.000000 ev=send node=0 flow=1 pkt=1 size=5 "
                        "seq=0 aux=0.000000\n");
    REQUIRE(ok.size() == 1);
}

TEST_CASE("summary kv document has one key per line with the flow prefix", "[metrics]") {
    TraceLog t;
    send(t, 0.0, 536, 0, 1);
    recv(t, 0.05, 536, 0, 1);
    std::string kv = summary_to_kv(build_flow_summary(t, 1));
    REQUIRE(kv.find("flow.1.generated_pkts=1\n") != std::string::npos);
    REQUIRE(kv.find("flow.1.received_pkts=1\n") != std::string::npos);
    REQUIRE(kv.find("flow.1.completion_time_s=incomplete\n") != std::string::npos);
    REQUIRE(kv.find("flow.1.goodput_bps=") != std::string::npos);
}
