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

#include <charconv>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "tcpsim/scenario.hpp"

namespace tcpsim {

// Text form of a ScenarioConfig. Sections: [topology], [links], [flows],
// [experiment]. Unknown sections, keys and attributes are configuration
// errors (named in the message), not warnings. serialize_config() emits
// every field, so parse(serialize(cfg)) reproduces cfg exactly.
//
//   [topology]
//   nodes = 6
//
//   [links]
//   link = 2->3 bw=2000000 delay=0.01 loss=0.1 queue=100
//
//   [flows]
//   ftp = flow=1 src=0 dst=4 variant=reno bytes=unbounded mss=536 ...
//   cbr = flow=2 src=1 dst=5 rate=500000 packet=210 start=0 stop=none
//
//   [experiment]
//   duration_s = 141
//   seed = 1
//   throughput_window_s = 1
//   noise_link = 2->3
//   scripted_loss = flow=1 seg=60

namespace cfgtext {

inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& v, const std::string& where) {
    const char* s = v.c_str();
    char* end = nullptr;
    double out = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw ConfigError(where + ": bad number '" + v + "'");
    return out;
}

inline std::int64_t parse_int(const std::string& v, const std::string& where) {
    const char* s = v.c_str();
    char* end = nullptr;
    long long out = std::strtoll(s, &end, 10);
    if (end == s || *end != '\0')
        throw ConfigError(where + ": bad integer '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& v, const std::string& where) {
    const char* s = v.c_str();
    char* end = nullptr;
    unsigned long long out = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0' || v.find('-') != std::string::npos)
        throw ConfigError(where + ": bad unsigned integer '" + v + "'");
    return out;
}

inline std::pair<NodeId, NodeId> parse_link_ref(const std::string& v, const std::string& where) {
    std::size_t arrow = v.find("->");
    if (arrow == std::string::npos)
        throw ConfigError(where + ": expected '<from>-><to>', got '" + v + "'");
    return {static_cast<NodeId>(parse_int(v.substr(0, arrow), where)),
            static_cast<NodeId>(parse_int(v.substr(arrow + 2), where))};
}

struct Attr {
    std::string key;
    std::string value;
};

inline std::vector<Attr> parse_attrs(const std::string& text, const std::string& where) {
    std::vector<Attr> attrs;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t'))
            ++i;
        if (i >= text.size())
            break;
        std::size_t end = text.find_first_of(" \t", i);
        if (end == std::string::npos)
            end = text.size();
        std::string token = text.substr(i, end - i);
        std::size_t eq = token.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key=value, got '" + token + "'");
        attrs.push_back({token.substr(0, eq), token.substr(eq + 1)});
        i = end;
    }
    return attrs;
}

}  // namespace cfgtext

inline std::string serialize_config(const ScenarioConfig& cfg) {
    using cfgtext::fmt_double;
    std::string out;
    out += "[topology]\n";
    out += "nodes = " + std::to_string(cfg.nodes) + "\n\n";

    out += "[links]\n";
    for (const LinkConfig& l : cfg.links) {
        out += "link = " + std::to_string(l.from) + "->" + std::to_string(l.to);
        out += " bw=" + fmt_double(l.bandwidth_bps);
        out += " delay=" + fmt_double(l.prop_delay_s);
        out += " loss=" + fmt_double(l.loss_rate);
        out += " queue=" + std::to_string(l.queue_capacity_pkts);
        out += "\n";
    }
    out += "\n[flows]\n";
    for (const TcpFlowConfig& f : cfg.tcp_flows) {
        out += "ftp = flow=" + std::to_string(f.id);
        out += " src=" + std::to_string(f.src);
        out += " dst=" + std::to_string(f.dst);
        out += std::string(" variant=") + to_string(f.variant);
        out += " bytes=" + (f.total_bytes ? std::to_string(*f.total_bytes) : "unbounded");
        out += " mss=" + std::to_string(f.tcp.mss_bytes);
        out += " awnd=" + std::to_string(f.tcp.awnd_segments);
        out += " cwnd0=" + fmt_double(f.tcp.initial_cwnd_mss);
        out += " ssthresh0=" + fmt_double(f.tcp.initial_ssthresh_mss);
        out += " dupack_threshold=" + std::to_string(f.tcp.dupack_threshold);
        out += " rto_min=" + fmt_double(f.tcp.rto_min_s);
        out += " rto_max=" + fmt_double(f.tcp.rto_max_s);
        out += " backoff_cap=" + std::to_string(f.tcp.rto_backoff_cap);
        out += " ack_bytes=" + std::to_string(f.tcp.ack_bytes);
        out += "\n";
    }
    for (const CbrFlowConfig& f : cfg.cbr_flows) {
        out += "cbr = flow=" + std::to_string(f.id);
        out += " src=" + std::to_string(f.src);
        out += " dst=" + std::to_string(f.dst);
        out += " rate=" + fmt_double(f.rate_bps);
        out += " packet=" + std::to_string(f.packet_bytes);
        out += " start=" + fmt_double(f.start_s);
        out += " stop=" + (f.stop_s ? fmt_double(*f.stop_s) : "none");
        out += "\n";
    }
    out += "\n[experiment]\n";
    out += "duration_s = " + fmt_double(cfg.duration_s) + "\n";
    out += "seed = " + std::to_string(cfg.seed) + "\n";
    out += "throughput_window_s = " + fmt_double(cfg.throughput_window_s) + "\n";
    if (cfg.noise_link)
        out += "noise_link = " + std::to_string(cfg.noise_link->first) + "->" +
               std::to_string(cfg.noise_link->second) + "\n";
    for (const ScriptedLossSpec& s : cfg.scripted_losses)
        out += "scripted_loss = flow=" + std::to_string(s.flow) +
               " seg=" + std::to_string(s.segment_index) + "\n";
    return out;
}

/// Parses the text format above. Syntax and unknown-key checking only; call
/// cfg.validate() for semantic checks.
inline ScenarioConfig parse_config(std::string_view text) {
    using namespace cfgtext;
    ScenarioConfig cfg;
    enum class Section { None, Topology, Links, Flows, Experiment };
    Section section = Section::None;

    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view raw =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++lineno;

        std::size_t hash = raw.find('#');
        if (hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        std::string line = trim(raw);
        if (line.empty())
            continue;
        std::string where = "line " + std::to_string(lineno);

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where + ": malformed section header '" + line + "'");
            std::string name = line.substr(1, line.size() - 2);
            if (name == "topology")
                section = Section::Topology;
            else if (name == "links")
                section = Section::Links;
            else if (name == "flows")
                section = Section::Flows;
            else if (name == "experiment")
                section = Section::Experiment;
            else
                throw ConfigError(where + ": unknown section [" + name + "]");
            continue;
        }

        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        switch (section) {
        case Section::None:
            throw ConfigError(where + ": key '" + key + "' outside any section");
        case Section::Topology:
            if (key == "nodes")
                cfg.nodes = static_cast<int>(parse_int(value, "topology.nodes"));
            else
                throw ConfigError(where + ": unknown key 'topology." + key + "'");
            break;
        case Section::Links: {
            if (key != "link")
                throw ConfigError(where + ": unknown key 'links." + key + "'");
            std::size_t sp = value.find_first_of(" \t");
            std::string ref = (sp == std::string::npos) ? value : value.substr(0, sp);
            std::string attr_text = (sp == std::string::npos) ? "" : value.substr(sp);
            LinkConfig l;
            std::tie(l.from, l.to) = parse_link_ref(ref, "links.link");
            for (const Attr& a : parse_attrs(attr_text, "links.link")) {
                if (a.key == "bw")
                    l.bandwidth_bps = parse_double(a.value, "links.link.bw");
                else if (a.key == "delay")
                    l.prop_delay_s = parse_double(a.value, "links.link.delay");
                else if (a.key == "loss")
                    l.loss_rate = parse_double(a.value, "links.link.loss");
                else if (a.key == "queue")
                    l.queue_capacity_pkts =
                        static_cast<int>(parse_int(a.value, "links.link.queue"));
                else
                    throw ConfigError(where + ": unknown attribute 'links.link." + a.key + "'");
            }
            cfg.links.push_back(l);
            break;
        }
        case Section::Flows: {
            if (key == "ftp") {
                TcpFlowConfig f;
                for (const Attr& a : parse_attrs(value, "flows.ftp")) {
                    if (a.key == "flow")
                        f.id = static_cast<FlowId>(parse_int(a.value, "flows.ftp.flow"));
                    else if (a.key == "src")
                        f.src = static_cast<NodeId>(parse_int(a.value, "flows.ftp.src"));
                    else if (a.key == "dst")
                        f.dst = static_cast<NodeId>(parse_int(a.value, "flows.ftp.dst"));
                    else if (a.key == "variant") {
                        if (a.value == "tahoe")
                            f.variant = TcpVariant::Tahoe;
                        else if (a.value == "reno")
                            f.variant = TcpVariant::Reno;
                        else
                            throw ConfigError("flows.ftp.variant: unknown variant '" + a.value +
                                              "' (expected tahoe or reno)");
                    } else if (a.key == "bytes") {
                        if (a.value == "unbounded")
                            f.total_bytes.reset();
                        else
                            f.total_bytes = parse_int(a.value, "flows.ftp.bytes");
                    } else if (a.key == "mss")
                        f.tcp.mss_bytes = static_cast<int>(parse_int(a.value, "flows.ftp.mss"));
                    else if (a.key == "awnd")
                        f.tcp.awnd_segments =
                            static_cast<int>(parse_int(a.value, "flows.ftp.awnd"));
                    else if (a.key == "cwnd0")
                        f.tcp.initial_cwnd_mss = parse_double(a.value, "flows.ftp.cwnd0");
                    else if (a.key == "ssthresh0")
                        f.tcp.initial_ssthresh_mss =
                            parse_double(a.value, "flows.ftp.ssthresh0");
                    else if (a.key == "dupack_threshold")
                        f.tcp.dupack_threshold =
                            static_cast<int>(parse_int(a.value, "flows.ftp.dupack_threshold"));
                    else if (a.key == "rto_min")
                        f.tcp.rto_min_s = parse_double(a.value, "flows.ftp.rto_min");
                    else if (a.key == "rto_max")
                        f.tcp.rto_max_s = parse_double(a.value, "flows.ftp.rto_max");
                    else if (a.key == "backoff_cap")
                        f.tcp.rto_backoff_cap =
                            static_cast<int>(parse_int(a.value, "flows.ftp.backoff_cap"));
                    else if (a.key == "ack_bytes")
                        f.tcp.ack_bytes =
                            static_cast<int>(parse_int(a.value, "flows.ftp.ack_bytes"));
                    else
                        throw ConfigError(where + ": unknown attribute 'flows.ftp." + a.key + "'");
                }
                cfg.tcp_flows.push_back(f);
            } else if (key == "cbr") {
                CbrFlowConfig f;
                for (const Attr& a : parse_attrs(value, "flows.cbr")) {
                    if (a.key == "flow")
                        f.id = static_cast<FlowId>(parse_int(a.value, "flows.cbr.flow"));
                    else if (a.key == "src")
                        f.src = static_cast<NodeId>(parse_int(a.value, "flows.cbr.src"));
                    else if (a.key == "dst")
                        f.dst = static_cast<NodeId>(parse_int(a.value, "flows.cbr.dst"));
                    else if (a.key == "rate")
                        f.rate_bps = parse_double(a.value, "flows.cbr.rate");
                    else if (a.key == "packet")
                        f.packet_bytes = parse_int(a.value, "flows.cbr.packet");
                    else if (a.key == "start")
                        f.start_s = parse_double(a.value, "flows.cbr.start");
                    else if (a.key == "stop") {
                        if (a.value == "none")
                            f.stop_s.reset();
                        else
                            f.stop_s = parse_double(a.value, "flows.cbr.stop");
                    } else
                        throw ConfigError(where + ": unknown attribute 'flows.cbr." + a.key + "'");
                }
                cfg.cbr_flows.push_back(f);
            } else {
                throw ConfigError(where + ": unknown key 'flows." + key + "'");
            }
            break;
        }
        case Section::Experiment:
            if (key == "duration_s")
                cfg.duration_s = parse_double(value, "experiment.duration_s");
            else if (key == "seed")
                cfg.seed = parse_uint(value, "experiment.seed");
            else if (key == "throughput_window_s")
                cfg.throughput_window_s = parse_double(value, "experiment.throughput_window_s");
            else if (key == "noise_link")
                cfg.noise_link = parse_link_ref(value, "experiment.noise_link");
            else if (key == "scripted_loss") {
                ScriptedLossSpec s;
                bool have_flow = false, have_seg = false;
                for (const Attr& a : parse_attrs(value, "experiment.scripted_loss")) {
                    if (a.key == "flow") {
                        s.flow = static_cast<FlowId>(
                            parse_int(a.value, "experiment.scripted_loss.flow"));
                        have_flow = true;
                    } else if (a.key == "seg") {
                        s.segment_index = parse_int(a.value, "experiment.scripted_loss.seg");
                        have_seg = true;
                    } else {
                        throw ConfigError(where + ": unknown attribute 'experiment.scripted_loss." +
                                          a.key + "'");
                    }
                }
                if (!have_flow || !have_seg)
                    throw ConfigError(where + ": scripted_loss needs flow= and seg=");
                cfg.scripted_losses.push_back(s);
            } else
                throw ConfigError(where + ": unknown key 'experiment." + key + "'");
            break;
        }
    }
    return cfg;
}

}  // namespace tcpsim
