// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "hksim/registry.hpp"
#include "hksim/sim.hpp"

namespace hksim {

inline std::string format_double(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

inline std::string csv_metadata_comment(const SimConfig& cfg) {
    std::ostringstream os;
    os << "# kernel_efficiency transform=" << format_double(cfg.eff_transform, 2)
       << " pointwise=" << format_double(cfg.eff_pointwise, 2) << " lanes=" << cfg.num_lanes
       << " freq_ghz=" << format_double(cfg.freq_ghz, 2) << "\n";
    return os.str();
}

// Canonical experiment-record schema, exactly these columns in this order.
inline const char* kExperimentCsvHeader =
    "benchmark,dataflow,bandwidth_gbps,modops_mult,evk_mode,onchip_mb,runtime_ms,idle_frac,dram_mb,ai";

struct ExperimentRecord {
    std::string benchmark;
    Dataflow dataflow;
    double bandwidth_gbps;
    double modops_mult;
    EvkMode evk_mode;
    u64 onchip_mb;
    SimResult result;
};

inline std::string experiment_csv(const std::vector<ExperimentRecord>& rows, const SimConfig& cfg) {
    std::ostringstream os;
    os << csv_metadata_comment(cfg) << kExperimentCsvHeader << "\n";
    for (const auto& r : rows) {
        os << r.benchmark << ',' << to_string(r.dataflow) << ',' << format_double(r.bandwidth_gbps, 2) << ','
           << format_double(r.modops_mult, 2) << ',' << to_string(r.evk_mode) << ',' << r.onchip_mb << ','
           << format_double(r.result.runtime_ms, 4) << ',' << format_double(r.result.idle_fraction, 4) << ','
           << format_double(r.result.dram_mb, 2) << ',' << format_double(r.result.arithmetic_intensity, 4)
           << "\n";
    }
    return os.str();
}

struct TrafficRow {
    std::string benchmark;
    Dataflow dataflow;
    double dram_mb;
    double ai;
    double expected_mb;  // <= 0 when no reference value exists
    double peak_ws_mb;
};

inline std::vector<TrafficRow> collect_traffic(const std::vector<BenchmarkSpec>& benches, u64 onchip_mb,
                                               EvkMode evk) {
    std::vector<TrafficRow> rows;
    for (const auto& b : benches) {
        HksParams p = b.make_params();
        for (int di = 0; di < 3; ++di) {
            Dataflow df = di == 0 ? Dataflow::MP : di == 1 ? Dataflow::DC : Dataflow::OC;
            TaskGraph g = build_graph(p, df, onchip_mb << 20, evk);
            auto s = summarize_traffic(g);
            double expected = b.expected_dram_mb[di];
            rows.push_back(TrafficRow{b.name, df, (double)s.dram_bytes_total / 1048576.0,
                                      s.arithmetic_intensity, expected,
                                      (double)s.peak_working_set_bytes / 1048576.0});
        }
    }
    return rows;
}

inline std::string traffic_csv(const std::vector<TrafficRow>& rows, u64 onchip_mb, EvkMode evk,
                               const SimConfig& cfg) {
    std::ostringstream os;
    os << csv_metadata_comment(cfg)
       << "benchmark,dataflow,evk_mode,onchip_mb,dram_mb,ai,expected_dram_mb,deviation_pct\n";
    for (const auto& r : rows) {
        os << r.benchmark << ',' << to_string(r.dataflow) << ',' << to_string(evk) << ',' << onchip_mb << ','
           << format_double(r.dram_mb, 2) << ',' << format_double(r.ai, 4) << ',';
        if (r.expected_mb > 0)
            os << format_double(r.expected_mb, 2) << ','
               << format_double(100.0 * (r.dram_mb - r.expected_mb) / r.expected_mb, 2);
        else
            os << ",";
        os << "\n";
    }
    return os.str();
}

inline std::string traffic_table(const std::vector<TrafficRow>& rows) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-9s %-4s %10s %10s %8s %8s %10s\n", "benchmark", "df", "dram_mb",
                  "expected", "dev%", "ai", "peak_ws");
    os << buf;
    for (const auto& r : rows) {
        if (r.expected_mb > 0)
            std::snprintf(buf, sizeof(buf), "%-9s %-4s %10.1f %10.1f %+7.1f%% %8.3f %10.1f\n",
                          r.benchmark.c_str(), to_string(r.dataflow), r.dram_mb, r.expected_mb,
                          100.0 * (r.dram_mb - r.expected_mb) / r.expected_mb, r.ai, r.peak_ws_mb);
        else
            std::snprintf(buf, sizeof(buf), "%-9s %-4s %10.1f %10s %8s %8.3f %10.1f\n", r.benchmark.c_str(),
                          to_string(r.dataflow), r.dram_mb, "-", "-", r.ai, r.peak_ws_mb);
        os << buf;
    }
    return os.str();
}

struct OcBaseRow {
    std::string benchmark;
    double oc_base;
    double saved_bw;
    double speedup;
    double expected_oc_base;
    double expected_speedup;
};

inline std::vector<OcBaseRow> collect_ocbase(const std::vector<BenchmarkSpec>& benches, const SimConfig& cfg) {
    std::vector<OcBaseRow> rows;
    for (const auto& b : benches) {
        HksParams p = b.make_params();
        double ocb = find_oc_base(p, cfg);
        TaskGraph gmp = build_mp(p, kDefaultOnchipBytes, EvkMode::Preloaded);
        TaskGraph goc = build_oc(p, kDefaultOnchipBytes, EvkMode::Preloaded);
        SimConfig c = cfg;
        c.bandwidth_gbps = ocb;
        double speedup = simulate(gmp, c).runtime_ms / simulate(goc, c).runtime_ms;
        rows.push_back(OcBaseRow{b.name, ocb, kBaselineBandwidth / ocb, speedup, b.ocbase_gbps,
                                 b.ocbase_speedup});
    }
    return rows;
}

inline std::string ocbase_table(const std::vector<OcBaseRow>& rows) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-9s %10s %9s %9s %14s %14s\n", "benchmark", "oc_base", "saved_bw",
                  "speedup", "ref_oc_base", "ref_speedup");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-9s %10.2f %8.2fx %8.2fx %14.2f %13.2fx\n", r.benchmark.c_str(),
                      r.oc_base, r.saved_bw, r.speedup, r.expected_oc_base, r.expected_speedup);
        os << buf;
    }
    return os.str();
}

inline std::string ocbase_csv(const std::vector<OcBaseRow>& rows, const SimConfig& cfg) {
    std::ostringstream os;
    os << csv_metadata_comment(cfg)
       << "benchmark,oc_base_gbps,saved_bw,speedup,ref_oc_base_gbps,ref_speedup\n";
    for (const auto& r : rows)
        os << r.benchmark << ',' << format_double(r.oc_base, 2) << ',' << format_double(r.saved_bw, 2) << ','
           << format_double(r.speedup, 4) << ',' << format_double(r.expected_oc_base, 2) << ','
           << format_double(r.expected_speedup, 2) << "\n";
    return os.str();
}

// Minimal self-contained SVG: runtime vs bandwidth, log-x, one polyline per
// dataflow.
inline std::string sweep_svg(const std::string& title, const std::vector<ExperimentRecord>& rows) {
    const int W = 640, H = 420, ML = 70, MR = 20, MT = 40, MB_ = 50;
    double bw_min = 1e300, bw_max = 0, rt_max = 0;
    for (const auto& r : rows) {
        bw_min = std::min(bw_min, r.bandwidth_gbps);
        bw_max = std::max(bw_max, r.bandwidth_gbps);
        rt_max = std::max(rt_max, r.result.runtime_ms);
    }
    if (rows.empty() || bw_min <= 0) return "<svg xmlns='http://www.w3.org/2000/svg'/>";
    auto x_of = [&](double bw) {
        return ML + (std::log(bw) - std::log(bw_min)) / (std::log(bw_max) - std::log(bw_min) + 1e-12) *
                        (W - ML - MR);
    };
    auto y_of = [&](double rt) { return H - MB_ - rt / (rt_max * 1.05) * (H - MT - MB_); };
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
       << "<rect width='100%' height='100%' fill='white'/>\n"
       << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title << "</text>\n"
       << "<text x='" << W / 2 << "' y='" << H - 12
       << "' text-anchor='middle' font-size='12'>bandwidth (GB/s, log)</text>\n"
       << "<text x='16' y='" << H / 2 << "' font-size='12' transform='rotate(-90 16 " << H / 2
       << ")'>runtime (ms)</text>\n";
    const char* colors[3] = {"#c0392b", "#2980b9", "#27ae60"};
    int ci = 0;
    for (Dataflow df : {Dataflow::MP, Dataflow::DC, Dataflow::OC}) {
        std::vector<const ExperimentRecord*> pts;
        for (const auto& r : rows)
            if (r.dataflow == df) pts.push_back(&r);
        if (pts.empty()) { ++ci; continue; }
        std::sort(pts.begin(), pts.end(),
                  [](auto* a, auto* b) { return a->bandwidth_gbps < b->bandwidth_gbps; });
        os << "<polyline fill='none' stroke='" << colors[ci] << "' stroke-width='2' points='";
        for (auto* r : pts) os << format_double(x_of(r->bandwidth_gbps), 1) << ',' << format_double(y_of(r->result.runtime_ms), 1) << ' ';
        os << "'/>\n";
        os << "<text x='" << W - 90 << "' y='" << MT + 16 * ci << "' font-size='12' fill='" << colors[ci]
           << "'>" << to_string(df) << "</text>\n";
        ++ci;
    }
    // axis ticks at each swept bandwidth
    std::vector<double> bws;
    for (const auto& r : rows) bws.push_back(r.bandwidth_gbps);
    std::sort(bws.begin(), bws.end());
    bws.erase(std::unique(bws.begin(), bws.end()), bws.end());
    for (double bw : bws) {
        os << "<line x1='" << format_double(x_of(bw), 1) << "' y1='" << H - MB_ << "' x2='"
           << format_double(x_of(bw), 1) << "' y2='" << H - MB_ + 5 << "' stroke='black'/>\n"
           << "<text x='" << format_double(x_of(bw), 1) << "' y='" << H - MB_ + 18
           << "' text-anchor='middle' font-size='10'>" << format_double(bw, bw == std::floor(bw) ? 0 : 1)
           << "</text>\n";
    }
    os << "<line x1='" << ML << "' y1='" << H - MB_ << "' x2='" << W - MR << "' y2='" << H - MB_
       << "' stroke='black'/>\n<line x1='" << ML << "' y1='" << MT << "' x2='" << ML << "' y2='" << H - MB_
       << "' stroke='black'/>\n</svg>\n";
    return os.str();
}

}  // namespace hksim
