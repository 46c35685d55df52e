// Copyright (C) 2026 The hksim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: correctness verification at toy scale, DRAM-traffic
// reporting, bandwidth/MODOPS sweeps, bandwidth-saving summaries, and task
// graph export.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <future>
#include <iostream>
#include <json.hpp>
#include <random>

#include "hksim/report.hpp"
#include "hksim/verify.hpp"

using namespace hksim;
using nlohmann::json;

namespace {

constexpr int kExitVerifyFailure = 1;
constexpr int kExitUsage = 2;

std::vector<BenchmarkSpec> load_benchmarks(const std::string& config_path) {
    std::vector<BenchmarkSpec> benches = benchmark_registry();
    if (config_path.empty()) return benches;
    std::ifstream in(config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
    json j = json::parse(in);
    for (const auto& e : j) {
        BenchmarkSpec b{};
        b.name = e.at("name").get<std::string>();
        b.degree_log2 = e.at("logN").get<int>();
        b.k_l = e.at("k_l").get<int>();
        b.k_p = e.at("k_p").get<int>();
        b.dnum = e.at("dnum").get<int>();
        b.alpha = (b.k_l + b.dnum - 1) / b.dnum;
        b.expected_evk_mb = 0;
        b.expected_dram_mb = {0, 0, 0};
        b.expected_ai = {0, 0, 0};
        b.ocbase_gbps = 0;
        b.ocbase_speedup = 0;
        benches.push_back(std::move(b));
    }
    return benches;
}

std::vector<BenchmarkSpec> select_benchmarks(const std::vector<BenchmarkSpec>& all, const std::string& name) {
    if (name == "all") return all;
    for (const auto& b : all)
        if (b.name == name) return {b};
    throw CLI::ValidationError("--benchmark", "unknown benchmark " + name);
}

std::vector<Dataflow> select_dataflows(const std::string& s) {
    if (s == "all") return {Dataflow::MP, Dataflow::DC, Dataflow::OC};
    if (s == "mp") return {Dataflow::MP};
    if (s == "dc") return {Dataflow::DC};
    if (s == "oc") return {Dataflow::OC};
    throw CLI::ValidationError("--dataflow", "expected mp|dc|oc|all");
}

EvkMode parse_evk(const std::string& s) {
    if (s == "preloaded") return EvkMode::Preloaded;
    if (s == "streamed") return EvkMode::Streamed;
    throw CLI::ValidationError("--evk", "expected preloaded|streamed");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

// ---- verify ---------------------------------------------------------------

struct VerifyOutcome {
    int checks = 0;
    int failures = 0;
    void report(const std::string& name, bool ok, const std::string& detail = "") {
        ++checks;
        if (!ok) ++failures;
        std::cout << (ok ? "PASS " : "FAIL ") << name;
        if (!detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << "\n";
    }
};

void verify_transform_properties(VerifyOutcome& out, u64 seed) {
    std::mt19937_64 rng(seed);
    bool roundtrip = true;
    for (int logn : {4, 10, 12}) {
        Modulus m(generate_ntt_primes(logn, 1)[0], logn);
        std::vector<u64> a(1ull << logn);
        for (auto& x : a) x = rng() % m.value();
        auto saved = a;
        ntt_forward(a, m);
        ntt_inverse(a, m);
        roundtrip = roundtrip && a == saved;
    }
    out.report("ntt/intt roundtrip identity (N=2^4,2^10,2^12)", roundtrip);

    // negacyclic product against the quadratic oracle at N=16
    Modulus m(generate_ntt_primes(4, 1)[0], 4);
    const u64 q = m.value();
    bool product_ok = true;
    for (int rep = 0; rep < 10 && product_ok; ++rep) {
        std::vector<u64> a(16), b(16), expect(16, 0);
        for (auto& x : a) x = rng() % q;
        for (auto& x : b) x = rng() % q;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j) {
                u64 prod = mul_mod(a[i], b[j], q);
                int k = i + j;
                if (k < 16)
                    expect[k] = add_mod(expect[k], prod, q);
                else
                    expect[k - 16] = sub_mod(expect[k - 16], prod, q);
            }
        ntt_forward(a, m);
        ntt_forward(b, m);
        std::vector<u64> c(16);
        for (int i = 0; i < 16; ++i) c[i] = mul_mod(a[i], b[i], q);
        ntt_inverse(c, m);
        product_ok = c == expect;
    }
    out.report("negacyclic product matches quadratic oracle (N=16)", product_ok);

    // fast conversion error bound at toy size
    auto mods = generate_moduli(3, 6);
    std::vector<Modulus> src(mods.begin(), mods.begin() + 2);
    std::vector<Modulus> dst(mods.begin() + 2, mods.end());
    BasisTable table(src, dst);
    bigint qsrc = basis_product(src);
    bool conv_ok = true;
    for (int rep = 0; rep < 20 && conv_ok; ++rep) {
        RnsPolynomial p = RnsPolynomial::zero(3, src, Domain::Coefficient);
        std::vector<bigint> vals(8);
        for (std::size_t i = 0; i < 8; ++i) {
            bigint v = ((bigint(rng()) << 64) | rng()) % qsrc;
            vals[i] = v;
            for (auto& t : p.towers()) t.coeffs[i] = (u64)(v % t.mod.value());
        }
        RnsPolynomial o = bconv(p, table);
        for (std::size_t i = 0; i < 8 && conv_ok; ++i) {
            std::vector<u64> res(dst.size());
            for (std::size_t t = 0; t < dst.size(); ++t) res[t] = o.tower(t).coeffs[i];
            bigint got = crt_reconstruct(res, dst);
            bigint diff = got - vals[i];
            conv_ok = diff % qsrc == 0 && diff / qsrc <= bigint(src.size()) / 2;
        }
    }
    out.report("fast conversion error within alpha/2 * Q_source", conv_ok);
}

int cmd_verify(const std::string& choice, int logn, u64 seed) {
    if (logn > 13) {
        std::cerr << "verify: the big-integer oracle is limited to N <= 2^13; pass --logn 12 or 13\n";
        return kExitUsage;
    }
    VerifyOutcome out;
    verify_transform_properties(out, seed);

    std::vector<std::tuple<int, int, int>> configs;  // (k_l, k_p, dnum)
    if (choice == "toy") {
        configs = {{6, 2, 1}, {6, 2, 2}, {6, 2, 3}};
    } else {
        const BenchmarkSpec& b = find_benchmark(choice);
        configs = {{b.k_l, b.k_p, b.dnum}};
    }
    for (auto [kl, kp, dnum] : configs) {
        HksParams params(logn, kl, kp, dnum);
        std::mt19937_64 rng(seed + dnum);
        auto s_src = sample_secret(params, rng);
        auto s_dst = sample_secret(params, rng);
        std::string tag = " (k_l=" + std::to_string(kl) + ", k_p=" + std::to_string(kp) +
                          ", dnum=" + std::to_string(dnum) + ")";

        auto evk0 = keygen(params, s_src, s_dst, seed ^ 0xe0e0, -1);
        auto key_rep = verify_evk(params, evk0, s_src, s_dst, -1);
        out.report("noiseless key satisfies the gadget identity" + tag, key_rep.pass,
                   key_rep.pass ? "" : key_rep.failure_stage);

        auto c1 = sample_uniform(params, params.q_chain(), Domain::Evaluation, rng);
        auto [d0, d1] = hybrid_key_switch(c1, evk0, params);
        auto rep = verify_key_switch(params, c1, d0, d1, s_src, s_dst, -1);
        out.report("key-switch identity, noiseless keys" + tag, rep.pass,
                   "residual " + rep.max_residual.str() + " <= bound " + rep.bound.str());

        auto evk = keygen(params, s_src, s_dst, seed ^ 0xabcd, 3.2);
        auto [e0, e1] = hybrid_key_switch(c1, evk, params);
        auto rep2 = verify_key_switch(params, c1, e0, e1, s_src, s_dst, 3.2);
        out.report("key-switch identity, sigma=3.2 keys" + tag, rep2.pass);

        bool equiv = true;
        auto [m0, m1] = hybrid_key_switch_ordered(c1, evk, params, Dataflow::MP);
        for (Dataflow df : {Dataflow::DC, Dataflow::OC}) {
            auto [f0, f1] = hybrid_key_switch_ordered(c1, evk, params, df);
            for (std::size_t t = 0; t < f0.num_towers() && equiv; ++t)
                equiv = f0.tower(t).coeffs == m0.tower(t).coeffs && f1.tower(t).coeffs == m1.tower(t).coeffs;
        }
        out.report("dataflow replays produce bit-identical outputs" + tag, equiv);
    }
    std::cout << (out.failures == 0 ? "verification passed" : "verification FAILED") << " (" << out.checks
              << " checks, " << out.failures << " failures)\n";
    return out.failures == 0 ? 0 : kExitVerifyFailure;
}

// ---- traffic / sweep / ocbase / export -------------------------------------

int cmd_traffic(const std::vector<BenchmarkSpec>& benches, u64 onchip_mb, EvkMode evk,
                const std::string& out_path, const SimConfig& cfg) {
    auto rows = collect_traffic(benches, onchip_mb, evk);
    std::cout << traffic_table(rows);
    if (!out_path.empty()) write_file(out_path, traffic_csv(rows, onchip_mb, evk, cfg));
    return 0;
}

int cmd_sweep(const std::vector<BenchmarkSpec>& benches, const std::vector<Dataflow>& dfs,
              std::vector<double> bw_grid, std::vector<double> modops_grid, EvkMode evk, u64 onchip_mb,
              const std::string& out_path, bool plot, int jobs, const SimConfig& base) {
    if (bw_grid.empty()) bw_grid = default_bw_grid();
    if (modops_grid.empty()) modops_grid = {1.0};
    std::sort(bw_grid.begin(), bw_grid.end());
    std::sort(modops_grid.begin(), modops_grid.end());

    struct Job {
        const BenchmarkSpec* bench;
        Dataflow df;
        double bw, modops;
    };
    std::vector<Job> jobs_list;
    for (const auto& b : benches)
        for (Dataflow df : dfs)
            for (double m : modops_grid)
                for (double bw : bw_grid) jobs_list.push_back(Job{&b, df, bw, m});

    // graphs are shared per (benchmark, dataflow); simulations may run
    // concurrently, results are emitted in deterministic order
    std::map<std::pair<std::string, Dataflow>, TaskGraph> graphs;
    for (const auto& b : benches)
        for (Dataflow df : dfs)
            graphs.emplace(std::make_pair(b.name, df), build_graph(b.make_params(), df, onchip_mb << 20, evk));

    std::vector<ExperimentRecord> records(jobs_list.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs_list.size()) return;
            const Job& j = jobs_list[i];
            SimConfig cfg = base;
            cfg.bandwidth_gbps = j.bw;
            cfg.modops_mult = j.modops;
            records[i] = ExperimentRecord{j.bench->name, j.df,      j.bw,
                                          j.modops,      evk,       onchip_mb,
                                          simulate(graphs.at({j.bench->name, j.df}), cfg)};
        }
    };
    int nthreads = std::max(1, std::min<int>(jobs, (int)jobs_list.size()));
    std::vector<std::thread> pool;
    for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string csv = experiment_csv(records, base);
    if (!out_path.empty())
        write_file(out_path, csv);
    else
        std::cout << csv;
    if (plot) {
        for (const auto& b : benches) {
            std::vector<ExperimentRecord> sub;
            for (const auto& r : records)
                if (r.benchmark == b.name && r.modops_mult == modops_grid.front()) sub.push_back(r);
            std::string base_name = out_path.empty() ? "sweep" : out_path;
            auto dot = base_name.rfind(".csv");
            if (dot != std::string::npos) base_name = base_name.substr(0, dot);
            write_file(base_name + "_" + b.name + ".svg", sweep_svg(b.name, sub));
        }
    }
    return 0;
}

int cmd_ocbase(const std::vector<BenchmarkSpec>& benches, const std::string& out_path, const SimConfig& cfg) {
    auto rows = collect_ocbase(benches, cfg);
    std::cout << ocbase_table(rows);
    if (!out_path.empty()) write_file(out_path, ocbase_csv(rows, cfg));
    return 0;
}

int cmd_export(const BenchmarkSpec& bench, Dataflow df, EvkMode evk, u64 onchip_mb,
               const std::string& out_path) {
    TaskGraph g = build_graph(bench.make_params(), df, onchip_mb << 20, evk);
    std::ostringstream os;
    export_graph(g, os);
    if (!out_path.empty())
        write_file(out_path, os.str());
    else
        std::cout << os.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid key-switching dataflow explorer"};
    app.require_subcommand(1);

    std::string benchmark = "all", dataflow = "all", evk_s = "streamed", out_path, config_path;
    std::string verify_choice = "toy";
    int onchip_mb = 32, jobs = 1, logn = 12;
    u64 seed = 1;
    bool plot = false;
    std::vector<double> bw_grid, modops_grid;

    auto* verify = app.add_subcommand("verify", "functional verification at reduced parameters");
    verify->add_option("--benchmark", verify_choice, "toy or a registered benchmark name at reduced N");
    verify->add_option("--logn", logn, "polynomial degree exponent (<= 13)");
    verify->add_option("--seed", seed, "rng seed");

    auto* traffic = app.add_subcommand("traffic", "DRAM traffic and arithmetic intensity per dataflow");
    traffic->add_option("--benchmark", benchmark);
    traffic->add_option("--onchip-mb", onchip_mb);
    traffic->add_option("--evk", evk_s);
    traffic->add_option("--out", out_path);
    traffic->add_option("--config", config_path, "extra benchmark definitions (json)");

    auto* sweep = app.add_subcommand("sweep", "bandwidth/MODOPS sweep to CSV (and SVG with --plot)");
    sweep->add_option("--benchmark", benchmark);
    sweep->add_option("--dataflow", dataflow);
    sweep->add_option("--bw", bw_grid, "bandwidth grid, GB/s")->delimiter(',');
    sweep->add_option("--modops", modops_grid, "throughput multipliers")->delimiter(',');
    sweep->add_option("--evk", evk_s);
    sweep->add_option("--onchip-mb", onchip_mb);
    sweep->add_option("--out", out_path);
    sweep->add_flag("--plot", plot);
    sweep->add_option("--jobs", jobs);
    sweep->add_option("--config", config_path);
    sweep->add_option("--seed", seed, "accepted for interface stability; sweeps are deterministic");

    auto* ocbase = app.add_subcommand("ocbase", "bandwidth at which OC matches the MP/64GBps baseline");
    ocbase->add_option("--benchmark", benchmark);
    ocbase->add_option("--out", out_path);
    ocbase->add_option("--config", config_path);

    auto* exportg = app.add_subcommand("export-graph", "write the task graph in the text format");
    exportg->add_option("--benchmark", benchmark)->required();
    exportg->add_option("--dataflow", dataflow)->required();
    exportg->add_option("--evk", evk_s);
    exportg->add_option("--onchip-mb", onchip_mb);
    exportg->add_option("--out", out_path);
    exportg->add_option("--config", config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitUsage;
    }

    SimConfig cfg;  // calibrated defaults
    try {
        if (app.got_subcommand(verify)) return cmd_verify(verify_choice, logn, seed);
        auto benches = load_benchmarks(config_path);
        if (app.got_subcommand(traffic))
            return cmd_traffic(select_benchmarks(benches, benchmark), (u64)onchip_mb, parse_evk(evk_s),
                               out_path, cfg);
        if (app.got_subcommand(sweep))
            return cmd_sweep(select_benchmarks(benches, benchmark), select_dataflows(dataflow), bw_grid,
                             modops_grid, parse_evk(evk_s), (u64)onchip_mb, out_path, plot, jobs, cfg);
        if (app.got_subcommand(ocbase)) return cmd_ocbase(select_benchmarks(benches, benchmark), out_path, cfg);
        if (app.got_subcommand(exportg)) {
            auto sel = select_benchmarks(benches, benchmark);
            auto dfs = select_dataflows(dataflow);
            if (sel.size() != 1 || dfs.size() != 1) {
                std::cerr << "export-graph: pick exactly one benchmark and one dataflow\n";
                return kExitUsage;
            }
            return cmd_export(sel[0], dfs[0], parse_evk(evk_s), (u64)onchip_mb, out_path);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerifyFailure;
    }
    return kExitUsage;
}
