// Command-line front end: scenario in, CSV/binary artifacts + manifest out.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rps/csvio.hpp"
#include "rps/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunContext {
  rps::Scenario sc;
  fs::path outdir;
  uint64_t seed = 0;
  std::vector<std::string> formats;
  std::vector<fs::path> written;  // removed again if the run fails
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  std::string out(const std::string& name) {
    const fs::path p = outdir / name;
    written.push_back(p);
    return p.string();
  }

  void manifest(const std::string& command, json extra) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json m;
    m["command"] = command;
    m["scenario_digest"] = sc.digest;
    m["seed"] = seed;
    m["wall_time_s"] = wall;
    json files = json::array();
    for (const auto& p : written) files.push_back(p.filename().string());
    m["outputs"] = files;
    m["results"] = std::move(extra);
    rps::write_manifest(out("manifest.json"), m);
  }
};

void cleanup(RunContext& ctx) {
  std::error_code ec;
  for (const auto& p : ctx.written) fs::remove(p, ec);
}

void write_histogram_csv(RunContext& ctx, const std::string& name,
                         const rps::CorrelationHistogram& h) {
  rps::CsvWriter w(ctx.out(name), ctx.sc.digest, "tau_ns,counts,norm,err");
  for (size_t i = 0; i < h.bins(); ++i)
    w.row(h.center(i), h.counts[i], h.normalized ? h.norm[i] : 0.0, h.err[i]);
}

void write_g1_csv(RunContext& ctx, const std::string& name, const rps::G1Summary& g) {
  rps::CsvWriter w(ctx.out(name), ctx.sc.digest, "tau_ns,re,im,abs");
  for (size_t i = 0; i < g.tau.size(); ++i)
    w.row(g.tau[i], g.g1[i].real(), g.g1[i].imag(), std::abs(g.g1[i]));
}

void write_stream(RunContext& ctx, const std::string& stem, const rps::TimeTagStream& s) {
  for (const std::string& f : ctx.formats) {
    if (f == "csv") {
      std::ofstream os(ctx.out(stem + ".csv"));
      rps::write_stream_csv(os, s);
    } else {
      std::ofstream os(ctx.out(stem + ".bin"), std::ios::binary);
      rps::write_stream_binary(os, s);
    }
  }
}

rps::TimeTagStream read_stream(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw rps::ScenarioError("correlate: cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  is.seekg(0);
  if (std::string(magic, 4) == "RPST") return rps::read_stream_binary(is);
  return rps::read_stream_csv(is);
}

json fit_json(const rps::ExpFitResult& f) {
  return {{"gamma_per_ns", f.gamma}, {"gamma_err", f.gamma_err},
          {"t1_ns", f.t1},           {"t1_err_ns", f.t1_err},
          {"window_ns", {f.window_a, f.window_b}}, {"n_points", f.n_points}};
}

json budget_json(const rps::AccidentalsBudget& b) {
  return {{"signal_dark", b.signal_dark},
          {"dark_dark", b.dark_dark},
          {"same_source_doubles", b.same_source_doubles},
          {"total_background", b.total_background},
          {"total_coincidences", b.total_coincidences},
          {"frac_signal_dark", b.frac_signal_dark},
          {"frac_dark_dark", b.frac_dark_dark},
          {"frac_doubles", b.frac_doubles}};
}

int run_command(const std::string& cmd, RunContext& ctx, const std::string& input_a,
                const std::string& input_b) {
  using namespace rps;
  if (cmd == "populations") {
    const auto res = pipeline::run_populations(ctx.sc);
    CsvWriter w(ctx.out("populations.csv"), ctx.sc.digest,
                "time_ns,pop_s,pop_p,pop_d,emission_rate_per_ns");
    const auto& tr = res.period.trace;
    for (size_t i = 0; i < tr.time.size(); ++i)
      w.row(tr.time[i], tr.pop_S[i], tr.pop_P[i], tr.pop_D[i], tr.emission_rate[i]);
    ctx.manifest(cmd, {{"d_population_after_prep", res.d_population_after_prep},
                       {"emission_probability", res.period.emission_probability},
                       {"fixed_point_iterations", res.period.iterations}});
  } else if (cmd == "wavepacket") {
    const auto res = pipeline::run_wavepacket(ctx.sc, ctx.seed);
    CsvWriter w(ctx.out("wavepacket.csv"), ctx.sc.digest, "tau_ns,rate");
    for (size_t i = 0; i < res.wp.tau.size(); ++i) w.row(res.wp.tau[i], res.wp.rate[i]);
    ctx.manifest(cmd, {{"fit", fit_json(res.fit)},
                       {"n_clicks", res.n_clicks},
                       {"emission_probability", res.emission_probability}});
  } else if (cmd == "scan-rate") {
    const auto res = pipeline::run_scan(ctx.sc);
    CsvWriter w(ctx.out("scan.csv"), ctx.sc.digest, "intensity_rel,gamma_per_ns,stderr");
    for (const auto& p : res.points) w.row(p.intensity_rel, p.gamma, p.gamma_err);
    ctx.manifest(cmd, {{"slope_per_ns", res.slope}, {"r2", res.r2}});
  } else if (cmd == "trajectories") {
    const auto stream = pipeline::run_trajectory_stream(ctx.sc, ctx.seed);
    write_stream(ctx, "stream", stream);
    ctx.manifest(cmd, {{"n_clicks", stream.records.size()},
                       {"total_sequences", stream.total_sequences}});
  } else if (cmd == "correlate") {
    const auto s1 = read_stream(input_a);
    const auto s2 = input_b.empty() ? s1 : read_stream(input_b);
    const auto& an = ctx.sc.analysis;
    const auto hist =
        rps::cross_correlate(s1, s2, an.bin, -an.tau_max, an.tau_max, /*normalize=*/true);
    write_histogram_csv(ctx, "histogram.csv", hist);
    ctx.manifest(cmd, {{"n_records_a", s1.records.size()},
                       {"n_records_b", s2.records.size()}});
  } else if (cmd == "hbt") {
    const auto res = pipeline::run_hbt(ctx.sc, ctx.seed);
    write_histogram_csv(ctx, "hbt_histogram.csv", res.hist);
    ctx.manifest(cmd, {{"window_half_ns", res.window_half},
                       {"central_counts", res.central_counts},
                       {"side_peak_counts", res.side_peak_counts},
                       {"budget", budget_json(res.budget)}});
  } else if (cmd == "hom") {
    const auto res = pipeline::run_hom(ctx.sc, ctx.seed);
    {
      CsvWriter w(ctx.out("hom_g2.csv"), ctx.sc.digest, "tau_ns,p_ni,p_int,g2_ni,g2_int");
      for (size_t i = 0; i < res.tp.tau.size(); ++i)
        w.row(res.tp.tau[i], res.tp.p_ni[i], res.tp.p_int[i], res.tp.g2_ni[i], res.tp.g2_int[i]);
    }
    write_g1_csv(ctx, "g1.csv", res.g1);
    ctx.manifest(cmd, {{"t1_fit", fit_json(res.t1_fit)},
                       {"window_half_ns", res.window_half},
                       {"signal_ni", res.signal_ni},
                       {"signal_int", res.signal_int},
                       {"contrast", res.contrast},
                       {"suppression_tau0", res.suppression_tau0},
                       {"t2_ns", res.g1.t2},
                       {"t2_err_ns", res.g1.t2_err},
                       {"beat_mhz", res.g1.beat_mhz},
                       {"budget_ni", budget_json(res.budget_ni)},
                       {"budget_int", budget_json(res.budget_int)}});
  } else if (cmd == "g1") {
    auto sys = pipeline::make_system(ctx.sc);
    const auto pr = rps::simulate_sequence(sys, ctx.sc.simulation.dt);
    const auto corr = rps::two_time_correlation(sys, pr.rho_start, pipeline::regression_t_grid(ctx.sc),
                                                pipeline::regression_tau_grid(ctx.sc));
    const auto g = rps::g1_summary(corr);
    write_g1_csv(ctx, "g1.csv", g);
    ctx.manifest(cmd, {{"t2_ns", g.t2}, {"t2_err_ns", g.t2_err}, {"beat_mhz", g.beat_mhz}});
  } else {
    return 64;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-photon source simulator / correlation toolkit"};
  app.require_subcommand(1);

  std::string scenario_path, outdir_flag, format_flag, input_a, input_b;
  int64_t seed_flag = -1;

  const std::vector<std::string> commands = {"populations", "wavepacket", "scan-rate",
                                             "trajectories", "correlate", "hbt", "hom", "g1"};
  for (const std::string& c : commands) {
    CLI::App* sub = app.add_subcommand(c);
    sub->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    sub->add_option("--out", outdir_flag, "output directory (overrides scenario)");
    sub->add_option("--seed", seed_flag, "RNG seed (overrides scenario)");
    sub->add_option("--format", format_flag, "stream format: csv or binary");
    if (c == "correlate") {
      sub->add_option("--input-a", input_a, "first time-tag stream")->required();
      sub->add_option("--input-b", input_b, "second stream (defaults to autocorrelation)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();

  RunContext ctx;
  try {
    ctx.sc = rps::parse_scenario(scenario_path);
    ctx.seed = seed_flag >= 0 ? static_cast<uint64_t>(seed_flag) : ctx.sc.simulation.seed;
    ctx.formats = ctx.sc.outputs.formats;
    if (!format_flag.empty()) {
      if (format_flag != "csv" && format_flag != "binary") {
        std::cerr << "rps: --format must be csv or binary\n";
        return 64;
      }
      ctx.formats = {format_flag};
    }
    ctx.outdir = outdir_flag.empty() ? fs::path(ctx.sc.outputs.directory) : fs::path(outdir_flag);
    fs::create_directories(ctx.outdir);
  } catch (const std::exception& e) {
    std::cerr << "rps: " << e.what() << "\n";
    return 1;
  }

  try {
    const int rc = run_command(cmd, ctx, input_a, input_b);
    if (rc != 0) cleanup(ctx);
    return rc;
  } catch (const rps::DivergenceError& e) {
    std::cerr << "rps: numerical failure: " << e.what() << "\n";
    cleanup(ctx);
    return 2;
  } catch (const rps::ConvergenceError& e) {
    std::cerr << "rps: numerical failure: " << e.what() << "\n";
    cleanup(ctx);
    return 2;
  } catch (const rps::ScenarioError& e) {
    std::cerr << "rps: " << e.what() << "\n";
    cleanup(ctx);
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "rps: " << e.what() << "\n";
    cleanup(ctx);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "rps: " << e.what() << "\n";
    cleanup(ctx);
    return 2;
  }
}
