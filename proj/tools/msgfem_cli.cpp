// msgfem: experiment runner.
//
//   msgfem nloc-sweep --mesh-n 100 --example random-field --out out/
//   msgfem field-dump --config run.cfg --ell 10 --nloc 20 --s 80

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "msgfem/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::string mesh_n, example, seed, out, m, overlap, ell, nloc, s, threads;
  bool diagnostics = false;
  bool quiet = false;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key=value configuration file");
  sub->add_option("--mesh-n", o.mesh_n, "cells per side (default 100)");
  sub->add_option("--example", o.example, "random-field | high-contrast");
  sub->add_option("--seed", o.seed, "random field seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--m", o.m, "subdomains per side");
  sub->add_option("--overlap", o.overlap, "overlap layers");
  sub->add_option("--ell", o.ell, "oversampling layers, e.g. 0,4,8 or 0..12");
  sub->add_option("--nloc", o.nloc, "local space sizes, e.g. 2..16");
  sub->add_option("--s", o.s, "Steklov basis sizes or 'auto'");
  sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  sub->add_flag("--diagnostics", o.diagnostics, "write per-subdomain diagnostics");
  sub->add_flag("--quiet", o.quiet, "suppress library warnings");
}

msgfem::ExperimentConfig make_config(const Options& o) {
  msgfem::ExperimentConfig cfg;
  if (!o.config.empty()) cfg = msgfem::load_config(o.config);
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) msgfem::apply_setting(cfg, key, v);
  };
  set("mesh_n", o.mesh_n);
  set("example", o.example);
  set("seed", o.seed);
  set("output_dir", o.out);
  set("m", o.m);
  set("overlap_layers", o.overlap);
  set("ell_list", o.ell);
  set("nloc_list", o.nloc);
  set("s_list", o.s);
  set("threads", o.threads);
  if (o.diagnostics) cfg.diagnostics = true;
  return cfg;
}

int report(const msgfem::SweepResult& r, const msgfem::ExperimentConfig& cfg, const char* file) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / file;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  msgfem::write_sweep_csv(os, r.records);
  std::cout << "wrote " << r.records.size() << " records to " << path.string() << '\n';
  for (const auto& f : r.failures) std::cerr << "msgfem: record failed: " << f << '\n';
  return r.failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale spectral GFEM experiments"};
  app.require_subcommand(1);
  Options o;
  auto* nloc = app.add_subcommand("nloc-sweep", "error against n_loc for each ell");
  auto* rho = app.add_subcommand("rho-sweep", "error against H/H* for each n_loc");
  auto* ssw = app.add_subcommand("s-sweep", "error against the Steklov basis size s");
  auto* dump = app.add_subcommand("field-dump", "write u_h, u_G and |u_h - u_G| fields");
  auto* self = app.add_subcommand("selftest", "quick end-to-end checks");
  for (auto* sub : {nloc, rho, ssw, dump, self}) add_common(sub, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  msgfem::ExperimentConfig cfg;
  msgfem::Command cmd = msgfem::Command::Selftest;
  if (*nloc) cmd = msgfem::Command::NlocSweep;
  if (*rho) cmd = msgfem::Command::RhoSweep;
  if (*ssw) cmd = msgfem::Command::SSweep;
  if (*dump) cmd = msgfem::Command::FieldDump;
  try {
    cfg = msgfem::resolve(make_config(o), cmd);
  } catch (const msgfem::ConfigError& e) {
    std::cerr << "msgfem: config error: " << e.what() << '\n';
    return 1;
  }
  msgfem::set_warnings(!o.quiet);

  try {
    switch (cmd) {
      case msgfem::Command::NlocSweep:
        return report(msgfem::run_sweep(cfg), cfg, "nloc_sweep.csv");
      case msgfem::Command::RhoSweep:
        return report(msgfem::run_sweep(cfg), cfg, "rho_sweep.csv");
      case msgfem::Command::SSweep:
        return report(msgfem::run_sweep(cfg), cfg, "s_sweep.csv");
      case msgfem::Command::FieldDump: {
        const auto fd = msgfem::run_field_dump(cfg);
        std::cout << "error " << fd.record.error << '\n';
        for (const auto& f : fd.files) std::cout << "wrote " << f.string() << '\n';
        return 0;
      }
      case msgfem::Command::Selftest: {
        bool ok = true;
        for (const auto& c : msgfem::run_selftest()) {
          std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
          ok = ok && c.passed;
        }
        return ok ? 0 : 2;
      }
    }
  } catch (const msgfem::ConfigError& e) {
    std::cerr << "msgfem: config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "msgfem: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
