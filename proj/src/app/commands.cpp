#include "cloakopt/app/commands.hpp"

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>

#include <omp.h>

#include "cloakopt/app/io.hpp"
#include "cloakopt/app/validate.hpp"
#include "cloakopt/quantum/witnesses.hpp"

namespace cloakopt::app {

namespace fs = std::filesystem;

namespace {

std::ostream& out_stream(const CommandOptions& o) { return o.out ? *o.out : std::cout; }
std::ostream& err_stream(const CommandOptions& o) { return o.err ? *o.err : std::cerr; }

// Loads the config (defaults when no path is given) and applies flag overrides.
RunConfig resolve(const CommandOptions& o, bool config_required) {
  if (config_required && !o.config_path) throw ConfigError("--config is required");
  RunConfig c = o.config_path ? load_config(*o.config_path) : parse_config_text("");
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.threads) c.threads = *o.threads;
  if (o.seed) c.seed = *o.seed;
  c.validate();
  if (c.threads > 0) omp_set_num_threads(c.threads);
  return c;
}

fs::path prepare_out_dir(const RunConfig& c) {
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory '" + dir.string() + "'");
  }
  return dir;
}

template <typename Body>
int guarded(const CommandOptions& o, const char* command, Body&& body) {
  auto& err = err_stream(o);
  try {
    return body();
  } catch (const ConfigError& e) {
    err << command << ": config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const quantum::DegenerateSteadyStateError& e) {
    err << command << ": degenerate steady state (kernel dimension " << e.kernel_dimension()
        << "): " << e.what() << '\n';
    return kExitDegenerateSteadyState;
  } catch (const vie::SolverError& e) {
    err << command << ": field solver failed after " << e.iterations()
        << " iterations (residual " << e.residual() << "): " << e.what() << '\n';
    return kExitSolverFailure;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << '\n';
    return kExitSolverFailure;
  }
}

std::string pump_column(double p) { return "C0_P_over_gamma_" + format_number(p); }

}  // namespace

FreeSpaceReference free_space_reference(double d12, double pump_ratio) {
  const auto self = em::free_space_self_green(em::UnitSystem::k0);
  const auto g12 = em::free_space_green(em::Position::Zero(), em::Position(0.0, 0.0, d12),
                                        em::UnitSystem::k0);
  FreeSpaceReference r;
  r.couplings = em::couplings_from_green(self, self, g12, em::Direction::UnitZ(), em::UnitSystem::k0);
  r.rho = quantum::steady_state(optimizer::normalized_params(r.couplings, pump_ratio));
  return r;
}

int cmd_optimize(const CommandOptions& o) {
  return guarded(o, "optimize", [&] {
    const RunConfig c = resolve(o, true);
    auto& out = out_stream(o);
    const auto emitters = c.make_emitters(c.d12);
    const auto record = optimizer::optimize(
        c.make_grid(), emitters, c.design, c.solver, em::UnitSystem::k0,
        [&](const optimizer::IterationEntry& e) {
          out << "iteration " << e.n << "  target " << std::setprecision(8) << e.target
              << "  accepted " << e.accepted_count << "  mismatch " << e.born_mismatch << '\n';
        });

    const fs::path dir = prepare_out_dir(c);
    write_eps_csv(dir / "design.eps.csv", record.grid);
    auto meta = design_meta(record.grid, emitters);
    meta["seed"] = c.seed;
    meta["stop_reason"] = optimizer::to_string(record.stop);
    meta["iterations"] = record.trace.back().n;
    meta["initial_target"] = record.initial_target();
    meta["final_target"] = record.final_target();
    meta["target"] = c.design.target == optimizer::Target::concurrence ? "concurrence" : "negativity";
    meta["pump_ratio"] = c.design.pump_ratio;
    meta["d12"] = c.d12;
    write_json(dir / "design.meta.json", meta);
    write_csv(dir / "trace.csv", trace_table(record));
    out << "stop: " << optimizer::to_string(record.stop) << ", target " << record.initial_target()
        << " -> " << record.final_target() << '\n';
    return int{kExitOk};
  });
}

int cmd_sweep(const CommandOptions& o) {
  return guarded(o, "sweep", [&] {
    const RunConfig c = resolve(o, true);
    auto& out = out_stream(o);
    const std::size_t nd = c.sweep_d12.size(), np = c.sweep_pump.size();
    const long total = static_cast<long>(nd * np);
    std::vector<std::vector<std::string>> rows(total);
    std::vector<std::string> failures(total);

#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < total; ++i) {
      const double d = c.sweep_d12[i / np];
      const double pump = c.sweep_pump[i % np];
      try {
        optimizer::DesignConfig design = c.design;
        design.pump_ratio = pump;
        const auto record = optimizer::optimize(c.make_grid(), c.make_emitters(d), design, c.solver);
        const auto ref = free_space_reference(d, pump);
        const auto& cs = record.trace.back().couplings;
        const double cc = quantum::concurrence(record.rho);
        const double c0 = quantum::concurrence(ref.rho);
        rows[i] = {format_number(d),
                   format_number(pump),
                   format_number(cc),
                   format_number(c0),
                   format_number(cc - c0),
                   format_number(cs.gamma12 / cs.gamma11),
                   format_number(cs.g12 / cs.gamma11),
                   format_number(cs.purcell),
                   format_number(quantum::linear_entropy(record.rho)),
                   format_number(quantum::linear_entropy(ref.rho)),
                   format_number(quantum::negativity(record.rho)),
                   format_number(quantum::negativity(ref.rho))};
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }

    const fs::path dir = prepare_out_dir(c);
    CsvTable table, failed;
    table.header = {"d12_over_lambda", "P_over_gamma",       "C",   "C0",   "C_minus_C0",
                    "gamma12_over_gamma", "g12_over_gamma", "purcell", "S_L", "S_L0", "N", "N0"};
    failed.header = {"d12_over_lambda", "P_over_gamma", "error"};
    for (long i = 0; i < total; ++i) {
      if (!rows[i].empty()) {
        table.rows.push_back(std::move(rows[i]));
      } else {
        std::string msg = failures[i];
        for (char& ch : msg) {
          if (ch == ',' || ch == '\n') ch = ';';
        }
        failed.rows.push_back(
            {format_number(c.sweep_d12[i / np]), format_number(c.sweep_pump[i % np]), msg});
      }
    }
    write_csv(dir / "sweep.csv", table);
    write_csv(dir / "failures.csv", failed);
    out << table.rows.size() << " points done, " << failed.rows.size() << " failed\n";
    return int{kExitOk};
  });
}

int cmd_freespace(const CommandOptions& o) {
  return guarded(o, "freespace", [&] {
    const RunConfig c = resolve(o, false);
    CsvTable t;
    t.header = {"d12_over_lambda", "gamma12_over_gamma0", "g12_over_gamma0"};
    for (double p : c.freespace_pump) t.header.push_back(pump_column(p));
    for (double d : c.freespace_d12) {
      const auto ref = free_space_reference(d, c.freespace_pump.front());
      std::vector<std::string> row{format_number(d), format_number(ref.couplings.gamma12),
                                   format_number(ref.couplings.g12)};
      for (double p : c.freespace_pump) {
        const auto rho = quantum::steady_state(optimizer::normalized_params(ref.couplings, p));
        row.push_back(format_number(quantum::concurrence(rho)));
      }
      t.rows.push_back(std::move(row));
    }
    write_csv(prepare_out_dir(c) / "freespace.csv", t);
    out_stream(o) << t.rows.size() << " distances written\n";
    return int{kExitOk};
  });
}

int cmd_mems(const CommandOptions& o) {
  return guarded(o, "mems", [&] {
    const RunConfig c = resolve(o, false);
    CsvTable t;
    t.header = {"r", "C", "S_L"};
    for (int i = 0; i <= 200; ++i) {
      const double r = i / 200.0;
      const auto p = quantum::mems_curve(r);
      t.rows.push_back({format_number(r), format_number(p.concurrence),
                        format_number(p.linear_entropy)});
    }
    write_csv(prepare_out_dir(c) / "mems.csv", t);
    out_stream(o) << "201 points written\n";
    return int{kExitOk};
  });
}

int cmd_validate(const CommandOptions& o) {
  return guarded(o, "validate", [&] {
    const RunConfig c = resolve(o, false);
    auto& out = out_stream(o);
    ValidateOptions vo;
    vo.seed = c.seed;
    vo.corrupt_self_term = o.corrupt_self_term;
    std::size_t width = 0;
    for (const auto& n : validation_check_names()) width = std::max(width, n.size());
    const auto results = run_validation(vo, [&](const CheckResult& r) {
      out << std::left << std::setw(static_cast<int>(width) + 2) << r.name
          << (r.pass ? "PASS" : "FAIL") << "  " << std::right << std::fixed
          << std::setprecision(2) << std::setw(7) << r.seconds << " s  " << r.detail << '\n'
          << std::defaultfloat;
      out.flush();
    });
    const auto failed = std::count_if(results.begin(), results.end(),
                                      [](const CheckResult& r) { return !r.pass; });
    out << results.size() - failed << "/" << results.size() << " checks passed\n";
    return failed == 0 ? int{kExitOk} : int{kExitValidationFailed};
  });
}

}  // namespace cloakopt::app
