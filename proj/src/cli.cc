#include "late/cli.h"

#include <algorithm>
#include <optional>

#include "CLI11.hpp"

#include "late/blocked.h"
#include "late/clustered.h"
#include "late/config.h"
#include "late/dataset_io.h"
#include "late/error.h"
#include "late/report.h"
#include "late/simulation.h"

namespace late {

namespace {

struct Flags {
  std::string data;
  std::string config;
  std::string out;
  std::string format;
  std::string inference;
  std::optional<double> alpha;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
};

void emit(const std::string& content, const std::string& flag_path,
          const std::optional<std::string>& config_path, std::ostream& out) {
  const std::string path = !flag_path.empty() ? flag_path : config_path.value_or("");
  if (path.empty()) {
    out << content;
  } else {
    write_report(content, path);
  }
}

int estimate(const Flags& flags, std::ostream& out) {
  RunConfig cfg = load_run_config(flags.config);
  if (!flags.format.empty()) cfg.format = parse_format(flags.format);
  if (flags.alpha) cfg.estimate.alpha = *flags.alpha;
  if (flags.inference == "t") cfg.estimate.reference = Reference::kT;
  if (flags.inference == "z") cfg.estimate.reference = Reference::kZ;
  cfg.validate();
  const Dataset data = load_dataset(flags.data, cfg.columns);
  const bool json = cfg.format == ReportFormat::kJson;

  std::string content;
  ClusteredOptions clustered;
  clustered.estimate = cfg.estimate;
  clustered.cluster_weights = cfg.cluster_weight_scheme;
  clustered.policy = cfg.block_policy;
  clustered.scheme = cfg.weight_scheme;
  switch (cfg.design) {
    case Design::kSimple: {
      const LateResult r = analyze_simple(data, cfg.estimate);
      content = json ? dump_json(estimate_json(r, cfg.design, cfg.estimate))
                     : estimate_csv(r, cfg.design);
      break;
    }
    case Design::kClustered: {
      const LateResult r = analyze_clustered(data, clustered);
      content = json ? dump_json(estimate_json(r, cfg.design, cfg.estimate))
                     : estimate_csv(r, cfg.design);
      break;
    }
    case Design::kBlocked:
    case Design::kBlockedClustered: {
      PooledResult r;
      if (cfg.design == Design::kBlocked) {
        BlockedOptions options{cfg.estimate, cfg.block_policy, cfg.weight_scheme};
        r = analyze_blocked(data, options);
      } else {
        r = analyze_blocked_clustered(data, clustered);
      }
      content = json ? dump_json(pooled_json(r, cfg.design, cfg.estimate))
                     : pooled_csv(r, cfg.design);
      break;
    }
  }
  emit(content, flags.out, cfg.output_path, out);
  return kExitOk;
}

int simulate(const Flags& flags, std::ostream& out) {
  SimulationRun run = load_simulation_config(flags.config);
  if (!flags.format.empty()) run.format = parse_format(flags.format);
  if (flags.seed) run.config.seed = *flags.seed;
  if (flags.reps) run.config.reps = *flags.reps;
  if (flags.alpha) run.config.alpha = *flags.alpha;
  if (flags.inference == "t") run.config.reference = Reference::kT;
  if (flags.inference == "z") run.config.reference = Reference::kZ;
  run.config.validate();
  const SimulationSummary summary = run_monte_carlo(run.config, flags.threads);
  const std::string content = run.format == ReportFormat::kJson
                                  ? dump_json(simulation_json(summary))
                                  : simulation_csv(summary);
  emit(content, flags.out, run.output_path, out);
  return kExitOk;
}

int diagnose_command(const Flags& flags, std::ostream& out) {
  const RunConfig cfg = load_run_config(flags.config);
  const Dataset data = load_dataset(flags.data, cfg.columns);
  emit(dump_json(diagnostics_json(diagnose(data, cfg), cfg.design)), flags.out,
       std::nullopt, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design-based LATE estimation for randomized trials with noncompliance",
               "late"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "JSON configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", flags.out, "Report path (default: standard output)");
  };
  const std::vector<std::string> formats = {"json", "csv"};
  const std::vector<std::string> references = {"t", "z"};

  CLI::App* est = app.add_subcommand("estimate", "Estimate the LATE from a data file");
  est->add_option("--data", flags.data, "Input CSV")->required()->check(CLI::ExistingFile);
  add_common(est);
  est->add_option("--format", flags.format, "Report format")
      ->check(CLI::IsMember(formats));
  est->add_option("--alpha", flags.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  est->add_option("--inference", flags.inference, "Reference distribution")
      ->check(CLI::IsMember(references));

  CLI::App* sim = app.add_subcommand("simulate", "Run the Monte Carlo study");
  add_common(sim);
  sim->add_option("--format", flags.format, "Report format")
      ->check(CLI::IsMember(formats));
  sim->add_option("--threads", flags.threads, "Worker threads (0 = default)")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", flags.seed, "Override the configured seed");
  sim->add_option("--reps", flags.reps, "Override the replication count");
  sim->add_option("--alpha", flags.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--inference", flags.inference, "Reference distribution")
      ->check(CLI::IsMember(references));

  CLI::App* diag = app.add_subcommand("diagnose", "First-stage diagnostics");
  diag->add_option("--data", flags.data, "Input CSV")->required()->check(CLI::ExistingFile);
  add_common(diag);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "usage: late estimate --data <csv> --config <file> [--out <path>]\n"
           "       late simulate --config <file> [--out <path>] [--threads <k>]\n"
           "       late diagnose --data <csv> --config <file>\n";
    return kExitUsage;
  }

  try {
    if (est->parsed()) return estimate(flags, out);
    if (sim->parsed()) return simulate(flags, out);
    return diagnose_command(flags, out);
  } catch (const LateError& e) {
    err << "error: " << e.what() << "\n";
    return is_numerical(e.code()) ? kExitNumerical : kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace late
