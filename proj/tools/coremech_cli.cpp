// Command-line front end: clear scenarios under the payment mechanisms, run
// the property checks, and export report tables.

#include <CLI11.hpp>

#include "coremech/cli.hpp"

namespace {

using coremech::Mechanism;
using coremech::RunConfig;

bool apply_mechanisms(RunConfig* config, const std::string& list, std::string* error) {
  config->mechanisms.clear();
  config->mechanisms_none = false;
  if (list == "all" || list.empty()) return true;
  if (list == "none") {
    config->mechanisms_none = true;
    return true;
  }
  std::stringstream stream(list);
  std::string token;
  while (std::getline(stream, token, ',')) {
    const auto mech = coremech::parse_mechanism(token);
    if (!mech) {
      *error = "unknown mechanism '" + token + "'";
      return false;
    }
    config->mechanisms.push_back(*mech);
  }
  return true;
}

void split_checks(RunConfig* config, const std::string& list) {
  config->checks.clear();
  std::stringstream stream(list);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (!token.empty()) config->checks.push_back(token);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"market clearing and payment-rule analysis"};
  app.require_subcommand(1);

  RunConfig config;
  std::string mechanisms = "all";
  std::string checks;
  std::string mode = "enumerate";
  std::string format = "table";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scenario", config.input, "market description file")->required();
    cmd->add_option("--epsilon", config.epsilon, "tie-break weight for the mpcs objective");
    cmd->add_option("--mode", mode, "mpcs row handling: enumerate | generate");
    cmd->add_option("--format", format, "output format: table | json | csv");
    cmd->add_option("--seed", config.seed, "seed for randomized checks");
    cmd->add_option("--out", config.out, "write the report to this file instead of stdout");
  };

  CLI::App* clear = app.add_subcommand("clear", "clear the market under payment mechanisms");
  add_common(clear);
  clear->add_option("--mechanisms", mechanisms,
                    "comma list of pay_as_bid,lmp,vcg,mpcs or 'all' or 'none'");

  CLI::App* analyze = app.add_subcommand("analyze", "run property checks on the scenario");
  add_common(analyze);
  analyze->add_option("--checks", checks,
                      "comma list: core,budget,lmp_vs_vcg,replication,vcg_sign,"
                      "supermodularity,incentive,deviation,ce or 'all'");

  CLI::App* report = app.add_subcommand("report", "emit csv matrices and plot series");
  add_common(report);
  report->add_option("--mechanisms", mechanisms, "mechanisms to include (default all)");
  report->add_option("--out-dir", config.out_dir, "directory for the emitted files");

  CLI11_PARSE(app, argc, argv);

  std::string error;
  if (!apply_mechanisms(&config, mechanisms, &error)) {
    std::cerr << "error: " << error << "\n";
    return coremech::kExitParse;
  }
  split_checks(&config, checks);
  if (const auto parsed = coremech::parse_output_format(format)) {
    config.format = *parsed;
  } else {
    std::cerr << "error: unknown format '" << format << "'\n";
    return coremech::kExitParse;
  }
  if (mode == "generate") {
    config.mode = coremech::MpcsMode::kGenerate;
  } else if (mode != "enumerate") {
    std::cerr << "error: unknown mode '" << mode << "'\n";
    return coremech::kExitParse;
  }

  try {
    if (clear->parsed()) return coremech::cmd_clear(config, std::cout, std::cerr);
    if (analyze->parsed()) return coremech::cmd_analyze(config, std::cout, std::cerr);
    if (report->parsed()) return coremech::cmd_report(config, std::cout, std::cerr);
  } catch (const coremech::Error& e) {
    std::cerr << "error: " << coremech::error_code_name(e.code()) << ": " << e.what() << "\n";
    switch (e.code()) {
      case coremech::ErrorCode::kSchemaViolation:
      case coremech::ErrorCode::kIoError: return coremech::kExitParse;
      case coremech::ErrorCode::kInfeasibleDispatch: return coremech::kExitInfeasible;
      default: return coremech::kExitMechanism;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return coremech::kExitMechanism;
  }
  return coremech::kExitOk;
}
