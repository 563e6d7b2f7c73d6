#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qdde/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qdde: q-difference-differential Cauchy problems, q-Borel/q-Laplace summation and certificates"};
  std::string command, t_str, z_str;
  qdde::RunConfig cfg;
  double tol = 0;
  app.add_option("command", command, "check | solve-formal | borel | spiral | evaluate | asymptotics | majorant | all")
      ->required();
  app.add_option("--problem", cfg.problem_path, "problem file (JSON)")->required();
  app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  app.add_option("--format", cfg.format, "stdout summary format")->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_option("--set", cfg.overrides, "override key=value (dotted path), repeatable");
  auto* tol_opt = app.add_option("--tol", tol, "tail tolerance");
  app.add_option("--t", t_str, "evaluation point RE,IM");
  app.add_option("--z", z_str, "z value RE,IM");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  const auto cmd = qdde::parse_command(command);
  if (!cmd) {
    std::cerr << "unknown command '" << command << "'\n";
    return 1;
  }
  cfg.command = *cmd;
  try {
    if (*tol_opt) cfg.tol = tol;
    if (!t_str.empty()) cfg.t = qdde::parse_complex(t_str);
    if (!z_str.empty()) cfg.z = qdde::parse_complex(z_str);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  const qdde::RunResult res = qdde::run(cfg);
  const auto& r = res.report;
  qdde::json summary{{"command", command}, {"exit_code", res.exit_code}, {"out", cfg.out_dir}};
  if (!res.error.empty()) summary["error"] = res.error;
  if (r.contains("assumptions")) summary["assumptions_ok"] = r["assumptions"]["all_ok"];
  if (r.contains("formal")) summary["formal_residual"] = r["formal"]["residual"];
  if (r.contains("borel")) summary["borel_discrepancy"] = r["borel"]["discrepancy"];
  if (r.contains("evaluate")) summary["value"] = r["evaluate"]["value"];
  if (r.contains("majorant")) summary["domination_violations"] = r["majorant"]["domination"]["violations"];
  if (r.contains("asymptotics"))
    for (const auto& f : r["asymptotics"]["fits"]) summary["slope_residual"].push_back(f["slope_residual"]);
  if (cfg.format == "json") {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::cout << "key,value\n";
    for (const auto& [k, v] : summary.items()) std::cout << k << "," << v.dump() << "\n";
  }
  if (!res.error.empty()) std::cerr << "error: " << res.error << "\n";
  return res.exit_code;
}
