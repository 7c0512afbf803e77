// Command-line front end for the workflow-satisfiability toolkit.
// Exit codes: 0 = satisfiable / allowed / true, 1 = the negative answer,
// 2 = any error (bad input, unparsable file, cap exceeded).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "wsp/wsp.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw wsp::Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

wsp::Plan parse_partial(const std::string& text,
                        const wsp::WorkflowSchema& schema) {
  std::vector<std::pair<wsp::StepId, wsp::UserId>> entries;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(pos, comma - pos);
    pos = comma + 1;
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw wsp::Error("partial plan entries look like step=user; got '" +
                       item + "'");
    const std::string step_name = item.substr(0, eq);
    const std::string user_name = item.substr(eq + 1);
    auto s = schema.step_names().find(step_name);
    if (!s) throw wsp::Error("unknown step '" + step_name + "' in --partial");
    auto u = schema.user_names().find(user_name);
    if (!u) throw wsp::Error("unknown user '" + user_name + "' in --partial");
    entries.emplace_back(wsp::StepId{*s}, wsp::UserId{*u});
  }
  return wsp::Plan(std::move(entries));
}

void warn_constraint_counts(const wsp::WorkflowSchema& schema) {
  for (const std::string& w : wsp::constraint_count_warnings(schema))
    std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workflow satisfiability solver"};
  app.require_subcommand(1);

  wsp::Caps caps;
  std::string format = "kv";
  app.add_option("--max-plans", caps.max_plans, "Plan enumeration cap");
  app.add_option("--max-expressions", caps.max_simple_expressions,
                 "Simple-expression cap");
  app.add_option("--max-partitions", caps.max_partitions,
                 "Set-partition cap");
  app.add_option("--threads", caps.threads,
                 "Worker threads (1 = reproducible)");
  app.add_option("--format", format, "Output format (kv)")
      ->check(CLI::IsMember({"kv"}));

  std::string file, out_path, partial_text, step_name, user_name;
  std::uint32_t max_xor_k = 0;

  auto* solve_cmd = app.add_subcommand("solve", "Decide satisfiability");
  solve_cmd->add_option("file", file)->required();
  bool force_naive = false, force_fpt = false;
  solve_cmd->add_flag("--naive", force_naive, "Force the n^k search");
  solve_cmd->add_flag("--fpt", force_fpt,
                      "Force the constraint-expression pipeline");
  solve_cmd->fallthrough();

  auto* min_users_cmd =
      app.add_subcommand("min-users", "Least user count that satisfies");
  min_users_cmd->add_option("file", file)->required();
  min_users_cmd->fallthrough();

  auto* grant_cmd =
      app.add_subcommand("grant", "Runtime step-grant decision");
  grant_cmd->add_option("file", file)->required();
  grant_cmd->add_option("--partial", partial_text,
                        "Performed steps, e.g. s1=u1,s2=u2");
  grant_cmd->add_option("--step", step_name, "Requested step")->required();
  grant_cmd->add_option("--user", user_name, "Requesting user")->required();
  grant_cmd->fallthrough();

  auto* owsp_cmd = app.add_subcommand("owsp", "Ordered WSP");
  owsp_cmd->add_option("file", file)->required();
  bool owsp_exists = false, owsp_all = false;
  owsp_cmd->add_flag("--exists", owsp_exists, "Some schedule admits a plan");
  owsp_cmd->add_flag("--all", owsp_all, "Every schedule admits a plan");
  owsp_cmd->fallthrough();

  auto* cond_cmd =
      app.add_subcommand("conditional", "Weak/strong satisfiability");
  cond_cmd->add_option("file", file)->required();
  bool cond_weak = false, cond_strong = false;
  cond_cmd->add_flag("--weak", cond_weak, "Some execution path completes");
  cond_cmd->add_flag("--strong", cond_strong, "Every execution path completes");
  cond_cmd->fallthrough();

  auto* count_cmd =
      app.add_subcommand("count", "Execution-set counts for a formula");
  count_cmd->add_option("file", file)->required();
  count_cmd->fallthrough();

  auto* max_xor_cmd =
      app.add_subcommand("max-xor", "Extremal execution-set workflow");
  max_xor_cmd->add_option("k", max_xor_k, "Number of steps")->required();
  max_xor_cmd->fallthrough();

  auto* violations_cmd =
      app.add_subcommand("violations", "Which constraints can be violated");
  violations_cmd->add_option("file", file)->required();
  violations_cmd->fallthrough();

  auto* prune_cmd =
      app.add_subcommand("prune", "Drop constraints no plan can violate");
  prune_cmd->add_option("file", file)->required();
  prune_cmd->add_option("-o,--output", out_path, "Output file")->required();
  prune_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve_cmd->parsed()) {
      auto schema = wsp::to_schema(wsp::parse(read_file(file)));
      warn_constraint_counts(schema);
      if (force_naive && force_fpt)
        throw wsp::Error("--naive and --fpt are mutually exclusive");
      wsp::SolveResult result =
          force_naive ? wsp::solve_naive(schema, caps)
          : force_fpt ? wsp::solve_fpt(schema, caps)
                      : wsp::solve_auto(schema, caps);
      std::cout << wsp::emit_result(result, schema.step_names(),
                                    schema.user_names());
      return result.sat() ? 0 : 1;
    }

    if (min_users_cmd->parsed()) {
      auto doc = wsp::parse(read_file(file));
      std::vector<wsp::StepId> steps;
      for (std::uint32_t i = 0; i < doc.step_names.size(); ++i)
        steps.push_back(wsp::StepId{i});
      wsp::StepDag dag(std::move(steps), doc.edges);
      auto m = wsp::min_users(doc.step_names, dag, doc.constraints, caps);
      if (m) {
        std::cout << "min-users: " << *m << '\n';
        return 0;
      }
      std::cout << "min-users: NONE\n";
      return 1;
    }

    if (grant_cmd->parsed()) {
      auto schema = wsp::to_schema(wsp::parse(read_file(file)));
      auto s = schema.step_names().find(step_name);
      if (!s) throw wsp::Error("unknown step '" + step_name + "'");
      auto u = schema.user_names().find(user_name);
      if (!u) throw wsp::Error("unknown user '" + user_name + "'");
      auto result =
          wsp::check_step_grant(schema, parse_partial(partial_text, schema),
                                wsp::StepId{*s}, wsp::UserId{*u}, caps);
      std::cout << wsp::emit_result(result, schema.step_names(),
                                    schema.user_names());
      return result.allowed() ? 0 : 1;
    }

    if (owsp_cmd->parsed()) {
      if (owsp_exists == owsp_all)
        throw wsp::Error("pass exactly one of --exists / --all");
      auto schema = wsp::to_schema(wsp::parse(read_file(file)));
      auto result = wsp::solve_owsp(
          schema, owsp_exists ? wsp::OwspMode::Exists : wsp::OwspMode::All,
          caps);
      std::cout << wsp::emit_result(result, schema.step_names(),
                                    schema.user_names());
      return result.satisfiable ? 0 : 1;
    }

    if (cond_cmd->parsed()) {
      if (cond_weak == cond_strong)
        throw wsp::Error("pass exactly one of --weak / --strong");
      auto cs = wsp::to_conditional(wsp::parse(read_file(file)));
      auto report = wsp::satisfiable(
          cs, cond_weak ? wsp::SatMode::Weak : wsp::SatMode::Strong, caps);
      std::cout << wsp::emit_result(report, cs.step_names());
      return report.verdict ? 0 : 1;
    }

    if (count_cmd->parsed()) {
      auto doc = wsp::parse(read_file(file));
      if (!doc.formula) throw wsp::Error("file has no formula section");
      std::cout << "sharp: " << wsp::sharp(*doc.formula) << '\n';
      std::cout << "flat: " << wsp::flat(*doc.formula) << '\n';
      if (wsp::sharp(*doc.formula) <= caps.max_execution_sets) {
        for (const auto& set : wsp::execution_sets(*doc.formula, caps)) {
          std::cout << "execution-set: {";
          for (std::size_t i = 0; i < set.size(); ++i)
            std::cout << (i ? ", " : "")
                      << doc.step_names.name(set[i].value);
          std::cout << "}\n";
        }
      } else {
        std::cout << "execution-sets: omitted (count exceeds cap)\n";
      }
      return 0;
    }

    if (max_xor_cmd->parsed()) {
      auto mx = wsp::build_max_xor_workflow(max_xor_k);
      std::cout << "formula: " << wsp::formula_text(mx.formula, mx.step_names)
                << '\n';
      std::cout << "sharp: " << wsp::sharp(mx.formula) << '\n';
      return 0;
    }

    if (violations_cmd->parsed()) {
      auto schema = wsp::to_schema(wsp::parse(read_file(file)));
      auto verdicts = wsp::violable_constraints(schema, caps);
      auto finding = wsp::find_violating_plan(schema, caps);
      std::cout << wsp::emit_violations(schema, verdicts, finding);
      return finding.result.sat() ? 0 : 1;
    }

    if (prune_cmd->parsed()) {
      auto doc = wsp::parse(read_file(file));
      auto schema = wsp::to_schema(doc);
      auto result = wsp::prune_constraints(schema, caps);
      for (const wsp::Constraint& c : result.removed)
        std::cout << "removed: " << wsp::constraint_text(c, doc.step_names)
                  << '\n';
      // The output carries the schema's (ingest-normalized) surviving
      // constraints; relations and names are shared with the input document.
      wsp::SchemaDocument pruned_doc = doc;
      pruned_doc.constraints = result.pruned.constraints();
      std::ofstream out(out_path, std::ios::binary);
      if (!out.good()) throw wsp::Error("cannot write '" + out_path + "'");
      out << wsp::serialize(pruned_doc);
      std::cout << "kept: " << pruned_doc.constraints.size() << '\n';
      std::cout << "wrote: " << out_path << '\n';
      return 0;
    }
  } catch (const wsp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
