#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hsflow/errors.hpp"
#include "hsflow/kahler.hpp"
#include "hsflow/report.hpp"

namespace hsflow::cli {

namespace {

struct Options {
  std::string model;
  std::string out_dir;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::optional<int> max_iters;
  std::optional<double> margin_floor;
  std::vector<std::string> bidegrees;
  std::string t_samples;
  bool preflow = false;
};

struct Output {
  std::string name;
  std::string text;
  std::string csv;
};

Bidegree parse_bidegree(const std::string& s) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const int p = std::stoi(s.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument(s);
    const std::string rest = s.substr(comma + 1);
    const int q = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(s);
    return {p, q};
  } catch (const std::logic_error&) {
    throw InputError(fmt::format("bidegree '{}' is not of the form p,q", s));
  }
}

std::vector<cplx> parse_samples(const std::string& list) {
  std::vector<cplx> out;
  std::stringstream in(list);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    const auto v = parse_complex_literal(tok);
    if (!v) throw InputError(fmt::format("t sample '{}' is not a complex literal", tok));
    out.push_back(*v);
  }
  return out;
}

ReportHeader header_for(const std::string& command, const Options& opt, std::uint64_t hash,
                        std::vector<std::pair<std::string, std::string>> settings) {
  ReportHeader h{command, hash, {}};
  h.settings.emplace_back("model", opt.model);
  for (auto& s : settings) h.settings.push_back(std::move(s));
  return h;
}

std::string backend_line(const Model& m) { return fmt::format("backend={}\n", to_string(m.backend)); }

struct Loaded {
  Model model;
  std::shared_ptr<const FormComplex> complex;
  HermitianStructure metric;
  OperatorBundle bundle;
};

Loaded load(const Options& opt) {
  Model m = load_model(opt.model);
  auto c = build_complex(m);
  HermitianStructure h = HermitianStructure::from_model(m, c);
  OperatorBundle b(h);
  return Loaded{std::move(m), c, h, b};
}

std::string coefficient_csv(const Form& f) {
  std::string out = "index,coefficient\n";
  const Vec& c = f.coeffs();
  for (Eigen::Index k = 0; k < c.size(); ++k) out += fmt::format("{},{}\n", k, format_complex(c(k)));
  return out;
}

Output cmd_classify(const Options& opt) {
  const double rel = opt.tol.value_or(1e-8);
  Loaded l = load(opt);
  const MetricClassification c = classify(l.bundle, rel);
  CohomologyTable table;
  if (opt.bidegrees.empty()) {
    table = cohomology_table(l.bundle);
  } else {
    for (const auto& s : opt.bidegrees) {
      const Bidegree bd = parse_bidegree(s);
      l.complex->space().require(bd);
      table[bd] = cohomology_dims(l.bundle, bd);
    }
  }
  const auto header = header_for("classify", opt, l.model.hash,
                                 {{"closedness_rel_tol", format_real(rel)},
                                  {"rank_cutoff", format_real(kDefaultRankCutoff)}});
  return {"classify", header_text(header) + backend_line(l.model) + classification_text(c) + cohomology_text(table),
          cohomology_csv(table)};
}

Output cmd_torsion(const Options& opt) {
  const Loaded l = load(opt);
  const TorsionReport r = torsion_form(l.bundle);
  const auto header = header_for("torsion", opt, l.model.hash,
                                 {{"closedness_rel_tol", format_real(1e-8)},
                                  {"oracle_rel_tol", format_real(1e-6)},
                                  {"rank_cutoff", format_real(kDefaultRankCutoff)}});
  return {"torsion", header_text(header) + backend_line(l.model) + torsion_text(r), coefficient_csv(r.rho20)};
}

Output cmd_energy(const Options& opt) {
  const Loaded l = load(opt);
  const EnergyFunctional ef(l.metric);
  const AeppliPoint pt = ef.point(l.complex->zero({1, 0}));
  const Eigen::RowVectorXcd paper = ef.differential_functional(pt);
  const Eigen::RowVectorXcd envelope = ef.envelope_functional(pt);
  const double gap = paper.size() ? (paper - envelope).cwiseAbs().maxCoeff() : 0.0;
  const SamplerSpec spec{256, opt.seed};
  const PositivityReport pos = check_weak_positivity(*l.complex, l.metric.omega(), spec);

  std::string text = fmt::format("F={}\ncriticality={}\ndifferential_envelope_gap={}\nmargin={}\nomega_positivity={}\n",
                                 format_real(ef.energy(pt)), format_real(ef.criticality(pt)), format_real(gap),
                                 format_real(pt.positivity_margin), to_string(pos.verdict));
  std::string csv = "index,dF_real_direction,dF_imag_direction\n";
  for (Eigen::Index k = 0; k < paper.size(); ++k) {
    csv += fmt::format("{},{},{}\n", k, format_real(paper(k).real()), format_real(-paper(k).imag()));
  }
  const auto header = header_for("energy", opt, l.model.hash,
                                 {{"seed", std::to_string(opt.seed)},
                                  {"positivity_samples", std::to_string(spec.samples)},
                                  {"rank_cutoff", format_real(kDefaultRankCutoff)}});
  return {"energy", header_text(header) + backend_line(l.model) + text, csv};
}

Output cmd_flow(const Options& opt) {
  const Loaded l = load(opt);
  FlowOptions fo;
  if (opt.max_iters) fo.max_iters = *opt.max_iters;
  if (opt.tol) fo.tol = *opt.tol;
  if (opt.margin_floor) fo.margin_floor_factor = *opt.margin_floor;
  const EnergyFunctional ef(l.metric);
  const FlowTrace trace = ef.gradient_descent(l.complex->zero({1, 0}), fo);
  const AeppliPoint end = ef.point(trace.final_potential);
  const MetricClassification c = classify(OperatorBundle(end.realized));
  const auto header = header_for("flow", opt, l.model.hash,
                                 {{"max_iters", std::to_string(fo.max_iters)},
                                  {"tol", format_real(fo.tol)},
                                  {"armijo_c", format_real(fo.armijo_c)},
                                  {"initial_step", format_real(fo.initial_step)},
                                  {"margin_floor_factor", format_real(fo.margin_floor_factor)},
                                  {"min_step", format_real(fo.min_step)},
                                  {"closedness_rel_tol", format_real(1e-8)}});
  return {"flow", header_text(header) + backend_line(l.model) + flow_text(trace) + classification_text(c),
          flow_csv(trace)};
}

Output cmd_kahler(const Options& opt) {
  const Loaded l = load(opt);
  const KahlerConstruction k = kahler_in_class(l.bundle);
  const auto header = header_for("kahler", opt, l.model.hash,
                                 {{"closedness_rel_tol", format_real(1e-8)},
                                  {"rank_cutoff", format_real(kDefaultRankCutoff)}});
  return {"kahler", header_text(header) + backend_line(l.model) + kahler_text(k), coefficient_csv(k.omega_tilde)};
}

Output cmd_family(const Options& opt) {
  const ModelTemplate tmpl = load_model_template(opt.model);
  std::vector<cplx> samples = parse_samples(opt.t_samples);
  const FamilySpec spec = family_from_template(tmpl, samples);
  if (spec.t_samples.empty()) throw InputError("family needs t samples (t_samples := ... or --t-samples)");
  FamilyConfig config;
  config.preflow = opt.preflow;
  if (opt.max_iters) config.flow.max_iters = *opt.max_iters;
  if (opt.tol) config.flow.tol = *opt.tol;
  if (!opt.bidegrees.empty()) {
    config.bc_bidegrees.clear();
    config.dbar_bidegrees.clear();
    for (const auto& s : opt.bidegrees) {
      const Bidegree bd = parse_bidegree(s);
      if (bd.p < 0 || bd.q < 0 || bd.p > tmpl.n || bd.q > tmpl.n) {
        throw DegreeError(fmt::format("bidegree ({},{}) outside the complex", bd.p, bd.q));
      }
      config.bc_bidegrees.push_back(bd);
      config.dbar_bidegrees.push_back(bd);
    }
  }
  const FamilyTable table = family_diagnostics(spec, config);

  std::vector<double> abs_t;
  std::vector<double> diffs;
  bool jump = false;
  double threshold = 0.0;
  double first_failure = std::numeric_limits<double>::infinity();
  for (const auto& row : table.rows) {
    jump = jump || row.dimension_jump;
    if (row.rho_diff) {
      abs_t.push_back(std::abs(row.t));
      diffs.push_back(*row.rho_diff);
    }
    if (!row.kahler_margin || *row.kahler_margin <= 0.0) first_failure = std::min(first_failure, std::abs(row.t));
  }
  for (const auto& row : table.rows) {
    if (std::abs(row.t) < first_failure) threshold = std::max(threshold, std::abs(row.t));
  }
  const auto order = observed_order(abs_t, diffs);
  std::string text = fmt::format("rows={}\ndimension_jump={}\nrho_observed_order={}\nkahler_positive_below={}\n",
                                 table.rows.size(), jump ? "true" : "false", order ? format_real(*order) : "n/a",
                                 format_real(threshold));

  std::string bds;
  for (const auto& bd : config.bc_bidegrees) bds += fmt::format("{}({},{})", bds.empty() ? "" : " ", bd.p, bd.q);
  std::string ts;
  for (const auto& t : spec.t_samples) ts += (ts.empty() ? "" : " ") + format_complex(t);
  const auto header = header_for("family", opt, tmpl.hash,
                                 {{"t_samples", ts},
                                  {"bidegrees_bc", bds},
                                  {"preflow", opt.preflow ? "true" : "false"},
                                  {"flow_max_iters", std::to_string(config.flow.max_iters)},
                                  {"flow_tol", format_real(config.flow.tol)},
                                  {"closedness_rel_tol", format_real(1e-8)},
                                  {"rank_cutoff", format_real(config.rank_cutoff)}});
  return {"family", header_text(header) + text, family_csv(table)};
}

// Built-in suite for `selftest`.
constexpr const char* kFlatTorus = "kind invariant\nn 3\n";
constexpr const char* kIwasawa = "kind invariant\nn 3\nd 3 := -1*e(1,2)\n";
constexpr const char* kSpectralTorus =
    "kind spectral\nn 3\nmodes axis K 1\n"
    "potential 1 0 0 0 0 0 1 := 0.05\n"
    "potential 0 0 0 1 0 0 1 := 0.03i\n"
    "potential 0 1 0 0 0 0 2 := -0.04\n"
    "potential 0 0 0 0 0 1 3 := 0.02+0.02i\n"
    "potential 0 0 1 0 0 0 2 := 0.03\n";

struct SelftestModel {
  const char* name;
  const char* text;
  std::function<bool(const MetricClassification&)> expected;
};

Output cmd_selftest(const Options& opt, bool& all_pass) {
  const std::vector<SelftestModel> suite = {
      {"flat_torus", kFlatTorus, [](const MetricClassification& c) { return c.kahler && c.hermitian_symplectic; }},
      {"iwasawa", kIwasawa,
       [](const MetricClassification& c) { return !c.kahler && !c.hermitian_symplectic && c.balanced; }},
      {"spectral_torus", kSpectralTorus,
       [](const MetricClassification& c) { return !c.kahler && c.hermitian_symplectic; }},
  };
  const std::vector<std::string> checks = {"identities", "star", "cohomology", "classify", "torsion"};
  std::string text = "model";
  std::string csv = "model";
  for (const auto& c : checks) {
    text += fmt::format(" {:>10}", c);
    csv += "," + c;
  }
  text += "\n";
  csv += "\n";
  all_pass = true;
  for (const auto& entry : suite) {
    std::vector<bool> pass;
    auto attempt = [&pass](const std::function<bool()>& f) {
      try {
        pass.push_back(f());
      } catch (const Error&) {
        pass.push_back(false);
      }
    };
    const Model m = parse_model(entry.text);
    const auto c = build_complex(m);
    const HermitianStructure h = HermitianStructure::from_model(m, c);
    const OperatorBundle b(h);
    attempt([&] { return identity_defect(*c) <= 1e-12; });
    attempt([&] {
      for (int k = 0; k <= h.n(); ++k) {
        const GridForm star = h.hodge_star(h.omega_power_sampled(k));
        const GridForm target = h.omega_power_sampled(h.n() - k);
        if (h.norm(star + (-1.0) * target) > 1e-10 * (1.0 + h.norm(target))) return false;
      }
      return true;
    });
    attempt([&] { return !cohomology_table(b).empty(); });
    const MetricClassification cls = classify(b);
    attempt([&] { return entry.expected(cls); });
    attempt([&] {
      if (!cls.hermitian_symplectic) {
        try {
          torsion_form(b);
          return false;
        } catch (const NotHermitianSymplectic&) {
          return true;
        }
      }
      const TorsionReport r = torsion_form(b);
      const double tol = closedness_tolerance(h);
      return r.residual_constraint <= tol && r.residual_closed <= tol && r.oracle_gap <= 1e-6;
    });
    text += fmt::format("{:<14}", entry.name);
    csv += entry.name;
    for (bool p : pass) {
      text += fmt::format(" {:>10}", p ? "PASS" : "FAIL");
      csv += p ? ",PASS" : ",FAIL";
      all_pass = all_pass && p;
    }
    text += "\n";
    csv += "\n";
  }
  const auto header = header_for("selftest", opt, fnv1a(std::string(kFlatTorus) + kIwasawa + kSpectralTorus),
                                 {{"closedness_rel_tol", format_real(1e-8)},
                                  {"identity_tol", format_real(1e-12)},
                                  {"star_tol", format_real(1e-10)},
                                  {"oracle_rel_tol", format_real(1e-6)}});
  return {"selftest", header_text(header) + text + fmt::format("result={}\n", all_pass ? "PASS" : "FAIL"), csv};
}

void write_outputs(const Options& opt, const Output& o, std::ostream& out) {
  out << o.text;
  if (opt.out_dir.empty()) return;
  std::filesystem::create_directories(opt.out_dir);
  const std::filesystem::path dir(opt.out_dir);
  auto dump = [](const std::filesystem::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError(fmt::format("cannot write {}", p.string()));
    f << body;
  };
  dump(dir / (o.name + ".txt"), o.text);
  if (!o.csv.empty()) dump(dir / (o.name + ".csv"), o.csv);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hermitian-symplectic torsion, energy and Kahler diagnostics on model complexes", "hsflow"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  Options opt;
  app.add_option("--model", opt.model, "Model or family file");
  app.add_option("--out", opt.out_dir, "Directory for the .txt and .csv reports");
  app.add_option("--tol", opt.tol, "Closedness tolerance (relative) or flow gradient tolerance");
  app.add_option("--seed", opt.seed, "Seed for positivity sampling");
  app.add_option("--max-iters", opt.max_iters, "Flow iteration cap")->check(CLI::NonNegativeNumber);
  app.add_option("--margin-floor", opt.margin_floor, "Flow positivity floor as a fraction of the initial margin");
  app.add_option("--bidegree", opt.bidegrees, "Bidegree p,q (repeatable)")->allow_extra_args(false);
  app.add_option("--t-samples", opt.t_samples, "Comma-separated parameter samples for family");
  app.add_flag("--preflow", opt.preflow, "Flow every family member with t != 0 before measuring");

  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, desc] : std::vector<std::pair<const char*, const char*>>{
           {"classify", "Kahler, SKT, balanced, strongly Gauduchon and Hermitian-symplectic tests"},
           {"torsion", "(2,0)-torsion form of a Hermitian-symplectic metric"},
           {"energy", "Energy, differential and positivity at the model metric"},
           {"flow", "Gradient descent of the energy in the Aeppli class"},
           {"kahler", "Minimal-norm Kahler metric in the Aeppli class"},
           {"family", "Diagnostics along a parameter family"},
           {"selftest", "Run the built-in model suite"}}) {
    subs[name] = app.add_subcommand(name, desc);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 1;
  }

  try {
    if (subs["selftest"]->parsed()) {
      bool all_pass = true;
      write_outputs(opt, cmd_selftest(opt, all_pass), out);
      return all_pass ? 0 : 2;
    }
    if (opt.model.empty()) throw InputError("--model is required");
    Output o;
    if (subs["classify"]->parsed()) o = cmd_classify(opt);
    if (subs["torsion"]->parsed()) o = cmd_torsion(opt);
    if (subs["energy"]->parsed()) o = cmd_energy(opt);
    if (subs["flow"]->parsed()) o = cmd_flow(opt);
    if (subs["kahler"]->parsed()) o = cmd_kahler(opt);
    if (subs["family"]->parsed()) o = cmd_family(opt);
    write_outputs(opt, o, out);
    return 0;
  } catch (const NotHermitianSymplectic& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << " (residual " << format_real(e.residual()) << ")\n";
    return 1;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalContractError& e) {
    err << "numerical contract violated: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hsflow::cli
