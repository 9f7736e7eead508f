#include <clocale>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "snakelab/continuum.hpp"
#include "snakelab/displacement.hpp"
#include "snakelab/encodings.hpp"
#include "snakelab/exact.hpp"
#include "snakelab/offspring.hpp"
#include "snakelab/rng.hpp"
#include "snakelab/sample.hpp"
#include "snakelab/spatial.hpp"
#include "snakelab/stats.hpp"

namespace {

using nlohmann::json;
using namespace snakelab;

struct Settings {
  std::string offspring = "binary";
  std::string pmf;  // CSV path; takes precedence over the builtin name
  std::string displacement = "spread";
  std::int64_t n = 20000;
  std::int64_t reps = 2000;
  int k = 2;
  std::uint64_t seed = 1;
  int seeds = 3;
  double pFloor = 1e-3;
  double eta = 0.0;
  double delta = 0.02;
  double gamma = 1.0;
  std::vector<double> gammaGrid = {1.5, 1.8, 2.1, 2.4, 2.7, 3.0};
  std::string out;
  int workers = 0;  // 0 = available parallelism
};

json settings_json(const Settings& s) {
  json j;
  j["offspring"] = s.offspring;
  j["pmf"] = s.pmf;
  j["displacement"] = s.displacement;
  j["n"] = s.n;
  j["reps"] = s.reps;
  j["k"] = s.k;
  j["seed"] = s.seed;
  j["seeds"] = s.seeds;
  j["pFloor"] = s.pFloor;
  j["eta"] = s.eta;
  j["delta"] = s.delta;
  j["gamma"] = s.gamma;
  j["gammaGrid"] = s.gammaGrid;
  j["out"] = s.out;
  j["workers"] = s.workers;
  return j;
}

void apply_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + ex.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  static const std::set<std::string> known = {
      "offspring", "pmf",   "displacement", "n",     "reps",      "k",   "seed", "seeds",
      "pFloor",    "eta",   "delta",        "gamma", "gammaGrid", "out", "workers"};
  for (const auto& [key, val] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("config: unknown key \"" + key + "\"");
    try {
      if (key == "offspring") s.offspring = val.get<std::string>();
      else if (key == "pmf") s.pmf = val.get<std::string>();
      else if (key == "displacement") s.displacement = val.get<std::string>();
      else if (key == "n") s.n = val.get<std::int64_t>();
      else if (key == "reps") s.reps = val.get<std::int64_t>();
      else if (key == "k") s.k = val.get<int>();
      else if (key == "seed") s.seed = val.get<std::uint64_t>();
      else if (key == "seeds") s.seeds = val.get<int>();
      else if (key == "pFloor") s.pFloor = val.get<double>();
      else if (key == "eta") s.eta = val.get<double>();
      else if (key == "delta") s.delta = val.get<double>();
      else if (key == "gamma") s.gamma = val.get<double>();
      else if (key == "gammaGrid") s.gammaGrid = val.get<std::vector<double>>();
      else if (key == "out") s.out = val.get<std::string>();
      else if (key == "workers") s.workers = val.get<int>();
    } catch (const json::exception& ex) {
      throw std::invalid_argument("config: bad value for \"" + key + "\": " + ex.what());
    }
  }
}

std::vector<double> split_params(const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(tok, &used));
    if (used != tok.size()) throw std::invalid_argument("displacement: bad number \"" + tok + "\"");
  }
  return out;
}

OffspringLaw resolve_law(const Settings& s) {
  if (!s.pmf.empty()) return OffspringLaw::custom_from_csv(s.pmf);
  return OffspringLaw::by_name(s.offspring);
}

// kind[:p1,p2,...]; numeric parameters default to the law's canonical scales.
DisplacementModel resolve_model(const Settings& s, const OffspringLaw& law) {
  std::string kind = s.displacement;
  std::vector<double> par;
  if (auto colon = kind.find(':'); colon != std::string::npos) {
    par = split_params(kind.substr(colon + 1));
    kind = kind.substr(0, colon);
  }
  auto want = [&](std::size_t lo, std::size_t hi) {
    if (par.size() < lo || par.size() > hi)
      throw std::invalid_argument("displacement: wrong parameter count for \"" + kind + "\"");
  };
  if (kind == "spread") {
    want(0, 1);
    return DisplacementModel::deterministic_spread(par.empty() ? std::sqrt(law.sigma2()) : par[0]);
  }
  if (kind == "looptree") {
    want(0, 1);
    return DisplacementModel::looptree(par.empty() ? looptree_cstar(law) : par[0]);
  }
  if (kind == "zero") {
    want(0, 0);
    return DisplacementModel::iid_law(IidLaw::two_atoms(0.0));
  }
  if (kind == "two_atoms") {
    want(1, 1);
    return DisplacementModel::iid_law(IidLaw::two_atoms(par[0]));
  }
  if (kind == "heavy") {
    want(4, 4);
    return DisplacementModel::iid_law(IidLaw::heavy(par[0], par[1], par[2], par[3]));
  }
  throw std::invalid_argument("displacement: unknown kind \"" + kind + "\" (expected "
                              "spread[:sigma], looptree[:c], zero, two_atoms:v, "
                              "heavy:q,aPlus,aMinus,y0)");
}

Experiment resolve_experiment(const Settings& s) {
  const auto law = resolve_law(s);
  Experiment e(law, resolve_model(s, law));
  e.n = s.n;
  e.reps = s.reps;
  e.k = s.k;
  e.seed = s.seed;
  e.seeds = s.seeds;
  e.pFloor = s.pFloor;
  e.workers = s.workers;
  e.delta = s.delta;
  e.eta = s.eta;
  return e;
}

void emit(const Settings& s, const std::string& text) {
  if (s.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream f(s.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + s.out);
  f << text;
}

std::string sibling_csv_path(const std::string& jsonPath) {
  const std::string suffix = ".json";
  if (jsonPath.size() > suffix.size() &&
      jsonPath.compare(jsonPath.size() - suffix.size(), suffix.size(), suffix) == 0)
    return jsonPath.substr(0, jsonPath.size() - suffix.size()) + ".samples.csv";
  return jsonPath + ".samples.csv";
}

int run_sample_tree(const Settings& s) {
  const auto law = resolve_law(s);
  Rng rng(s.seed, 9001);
  const auto t = sample_tree(law, s.n, rng);
  const auto enc = encode_all(t);
  std::string csv = "i,vertex,parent,w,h,hloop\n";
  char buf[160];
  for (std::int64_t i = 0; i <= s.n; ++i) {
    if (i < s.n) {
      const std::int32_t v = enc.order[std::size_t(i)];
      const std::int32_t p = v == t.root() ? 0 : t.parent(v);
      std::snprintf(buf, sizeof buf, "%lld,%d,%d,%lld,%d,%lld\n", static_cast<long long>(i), v, p,
                    static_cast<long long>(enc.W[std::size_t(i)]), enc.H[std::size_t(i)],
                    static_cast<long long>(enc.Hloop[std::size_t(i)]));
    } else {
      std::snprintf(buf, sizeof buf, "%lld,,,%lld,%d,%lld\n", static_cast<long long>(i),
                    static_cast<long long>(enc.W[std::size_t(i)]), enc.H[std::size_t(i)],
                    static_cast<long long>(enc.Hloop[std::size_t(i)]));
    }
    csv += buf;
  }
  emit(s, csv);
  return 0;
}

int run_snake(const Settings& s) {
  const auto law = resolve_law(s);
  const auto model = resolve_model(s, law);
  Rng rng(s.seed, 9002);
  const auto t = sample_tree(law, s.n, rng);
  const auto disp = sample_displacements(t, model, rng);
  const auto sp = make_spatial(t, disp);
  const auto enc = encode_all(sp);
  std::string csv = "i,vertex,parent,loc,w,h,hloop,r\n";
  char buf[224];
  for (std::int64_t i = 0; i <= s.n; ++i) {
    if (i < s.n) {
      const std::int32_t v = enc.order[std::size_t(i)];
      const std::int32_t p = v == sp.tree.root() ? 0 : sp.tree.parent(v);
      std::snprintf(buf, sizeof buf, "%lld,%d,%d,%.17g,%lld,%d,%lld,%.17g\n",
                    static_cast<long long>(i), v, p, sp.loc[std::size_t(v)],
                    static_cast<long long>(enc.W[std::size_t(i)]), enc.H[std::size_t(i)],
                    static_cast<long long>(enc.Hloop[std::size_t(i)]), enc.R[std::size_t(i)]);
    } else {
      std::snprintf(buf, sizeof buf, "%lld,,,,%lld,%d,%lld,%.17g\n", static_cast<long long>(i),
                    static_cast<long long>(enc.W[std::size_t(i)]), enc.H[std::size_t(i)],
                    static_cast<long long>(enc.Hloop[std::size_t(i)]), enc.R[std::size_t(i)]);
    }
    csv += buf;
  }
  emit(s, csv);
  return 0;
}

int run_verify(const Settings& s, const std::string& which) {
  const Experiment e = resolve_experiment(s);
  StatsReport rep;
  if (which == "main") {
    rep = verify_main_theorem(e);
  } else if (which == "luka") {
    rep = verify_cor_height_luka(e);
  } else if (which == "looptree") {
    rep = verify_looptree(e);
  } else if (which == "hairy") {
    if (e.model.kind != DispKind::iid || !e.model.iid.has_tail())
      throw std::invalid_argument(
          "verify hairy: needs an iid displacement with a Pareto tail (heavy:q,aPlus,aMinus,y0)");
    const auto spec =
        PiMeasureSpec::axes(e.model.iid.aPlus, e.model.iid.aMinus, e.model.iid.q);
    rep = verify_hairy(e, spec, s.gamma);
  } else {
    rep = tail_bound_diagnostic(e, s.gammaGrid);
  }
  const std::string js = rep.to_json() + "\n";
  if (s.out.empty()) {
    std::fwrite(js.data(), 1, js.size(), stdout);
  } else {
    emit(s, js);
    const std::string csvPath = sibling_csv_path(s.out);
    std::ofstream f(csvPath, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file " + csvPath);
    f << rep.samples_csv();
  }
  return rep.pass ? 0 : 1;
}

int run_oracle(const Settings& s) {
  std::vector<ExactLawReport> reports;
  reports.push_back(check_sb_order_law(DegreeSequence({2, 1, 0, 0})));
  reports.push_back(check_sb_order_law(DegreeSequence({3, 2, 1, 0, 0, 0, 0})));
  reports.push_back(check_sb_order_law(DegreeSequence({2, 2, 1, 1, 0, 0, 0})));
  reports.push_back(check_repeat_laws(DegreeSequence({2, 1, 0, 0})));
  reports.push_back(check_repeat_laws(DegreeSequence({3, 2, 1, 0, 0, 0, 0})));
  reports.push_back(check_repeat_laws(DegreeSequence({4, 2, 0, 0, 0, 0, 0})));
  reports.push_back(check_kemperman(OffspringLaw::binary(), 9));
  reports.push_back(check_kemperman(OffspringLaw::poisson1(), 8));
  reports.push_back(check_kemperman(OffspringLaw::geometric_half(), 8));
  reports.push_back(check_theta_identity(OffspringLaw::binary(), 9, 2));
  reports.push_back(check_theta_identity(OffspringLaw::poisson1(), 8, 2));
  reports.push_back(check_theta_identity(OffspringLaw::geometric_half(), 8, 2));
  {
    std::vector<std::int64_t> p1 = {2};
    std::vector<std::int64_t> p2 = {1, 2};
    reports.push_back(check_theta_general_identity(OffspringLaw::binary(), 7, p1, 2));
    reports.push_back(check_theta_general_identity(OffspringLaw::poisson1(), 6, p2, 1));
    reports.push_back(check_theta_general_identity(OffspringLaw::geometric_half(), 6, p1, 2));
  }
  reports.push_back(check_prune_graft());
  reports.push_back(sample_prune_graft(1000000, s.seed));

  json out;
  out["reports"] = json::array();
  bool pass = true;
  for (const auto& r : reports) {
    out["reports"].push_back(json::parse(r.to_json()));
    pass = pass && r.pass;
  }
  out["pass"] = pass;
  emit(s, out.dump(2) + "\n");
  return pass ? 0 : 1;
}

int run_figure(const Settings& s) {
  Experiment e = resolve_experiment(s);
  emit(s, figure_head(e));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  CLI::App app{"snakelab: discrete snakes, Brownian limits, and their finite-n laws"};
  app.require_subcommand(1);

  Settings flags;  // raw flag values; merged with config-file values after parse
  std::string configPath;

  std::vector<CLI::App*> leaves;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", configPath, "JSON settings file (flags win)");
    cmd->add_option("--offspring", flags.offspring, "builtin law: binary|poisson1|geometric_half");
    cmd->add_option("--pmf", flags.pmf, "CSV file with a custom offspring pmf");
    cmd->add_option("--displacement", flags.displacement,
                    "spread[:sigma] | looptree[:c] | zero | two_atoms:v | heavy:q,aP,aM,y0");
    cmd->add_option("--n", flags.n, "tree size");
    cmd->add_option("--reps", flags.reps, "replicates per side and seed");
    cmd->add_option("--k", flags.k, "joint rfdd dimension");
    cmd->add_option("--seed", flags.seed, "root seed (env SNAKELAB_SEED as fallback)");
    cmd->add_option("--seeds", flags.seeds, "independent reruns of every seeded test");
    cmd->add_option("--p-floor", flags.pFloor, "per-seed significance floor");
    cmd->add_option("--gamma-grid", flags.gammaGrid, "thresholds for the tail diagnostic")
        ->delimiter(',');
    cmd->add_option("--eta", flags.eta, "tail index eta = 4 - q");
    cmd->add_option("--delta", flags.delta, "truncation exponent offset");
    cmd->add_option("--gamma", flags.gamma, "jump threshold");
    cmd->add_option("--out", flags.out, "output path (default stdout)");
    cmd->add_option("--workers", flags.workers, "worker threads, 0 = all");
    leaves.push_back(cmd);
    return cmd;
  };

  add_common(app.add_subcommand("sample-tree", "sample a conditioned tree, emit encodings CSV"));
  add_common(app.add_subcommand("snake", "sample a spatial tree, emit locations + head CSV"));
  auto* verify = app.add_subcommand("verify", "run a statistical verifier");
  verify->require_subcommand(1);
  add_common(verify->add_subcommand("main", "joint height/label rfdd limits"));
  add_common(verify->add_subcommand("luka", "height-walk combination limit"));
  add_common(verify->add_subcommand("looptree", "looptree height limits"));
  add_common(verify->add_subcommand("hairy", "large-jump Poisson structure"));
  add_common(verify->add_subcommand("tail", "typical-band max envelope diagnostic"));
  add_common(app.add_subcommand("oracle", "exact small-n law suite"));
  add_common(app.add_subcommand("figure", "contour + rescaled head trace CSV"));

  CLI11_PARSE(app, argc, argv);

  try {
    Settings s;
    if (const char* env = std::getenv("SNAKELAB_SEED")) {
      try {
        s.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw std::invalid_argument("SNAKELAB_SEED is not an unsigned integer");
      }
    }
    if (!configPath.empty()) apply_config_file(s, configPath);

    CLI::App* leaf = nullptr;
    for (auto* cmd : leaves)
      if (cmd->parsed()) leaf = cmd;
    if (leaf == nullptr) throw std::logic_error("no subcommand parsed");
    auto flag_set = [&](const std::string& name) { return leaf->count(name) > 0; };
    if (flag_set("--offspring")) s.offspring = flags.offspring;
    if (flag_set("--pmf")) s.pmf = flags.pmf;
    if (flag_set("--displacement")) s.displacement = flags.displacement;
    if (flag_set("--n")) s.n = flags.n;
    if (flag_set("--reps")) s.reps = flags.reps;
    if (flag_set("--k")) s.k = flags.k;
    if (flag_set("--seed")) s.seed = flags.seed;
    if (flag_set("--seeds")) s.seeds = flags.seeds;
    if (flag_set("--p-floor")) s.pFloor = flags.pFloor;
    if (flag_set("--gamma-grid")) s.gammaGrid = flags.gammaGrid;
    if (flag_set("--eta")) s.eta = flags.eta;
    if (flag_set("--delta")) s.delta = flags.delta;
    if (flag_set("--gamma")) s.gamma = flags.gamma;
    if (flag_set("--out")) s.out = flags.out;
    if (flag_set("--workers")) s.workers = flags.workers;

    const std::string name = leaf->get_name();
    std::cerr << "resolved config: " << settings_json(s).dump() << "\n";

    if (name == "sample-tree") return run_sample_tree(s);
    if (name == "snake") return run_snake(s);
    if (name == "oracle") return run_oracle(s);
    if (name == "figure") return run_figure(s);
    return run_verify(s, name);  // verify main|luka|looptree|hairy|tail
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
}
