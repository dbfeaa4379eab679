#include "airy/serialize.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

using namespace airy;

namespace {

struct Options {
  long rank = 3;
  int order = 4;
  long kmax = 2;
  long varmax = -1;
  std::string scenario = "rho";
  std::string format = "json";
  std::string cache_dir;
  std::string family_file;
  std::string operator_file;
};

wsp::TwistConfig twist_config(const Options& o) {
  wsp::TwistConfig cfg;
  cfg.rank = o.rank;
  cfg.order = o.order;
  cfg.k_max = o.kmax;
  cfg.var_max = o.varmax >= 0 ? o.varmax : 4 * o.rank;
  cfg.validate();
  if (o.scenario != "rho")
    throw error("the symplectic family requires the zero mode to act as a derivative "
                "(--scenario rho)");
  return cfg;
}

std::string cache_dir_for(const Options& o) {
  if (!o.cache_dir.empty()) return o.cache_dir;
  const char* env = std::getenv("AIRY_CACHE_DIR");
  return env ? std::string(env) : std::string();
}

struct BuiltFamily {
  wsp::FamilyBuild build;
  std::shared_ptr<WspModeCache> cache;
};

BuiltFamily build_wsp(const Options& o) {
  wsp::TwistConfig cfg = twist_config(o);
  std::string dir = cache_dir_for(o);
  if (dir.empty()) return {wsp::build_family(cfg), nullptr};
  auto cache = std::make_shared<WspModeCache>(dir, cfg);
  auto base = wsp::build_family(cfg);
  auto fb = wsp::build_family(cfg, cache->wrap(base.modes));
  return {std::move(fb), cache};
}

json family_summary(const wsp::FamilyBuild& fb) {
  json j;
  j["rank"] = fb.cfg.rank;
  j["order"] = fb.cfg.order;
  j["k_max"] = fb.cfg.k_max;
  j["var_max"] = fb.cfg.var_max;
  return j;
}

int run_ck(const Options& o) {
  auto ck = wsp::taylor_coefficients(o.rank, o.order);
  if (o.format == "csv") {
    std::cout << "k,value\n";
    for (std::size_t k = 0; k < ck.size(); ++k)
      std::cout << k << "," << rational_to_string(ck[k]) << "\n";
    return 0;
  }
  json j;
  j["rank"] = o.rank;
  json arr = json::array();
  for (std::size_t k = 0; k < ck.size(); ++k)
    arr.push_back(json{{"k", k}, {"value", rational_to_string(ck[k])}});
  j["coefficients"] = arr;
  std::cout << j.dump(1) << "\n";
  return 0;
}

int run_generators(const Options& o) {
  auto bf = build_wsp(o);
  json j = family_summary(bf.build);
  json gens = json::array();
  for (long k = 0; k <= bf.build.cfg.k_max; ++k)
    for (long m = 2; m <= 2 * bf.build.cfg.rank; m += 2) {
      long index = bf.build.cfg.rank * k + m / 2 - 1;
      gens.push_back(json{{"m", m},
                          {"k", k},
                          {"index", index},
                          {"terms", to_json(bf.build.modes(m, k))}});
    }
  j["generators"] = gens;
  std::cout << j.dump(1) << "\n";
  if (bf.cache) bf.cache->flush();
  return 0;
}

int run_linear_parts(const Options& o) {
  auto bf = build_wsp(o);
  auto lp = linear_part(bf.build.family);
  json j = family_summary(bf.build);
  json rows = json::array();
  for (auto& [i, row] : lp.M) {
    json entries = json::array();
    for (auto& [a, c] : row) entries.push_back(json::array({a, rational_to_string(c)}));
    rows.push_back(json{{"index", i},
                        {"m", 2 * (i % bf.build.cfg.rank + 1)},
                        {"k", i / bf.build.cfg.rank},
                        {"entries", entries}});
  }
  j["rows"] = rows;
  j["shape_ok"] = lp.shape_ok;
  std::cout << j.dump(1) << "\n";
  if (bf.cache) bf.cache->flush();
  return 0;
}

GeneratorFamily load_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open family file " + path);
  json j = json::parse(in);
  return family_from_json(j);
}

int run_check(const Options& o) {
  AiryReport report;
  std::shared_ptr<WspModeCache> cache;
  if (!o.family_file.empty()) {
    report = check_airy(load_family(o.family_file));
  } else {
    auto bf = build_wsp(o);
    cache = bf.cache;
    auto ver = wsp::verify_wsp_airy(bf.build);
    report = ver.report;
    json j = to_json(report);
    j["zero_mode_tails"] =
        json{{"nonzero", ver.zero_mode_tail_nonzero},
             {"orders", ver.zero_mode_tail_orders}};
    std::cout << j.dump(1) << "\n";
    if (cache) cache->flush();
    return report.airy_at_truncation ? 0 : 2;
  }
  std::cout << to_json(report).dump(1) << "\n";
  return report.airy_at_truncation ? 0 : 2;
}

int run_normal_form(const Options& o) {
  json j;
  std::shared_ptr<WspModeCache> cache;
  std::optional<NormalizedFamily> nf;
  long show_max = 0;
  if (!o.family_file.empty()) {
    GeneratorFamily fam = load_family(o.family_file);
    nf = normalize(fam);
    show_max = fam.config()->max_index;
  } else {
    auto bf = build_wsp(o);
    cache = bf.cache;
    j = family_summary(bf.build);
    nf = normalize(bf.build.family, bf.build.cfg.var_max);
    show_max = bf.build.cfg.var_max;
  }
  json gens = json::array();
  for (long a : nf->harvest_indices()) {
    if (a > show_max) continue;
    gens.push_back(json{{"index", a}, {"terms", to_json(nf->generator(a))}});
  }
  j["normalized_generators"] = gens;
  auto ex = extract_transvection(*nf);
  j["transvection"] = to_json(ex.t);
  std::cout << j.dump(1) << "\n";
  if (cache) cache->flush();
  return 0;
}

int run_partition(const Options& o) {
  FgnTable table;
  std::shared_ptr<WspModeCache> cache;
  json j;
  if (!o.family_file.empty()) {
    GeneratorFamily fam = load_family(o.family_file);
    table = solve_partition(normalize(fam)).table;
  } else {
    auto bf = build_wsp(o);
    cache = bf.cache;
    j = family_summary(bf.build);
    table = wsp::partition_wsp(bf.build).table;
  }
  if (o.format == "csv") {
    std::cout << to_csv(table);
  } else {
    j["partition"] = to_json(table);
    std::cout << j.dump(1) << "\n";
  }
  if (cache) cache->flush();
  return 0;
}

int run_reduce(const Options& o) {
  if (o.family_file.empty()) throw error("reduce requires --family");
  if (o.operator_file.empty()) throw error("reduce requires --operator");
  GeneratorFamily fam = load_family(o.family_file);
  std::ifstream in(o.operator_file);
  if (!in) throw error("cannot open operator file " + o.operator_file);
  json oj = json::parse(in);
  WeylOperator op = weyl_from_json(oj.is_object() && oj.contains("terms") ? oj.at("terms") : oj,
                                   fam.config(), fam.truncation());
  auto nf = normalize(fam);
  auto rr = reduce_mod_ideal(op, nf, fam.truncation());
  json j;
  j["remainder"] = to_json(rr.remainder);
  j["substitutions"] = rr.substitutions;
  j["processed_orders"] = rr.processed_orders;
  std::cout << j.dump(1) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact computations with Airy ideals in the Rees Weyl algebra"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd, bool family_allowed) {
    cmd->add_option("--rank", o.rank, "free boson rank N");
    cmd->add_option("--order", o.order, "hbar truncation order K");
    cmd->add_option("--kmax", o.kmax, "largest generator mode index");
    cmd->add_option("--varmax", o.varmax, "variable index window (default 4N)");
    cmd->add_option("--scenario", o.scenario, "zero mode interpretation")
        ->check(CLI::IsMember({"rho", "kappa"}));
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--cache-dir", o.cache_dir,
                    "generator cache directory (default $AIRY_CACHE_DIR)");
    if (family_allowed)
      cmd->add_option("--family", o.family_file, "user-supplied family file");
  };

  auto* ck = app.add_subcommand("ck", "Taylor coefficients of the twist factor");
  add_common(ck, false);
  auto* gens = app.add_subcommand("generators", "shifted generator modes");
  add_common(gens, false);
  auto* lin = app.add_subcommand("linear-parts", "hbar^1 rows of the generators");
  add_common(lin, false);
  auto* chk = app.add_subcommand("check", "run the Airy ideal conditions");
  add_common(chk, true);
  auto* nor = app.add_subcommand("normal-form", "normalized generators and transvection");
  add_common(nor, true);
  auto* par = app.add_subcommand("partition", "partition function coefficients");
  add_common(par, true);
  auto* red = app.add_subcommand("reduce", "reduce an operator modulo a family ideal");
  add_common(red, true);
  red->add_option("--operator", o.operator_file, "operator file to reduce");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ck->parsed()) {
      if (o.rank < 2) throw error("rank must be at least 2");
      return run_ck(o);
    }
    if (gens->parsed()) return run_generators(o);
    if (lin->parsed()) return run_linear_parts(o);
    if (chk->parsed()) return run_check(o);
    if (nor->parsed()) return run_normal_form(o);
    if (par->parsed()) return run_partition(o);
    if (red->parsed()) return run_reduce(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
