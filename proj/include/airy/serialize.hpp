#pragma once

#include "airy/airy_ideal.hpp"
#include "airy/heisenberg.hpp"
#include "airy/weyl.hpp"
#include "airy/wsp.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace airy {

using json = nlohmann::ordered_json;

inline json exponents_to_json(const Monomial& m) {
  json a = json::array();
  for (auto& [i, e] : m.exps) a.push_back(json::array({i, e}));
  return a;
}

inline Monomial exponents_from_json(const json& a) {
  Monomial m;
  for (auto& pair : a) m.exps.push_back({pair.at(0).get<long>(), pair.at(1).get<long>()});
  return m;
}

// Canonical form: sorted by (hbar order, monomial key), which is the natural
// iteration order of the term maps.
inline json to_json(const WeylOperator& op) {
  json terms = json::array();
  for (auto& [n, level] : op.orders())
    for (auto& [m, c] : level)
      terms.push_back(json{{"hbar", n},
                           {"x", exponents_to_json(m.x)},
                           {"d", exponents_to_json(m.d)},
                           {"coeff", rational_to_string(c)}});
  return terms;
}

inline WeylOperator weyl_from_json(const json& terms, const AlgebraConfigPtr& cfg,
                                   int trunc) {
  WeylOperator op(cfg, trunc);
  for (auto& t : terms) {
    WeylMonomial m{exponents_from_json(t.at("x")), exponents_from_json(t.at("d"))};
    op.add_term(t.at("hbar").get<int>(), m, rational_from_string(t.at("coeff")));
  }
  return op;
}

inline json to_json(const ModePolynomial& p) {
  json terms = json::array();
  for (auto& [n, level] : p.orders())
    for (auto& [m, c] : level) {
      json modes = json::array();
      std::size_t i = 0;
      while (i < m.modes.size() && m.modes[i] <= 0) modes.push_back(m.modes[i++]);
      for (long t = 0; t < m.tilde; ++t) modes.push_back("~0");
      while (i < m.modes.size()) modes.push_back(m.modes[i++]);
      terms.push_back(
          json{{"hbar", n}, {"modes", modes}, {"coeff", rational_to_string(c)}});
    }
  return terms;
}

inline ModePolynomial mode_poly_from_json(const json& terms, ModeAlgebraConfig cfg,
                                          int trunc) {
  ModePolynomial p(cfg, trunc);
  for (auto& t : terms) {
    ModeMonomial m;
    for (auto& entry : t.at("modes")) {
      if (entry.is_string()) ++m.tilde;
      else m.modes.push_back(entry.get<long>());
    }
    std::sort(m.modes.begin(), m.modes.end());
    p.add_term(t.at("hbar").get<int>(), m, rational_from_string(t.at("coeff")));
  }
  return p;
}

inline json to_json(const AlgebraConfig& cfg) {
  json j;
  j["max_index"] = cfg.max_index;
  j["variable_only"] = cfg.variable_only;
  j["derivative_only"] = cfg.derivative_only;
  return j;
}

inline AlgebraConfigPtr config_from_json(const json& j) {
  std::set<long> vo, dn;
  if (j.contains("variable_only"))
    for (auto& v : j.at("variable_only")) vo.insert(v.get<long>());
  if (j.contains("derivative_only"))
    for (auto& v : j.at("derivative_only")) dn.insert(v.get<long>());
  return make_config(j.at("max_index").get<long>(), std::move(vo), std::move(dn));
}

inline json to_json(const GeneratorFamily& F) {
  json j;
  j["config"] = to_json(*F.config());
  j["truncation"] = F.truncation();
  json gens = json::array();
  for (long i : F.check_indices())
    gens.push_back(json{{"index", i}, {"terms", to_json(F.generator(i))}});
  j["generators"] = gens;
  return j;
}

inline GeneratorFamily family_from_json(const json& j) {
  AlgebraConfigPtr cfg = config_from_json(j.at("config"));
  int trunc = j.at("truncation").get<int>();
  std::vector<long> indices;
  std::vector<WeylOperator> gens;
  for (auto& g : j.at("generators")) {
    indices.push_back(g.at("index").get<long>());
    gens.push_back(weyl_from_json(g.at("terms"), cfg, trunc));
  }
  return GeneratorFamily::finite(cfg, trunc, std::move(indices), std::move(gens));
}

inline json to_json(const PolySeries& s) {
  json arr = json::array();
  for (auto& [j, p] : s.orders())
    for (auto& [m, c] : p.terms())
      arr.push_back(json{{"hbar", j},
                         {"x", exponents_to_json(m)},
                         {"coeff", rational_to_string(c)}});
  return arr;
}

inline json to_json(const Transvection& t) {
  json j;
  json q = json::array();
  for (auto& [n, p] : t.q) {
    json terms = json::array();
    for (auto& [m, c] : p.terms())
      terms.push_back(json{{"x", exponents_to_json(m)}, {"coeff", rational_to_string(c)}});
    q.push_back(json{{"n", n}, {"q", terms}});
  }
  j["q"] = q;
  json s = json::array();
  for (auto& [n, p] : t.s_linear) {
    json terms = json::array();
    for (auto& [m, c] : p.terms())
      terms.push_back(json{{"x", exponents_to_json(m)}, {"coeff", rational_to_string(c)}});
    s.push_back(json{{"n", n}, {"s", terms}});
  }
  j["s_linear"] = s;
  j["stable"] = t.stable();
  return j;
}

inline json to_json(const FgnTable& table) {
  json j;
  j["truncation"] = table.truncation;
  json entries = json::array();
  for (auto& [key, e] : table.entries)
    entries.push_back(json{{"two_g", key.two_g},
                           {"n", key.n},
                           {"indices", key.indices},
                           {"value", rational_to_string(e.value)},
                           {"exact", e.exact}});
  j["entries"] = entries;
  return j;
}

inline std::string to_csv(const FgnTable& table) {
  std::ostringstream os;
  os << "two_g,n,indices,value,exact\n";
  for (auto& [key, e] : table.entries) {
    os << key.two_g << "," << key.n << ",\"";
    for (std::size_t i = 0; i < key.indices.size(); ++i) {
      if (i) os << " ";
      os << key.indices[i];
    }
    os << "\"," << rational_to_string(e.value) << "," << (e.exact ? "true" : "false")
       << "\n";
  }
  return os.str();
}

inline json to_json(const AiryReport& r) {
  json j;
  j["verdict"] = r.airy_at_truncation ? "airy-at-truncation" : "rejected";
  json b;
  b["pass"] = r.boundedness.pass;
  b["detail"] = r.boundedness.detail;
  json w = json::array();
  for (auto& [sig, gens] : r.boundedness.witnesses)
    w.push_back(json{{"signature", sig}, {"generators", gens}});
  b["witnesses"] = w;
  j["boundedness"] = b;
  json f;
  f["pass"] = r.form_ok;
  json fv = json::array();
  for (auto& [i, msg] : r.form_violations)
    fv.push_back(json{{"generator", i}, {"problem", msg}});
  f["violations"] = fv;
  j["form"] = f;
  j["normalization"] = json{{"pass", r.normalization_ok}, {"detail", r.normalization_detail}};
  json c;
  c["pass"] = r.commutator_ok;
  if (r.witness)
    c["witness"] = json{{"i", r.witness->i},
                        {"j", r.witness->j},
                        {"remainder", to_json(r.witness->remainder)}};
  j["commutator"] = c;
  if (r.hbar_degree)
    j["hbar_degree"] = json{{"value", *r.hbar_degree},
                            {"within_window_only", r.hbar_degree_within_window_only}};
  else
    j["hbar_degree"] = nullptr;
  return j;
}

// ---------------------------------------------------------------------------
// Generator-mode cache, keyed by (rank, order, k_max, var_max). Hits must be
// bit-identical to recomputation, which the canonical serialization gives.

class WspModeCache {
 public:
  WspModeCache(std::string dir, const wsp::TwistConfig& cfg) : cfg_(cfg) {
    path_ = dir + "/wsp-modes-N" + std::to_string(cfg.rank) + "-K" +
            std::to_string(cfg.order) + "-k" + std::to_string(cfg.k_max) + "-v" +
            std::to_string(cfg.var_max) + ".json";
    std::ifstream in(path_);
    if (in) {
      json j = json::parse(in, nullptr, false);
      if (!j.is_discarded() && j.is_object() && j.contains("modes")) {
        ModeAlgebraConfig mc{cfg.rank, ZeroModeScenario::ZeroModeAsDerivative};
        for (auto& entry : j.at("modes")) {
          long m = entry.at("m").get<long>();
          long k = entry.at("k").get<long>();
          store_[{m, k}] = mode_poly_from_json(entry.at("terms"), mc, cfg.order);
        }
      }
    }
  }

  wsp::ModeProvider wrap(wsp::ModeProvider base) {
    return [this, base](long m, long k) {
      {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = store_.find({m, k});
        if (it != store_.end()) return it->second;
      }
      ModePolynomial p = base(m, k);
      std::lock_guard<std::mutex> lock(mutex_);
      auto [it, inserted] = store_.try_emplace({m, k}, std::move(p));
      if (inserted) dirty_ = true;
      return it->second;
    };
  }

  void flush() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!dirty_) return;
    json j;
    j["rank"] = cfg_.rank;
    j["order"] = cfg_.order;
    j["k_max"] = cfg_.k_max;
    j["var_max"] = cfg_.var_max;
    json modes = json::array();
    for (auto& [key, p] : store_)
      modes.push_back(json{{"m", key.first}, {"k", key.second}, {"terms", to_json(p)}});
    j["modes"] = modes;
    std::ofstream out(path_);
    out << j.dump(1) << "\n";
    dirty_ = false;
  }

 private:
  wsp::TwistConfig cfg_;
  std::string path_;
  std::mutex mutex_;
  std::map<std::pair<long, long>, ModePolynomial> store_;
  bool dirty_ = false;
};

}  // namespace airy
