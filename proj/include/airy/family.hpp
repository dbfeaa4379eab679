#pragma once

#include "airy/weyl.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace airy {

inline std::string monomial_to_string(const WeylMonomial& m) {
  std::ostringstream os;
  if (m.x.exps.empty() && m.d.exps.empty()) return "1";
  for (auto& [i, e] : m.x.exps) {
    os << "x" << i;
    if (e > 1) os << "^" << e;
  }
  for (auto& [i, e] : m.d.exps) {
    os << "d" << i;
    if (e > 1) os << "^" << e;
  }
  return os.str();
}

// Grading facts about a generator family used for boundedness certificates
// and exactness bookkeeping of truncated computations.
//
// FiniteExact: a finite family, materialized completely.
// Band: generators indexed b = rank*k + i whose hbar-order-rho monomials all
// have mode index sum in [rank*(k+1-rho), rank*(k+1-rho) + (2*rank - rho)].
struct WeightMetadata {
  enum class Kind { FiniteExact, Band };
  Kind kind = Kind::FiniteExact;
  long band_rank = 0;

  long band_min_index_sum(long gen_index, int rho) const {
    long k = gen_index / band_rank;
    return band_rank * (k + 1 - rho);
  }
  long band_max_index_sum(long gen_index, int rho) const {
    return band_min_index_sum(gen_index, rho) + (2 * band_rank - rho);
  }
};

// Indexed bounded collection of operators sharing one algebra configuration
// and truncation. Generators are produced lazily and cached; the check window
// bounds the indices examined by reports, while lazy_max bounds what the
// accessor may be asked for.
class GeneratorFamily {
 public:
  static GeneratorFamily finite(AlgebraConfigPtr config, int truncation,
                                std::vector<long> indices,
                                std::vector<WeylOperator> generators) {
    GeneratorFamily f;
    f.config_ = std::move(config);
    f.trunc_ = truncation;
    f.indices_ = std::move(indices);
    if (f.indices_.size() != generators.size())
      throw error("generator list does not match index list");
    f.check_max_ = -1;
    for (std::size_t i = 0; i < f.indices_.size(); ++i) {
      f.state_->cache[f.indices_[i]] = std::move(generators[i]);
      f.check_max_ = std::max(f.check_max_, f.indices_[i]);
    }
    f.lazy_max_ = f.check_max_;
    f.metadata_.kind = WeightMetadata::Kind::FiniteExact;
    f.finite_ = true;
    return f;
  }

  static GeneratorFamily pattern(AlgebraConfigPtr config, int truncation, long check_max,
                                 long lazy_max, std::function<WeylOperator(long)> make,
                                 std::optional<WeightMetadata> metadata) {
    GeneratorFamily f;
    f.config_ = std::move(config);
    f.trunc_ = truncation;
    f.check_max_ = check_max;
    f.lazy_max_ = lazy_max;
    f.state_->make = std::move(make);
    if (metadata) f.metadata_ = *metadata;
    f.has_metadata_ = metadata.has_value();
    f.finite_ = false;
    return f;
  }

  const AlgebraConfigPtr& config() const { return config_; }
  int truncation() const { return trunc_; }
  bool finite() const { return finite_; }
  bool has_metadata() const { return has_metadata_ || finite_; }
  const WeightMetadata& metadata() const { return metadata_; }
  long check_max_index() const { return check_max_; }
  long lazy_max_index() const { return lazy_max_; }

  std::vector<long> check_indices() const {
    if (finite_) return indices_;
    std::vector<long> ix;
    for (long i = 0; i <= check_max_; ++i) ix.push_back(i);
    return ix;
  }

  const WeylOperator& generator(long i) const {
    {
      std::lock_guard<std::mutex> lock(state_->mutex);
      auto it = state_->cache.find(i);
      if (it != state_->cache.end()) return it->second;
      if (finite_ || i < 0 || i > lazy_max_)
        throw window_overflow_error("generator index " + std::to_string(i) +
                                    " outside family window");
    }
    WeylOperator g = state_->make(i);
    std::lock_guard<std::mutex> lock(state_->mutex);
    auto [it, inserted] = state_->cache.try_emplace(i, std::move(g));
    return it->second;
  }

 private:
  struct State {
    std::mutex mutex;
    std::map<long, WeylOperator> cache;
    std::function<WeylOperator(long)> make;
  };

  AlgebraConfigPtr config_;
  int trunc_ = 0;
  bool finite_ = true;
  bool has_metadata_ = false;
  long check_max_ = -1;
  long lazy_max_ = -1;
  std::vector<long> indices_;
  WeightMetadata metadata_;
  std::shared_ptr<State> state_ = std::make_shared<State>();
};

struct BoundednessReport {
  bool pass = false;
  std::string detail;
  // signature description -> generator indices containing it (check window)
  std::vector<std::pair<std::string, std::vector<long>>> witnesses;
};

// Checks that each monomial signature occurring in the check window lies in
// finitely many generators, and that the weight grading certifies finiteness
// beyond the window. Finite families pass trivially; pattern families need
// band metadata.
inline BoundednessReport validate_bounded(const GeneratorFamily& F) {
  BoundednessReport report;
  std::map<std::pair<int, WeylMonomial>, std::vector<long>> occurrence;
  for (long i : F.check_indices()) {
    const WeylOperator& g = F.generator(i);
    for (auto& [n, terms] : g.orders())
      for (auto& [m, c] : terms) occurrence[{n, m}].push_back(i);
  }
  auto describe = [](int n, const WeylMonomial& m) {
    return "hbar^" + std::to_string(n) + " " + monomial_to_string(m);
  };

  if (F.finite()) {
    report.pass = true;
    report.detail = "finite index set; boundedness holds trivially";
    return report;
  }
  if (!F.has_metadata() || F.metadata().kind != WeightMetadata::Kind::Band ||
      F.metadata().band_rank <= 0) {
    report.pass = false;
    report.detail = "no weight-grading certificate for an infinite family";
    std::size_t worst = 0;
    for (auto& [sig, gens] : occurrence)
      if (gens.size() > worst) worst = gens.size();
    for (auto& [sig, gens] : occurrence)
      if (gens.size() == worst)
        report.witnesses.push_back({describe(sig.first, sig.second), gens});
    return report;
  }

  const WeightMetadata& md = F.metadata();
  for (auto& [sig, gens] : occurrence) {
    long is = sig.second.index_sum();
    for (long i : gens) {
      if (is < md.band_min_index_sum(i, sig.first) ||
          is > md.band_max_index_sum(i, sig.first)) {
        report.pass = false;
        report.detail = "declared weight band violated by materialized term";
        report.witnesses.push_back({describe(sig.first, sig.second), {i}});
        return report;
      }
    }
  }
  report.pass = true;
  report.detail =
      "weight band certifies each signature occurs only in generators with "
      "rank*(k+1-rho) <= index sum";
  std::size_t shown = 0;
  for (auto& [sig, gens] : occurrence) {
    if (shown++ >= 3) break;
    report.witnesses.push_back({describe(sig.first, sig.second), gens});
  }
  return report;
}

// Largest generator index that can contain a monomial with the given index
// sum at the given hbar order, per the weight band.
inline long weight_window_bound(const WeightMetadata& md, long index_sum, int rho) {
  if (md.kind != WeightMetadata::Kind::Band || md.band_rank <= 0)
    throw error("weight certificate requires band metadata");
  long n = md.band_rank;
  // n*(k+1-rho) <= index_sum  =>  k <= index_sum/n + rho - 1
  long k;
  if (index_sum >= 0) k = index_sum / n + rho - 1;
  else k = -((-index_sum + n - 1) / n) + rho - 1;
  return n * k + n - 1;
}

}  // namespace airy
