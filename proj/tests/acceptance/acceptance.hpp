#ifndef DOCO_ACCEPTANCE_HPP
#define DOCO_ACCEPTANCE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace doco_acceptance {

struct Options {
  bool quick = false;  // smaller experiment grid, used by `doco selftest --quick`
  int workers = 0;     // 0 = all hardware threads
  std::uint64_t master_seed = 20240611;
};

struct Result {
  std::string id;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

Result delay_bookkeeping(const Options& opts);
Result subset_equality(const Options& opts);
Result witness_sequences(const Options& opts);
Result stability_lemma(const Options& opts);
Result elliptical_potential(const Options& opts);
Result update_oracles(const Options& opts);
Result no_delay_reductions(const Options& opts);

/// The experiment-based criteria share their runs.
std::vector<Result> experiment_criteria(const Options& opts);

Result determinism(const Options& opts);

/// Runs every criterion, prints one PASS/FAIL line each, returns true if all pass.
bool run_all(std::ostream& out, const Options& opts);

}  // namespace doco_acceptance

#endif
