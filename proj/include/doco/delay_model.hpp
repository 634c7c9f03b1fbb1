#ifndef DOCO_DELAY_MODEL_HPP
#define DOCO_DELAY_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "doco/common.hpp"

namespace doco {

/// A delay law. Composite regimes (heavy_tail, geometric_alternating) hold
/// their inner regime by shared immutable pointer so the type stays a value.
struct DelayRegime {
  enum class Kind { fixed, uniform, heavy_tail, geometric_alternating, trace };

  Kind kind = Kind::fixed;
  std::int64_t fixed_delay = 0;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  // heavy_tail: probability of d_t = T - t. geometric_alternating: success
  // probability; std::nullopt means T^{-1/3}.
  std::optional<double> p;
  std::int64_t period = 30;
  std::shared_ptr<const DelayRegime> inner;
  std::vector<std::int64_t> trace;
  std::string trace_source;  // file the trace came from, empty if inline

  static DelayRegime fixed(std::int64_t d);
  static DelayRegime uniform(std::int64_t lo, std::int64_t hi);
  static DelayRegime heavy_tail(double p, DelayRegime base);
  static DelayRegime geometric_alternating(std::optional<double> p, std::int64_t period,
                                           DelayRegime fallback);
  static DelayRegime from_trace(std::vector<std::int64_t> delays);

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Canonical text form, accepted back by parse_delay_regime.
  std::string describe() const;
};

/// Parses `fixed(3)`, `uniform(0,5)`, `heavy_tail(0.1,uniform(0,5))`,
/// `geometric_alternating(auto,30,uniform(0,5))`, `trace(1 1 0)` and
/// `trace(@path/to/schedule.txt)`.
DelayRegime parse_delay_regime(std::string_view text);

struct DelayRegimeSpec {
  DelayRegime regime;
  std::uint64_t seed = 0;
};

class DelaySchedule {
 public:
  DelaySchedule() = default;
  /// Throws ConfigError if horizon < 1, sizes mismatch or a delay is negative.
  DelaySchedule(Round horizon, std::vector<std::int64_t> delays);

  Round horizon() const { return horizon_; }
  std::span<const std::int64_t> delays() const { return delays_; }
  /// d_t for 1 <= t <= T.
  std::int64_t delay(Round t) const;
  /// t + d_t <= T for every t.
  bool is_truncated() const;

  bool operator==(const DelaySchedule&) const = default;

 private:
  Round horizon_ = 0;
  std::vector<std::int64_t> delays_;
};

struct DelayStats {
  std::int64_t sigma_max = 0;
  std::int64_t d_max = 0;
  std::int64_t d_tot = 0;
  /// perceived_dmax[t] = d_max^{<=t} for t = 1..T; entry 0 is 0.
  std::vector<std::int64_t> perceived_dmax;
};

/// Draws T delays deterministically from spec.seed. Not truncated.
DelaySchedule build_schedule(const DelayRegimeSpec& spec, Round horizon);

/// d_t <- min(d_t, T - t). Idempotent.
DelaySchedule truncate(const DelaySchedule& s);

/// truncate(build_schedule(spec, T)).
DelaySchedule realize_schedule(const DelayRegimeSpec& spec, Round horizon);

/// Origins whose feedback arrives at the end of round t, ascending
/// (o_{t+1} \ o_t). Requires a truncated schedule and 1 <= t <= T.
std::vector<Round> arrivals_at(const DelaySchedule& s, Round t);

/// m_t, ascending, for 1 <= t <= T + 1.
std::vector<Round> missing_at(const DelaySchedule& s, Round t);

/// Requires a truncated schedule.
DelayStats stats(const DelaySchedule& s);

/// Arrival buckets for a truncated schedule: bucket(t) lists the origins
/// arriving at the end of round t. Built once in O(T).
class ArrivalIndex {
 public:
  explicit ArrivalIndex(const DelaySchedule& s);
  std::span<const Round> at(Round t) const;
  Round horizon() const { return static_cast<Round>(offsets_.size()) - 1; }

 private:
  std::vector<std::size_t> offsets_;  // size T + 1
  std::vector<Round> origins_;
};

/// Online observed/missing bookkeeping driven purely by arrival timestamps.
/// Round t begins with start_round(t); its arrivals are recorded with
/// record_arrival(origin, t) before round t + 1 begins.
class DelayTracker {
 public:
  void start_round(Round t);
  void record_arrival(Round origin, Round t);

  Round round() const { return round_; }
  /// |m_t| of the current round.
  std::int64_t missing_count() const { return missing_now_; }
  /// sum_{s <= t} |m_s|.
  std::int64_t cumulative_missing() const { return cumulative_missing_; }
  /// d_max^{<=t} of the current round, from timestamps seen so far.
  std::int64_t perceived_dmax() const;
  /// Origins issued and not yet arrived (includes the current round).
  const std::set<Round>& pending() const { return pending_; }

 private:
  Round round_ = 0;
  std::int64_t missing_now_ = 0;
  std::int64_t cumulative_missing_ = 0;
  std::int64_t max_arrived_delay_ = 0;
  std::set<Round> pending_;
};

struct ArrivalRecord {
  Round origin = 0;
  Round arrival = 0;
};

/// d_max^{<=t} from an arrival log: entries with arrival <= t count with
/// their realized delay, every other origin tau <= t with t - tau.
/// Throws DataError on duplicate origins or arrival < origin.
std::int64_t online_perceived_dmax(std::span<const ArrivalRecord> arrival_log, Round t);

/// Plain-text schedule file: `T=<int>` then the delays on one line.
void write_schedule_file(const std::filesystem::path& path, const DelaySchedule& s);
DelaySchedule read_schedule_file(const std::filesystem::path& path);

}  // namespace doco

#endif  // DOCO_DELAY_MODEL_HPP
