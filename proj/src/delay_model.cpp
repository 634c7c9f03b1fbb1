#include "doco/delay_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doco/random.hpp"

namespace doco {

namespace {

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::int64_t parse_int(std::string_view s, std::string_view field) {
  const std::string t = trim(s);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("delay regime: field '" + std::string(field) + "' expects an integer, got '" +
                      t + "'");
  }
  return v;
}

double parse_real(std::string_view s, std::string_view field) {
  const std::string t = trim(s);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("delay regime: field '" + std::string(field) + "' expects a number, got '" +
                      t + "'");
  }
  return v;
}

// Splits the argument list of `name(a,b,c)` on top-level commas.
std::vector<std::string> split_args(std::string_view body) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '(') ++depth;
    if (body[i] == ')') --depth;
    if (body[i] == ',' && depth == 0) {
      out.push_back(trim(body.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(body.substr(start)));
  return out;
}

void expect_arity(const std::vector<std::string>& args, std::size_t n, std::string_view name) {
  if (args.size() != n) {
    throw ConfigError("delay regime '" + std::string(name) + "' expects " + std::to_string(n) +
                      " arguments, got " + std::to_string(args.size()));
  }
}

std::vector<std::int64_t> parse_delay_list(std::string_view text, std::string_view field) {
  std::vector<std::int64_t> out;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) out.push_back(parse_int(tok, field));
  return out;
}

std::int64_t draw_delay(const DelayRegime& r, Rng& rng, Round t, Round horizon) {
  switch (r.kind) {
    case DelayRegime::Kind::fixed:
      return r.fixed_delay;
    case DelayRegime::Kind::uniform:
      return rng.uniform_int(r.lo, r.hi);
    case DelayRegime::Kind::heavy_tail:
      // Coin first, then the base law only when the coin fails.
      if (rng.bernoulli(*r.p)) return horizon - t;
      return draw_delay(*r.inner, rng, t, horizon);
    case DelayRegime::Kind::geometric_alternating: {
      const bool geometric_phase = ((t - 1) / r.period) % 2 == 0;
      if (geometric_phase) {
        const double p = r.p ? *r.p : std::pow(static_cast<double>(horizon), -1.0 / 3.0);
        return rng.geometric(p);
      }
      return draw_delay(*r.inner, rng, t, horizon);
    }
    case DelayRegime::Kind::trace:
      if (t > static_cast<Round>(r.trace.size())) {
        throw ConfigError("delay regime: trace has " + std::to_string(r.trace.size()) +
                          " entries but the horizon is longer");
      }
      return r.trace[static_cast<std::size_t>(t - 1)];
  }
  return 0;
}

}  // namespace

DelayRegime DelayRegime::fixed(std::int64_t d) {
  DelayRegime r;
  r.kind = Kind::fixed;
  r.fixed_delay = d;
  return r;
}

DelayRegime DelayRegime::uniform(std::int64_t lo, std::int64_t hi) {
  DelayRegime r;
  r.kind = Kind::uniform;
  r.lo = lo;
  r.hi = hi;
  return r;
}

DelayRegime DelayRegime::heavy_tail(double p, DelayRegime base) {
  DelayRegime r;
  r.kind = Kind::heavy_tail;
  r.p = p;
  r.inner = std::make_shared<const DelayRegime>(std::move(base));
  return r;
}

DelayRegime DelayRegime::geometric_alternating(std::optional<double> p, std::int64_t period,
                                               DelayRegime fallback) {
  DelayRegime r;
  r.kind = Kind::geometric_alternating;
  r.p = p;
  r.period = period;
  r.inner = std::make_shared<const DelayRegime>(std::move(fallback));
  return r;
}

DelayRegime DelayRegime::from_trace(std::vector<std::int64_t> delays) {
  DelayRegime r;
  r.kind = Kind::trace;
  r.trace = std::move(delays);
  return r;
}

void DelayRegime::validate() const {
  switch (kind) {
    case Kind::fixed:
      if (fixed_delay < 0) throw ConfigError("delay regime fixed: field 'd' must be >= 0");
      break;
    case Kind::uniform:
      if (lo < 0) throw ConfigError("delay regime uniform: field 'lo' must be >= 0");
      if (lo > hi) throw ConfigError("delay regime uniform: field 'lo' must be <= 'hi'");
      break;
    case Kind::heavy_tail:
      if (!p || !(*p >= 0.0 && *p <= 1.0)) {
        throw ConfigError("delay regime heavy_tail: field 'p' must lie in [0, 1]");
      }
      if (!inner) throw ConfigError("delay regime heavy_tail: field 'base' is missing");
      inner->validate();
      break;
    case Kind::geometric_alternating:
      if (p && !(*p > 0.0 && *p <= 1.0)) {
        throw ConfigError("delay regime geometric_alternating: field 'p' must lie in (0, 1]");
      }
      if (period < 1) {
        throw ConfigError("delay regime geometric_alternating: field 'period' must be >= 1");
      }
      if (!inner) {
        throw ConfigError("delay regime geometric_alternating: field 'fallback' is missing");
      }
      inner->validate();
      break;
    case Kind::trace:
      for (const auto d : trace) {
        if (d < 0) throw ConfigError("delay regime trace: field 'delays' has a negative entry");
      }
      break;
  }
}

std::string DelayRegime::describe() const {
  switch (kind) {
    case Kind::fixed:
      return "fixed(" + std::to_string(fixed_delay) + ")";
    case Kind::uniform:
      return "uniform(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
    case Kind::heavy_tail:
      return "heavy_tail(" + format_real(p.value_or(0.0)) + "," + inner->describe() + ")";
    case Kind::geometric_alternating:
      return "geometric_alternating(" + (p ? format_real(*p) : std::string("auto")) + "," +
             std::to_string(period) + "," + inner->describe() + ")";
    case Kind::trace: {
      if (!trace_source.empty()) return "trace(@" + trace_source + ")";
      std::string s = "trace(";
      for (std::size_t i = 0; i < trace.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(trace[i]);
      }
      return s + ")";
    }
  }
  return {};
}

DelayRegime parse_delay_regime(std::string_view text) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')') {
    throw ConfigError("delay regime: expected name(args), got '" + t + "'");
  }
  const std::string name = trim(std::string_view(t).substr(0, open));
  const std::string_view body = std::string_view(t).substr(open + 1, t.size() - open - 2);

  DelayRegime r;
  if (name == "trace") {
    const std::string b = trim(body);
    if (!b.empty() && b.front() == '@') {
      const std::string path = b.substr(1);
      const DelaySchedule loaded = read_schedule_file(path);
      r = DelayRegime::from_trace({loaded.delays().begin(), loaded.delays().end()});
      r.trace_source = path;
    } else {
      r = DelayRegime::from_trace(parse_delay_list(b, "delays"));
    }
  } else {
    const auto args = split_args(body);
    if (name == "fixed") {
      expect_arity(args, 1, name);
      r = DelayRegime::fixed(parse_int(args[0], "d"));
    } else if (name == "uniform") {
      expect_arity(args, 2, name);
      r = DelayRegime::uniform(parse_int(args[0], "lo"), parse_int(args[1], "hi"));
    } else if (name == "heavy_tail") {
      expect_arity(args, 2, name);
      r = DelayRegime::heavy_tail(parse_real(args[0], "p"), parse_delay_regime(args[1]));
    } else if (name == "geometric_alternating") {
      expect_arity(args, 3, name);
      std::optional<double> p;
      if (args[0] != "auto") p = parse_real(args[0], "p");
      r = DelayRegime::geometric_alternating(p, parse_int(args[1], "period"),
                                             parse_delay_regime(args[2]));
    } else {
      throw ConfigError("delay regime: unknown kind '" + name + "'");
    }
  }
  r.validate();
  return r;
}

DelaySchedule::DelaySchedule(Round horizon, std::vector<std::int64_t> delays)
    : horizon_(horizon), delays_(std::move(delays)) {
  if (horizon_ < 1) throw ConfigError("schedule: field 'T' must be >= 1");
  if (static_cast<Round>(delays_.size()) != horizon_) {
    throw ConfigError("schedule: expected " + std::to_string(horizon_) + " delays, got " +
                      std::to_string(delays_.size()));
  }
  for (const auto d : delays_) {
    if (d < 0) throw ConfigError("schedule: delays must be non-negative");
  }
}

std::int64_t DelaySchedule::delay(Round t) const {
  if (t < 1 || t > horizon_) {
    throw ArgumentError("schedule: round " + std::to_string(t) + " outside [1, " +
                        std::to_string(horizon_) + "]");
  }
  return delays_[static_cast<std::size_t>(t - 1)];
}

bool DelaySchedule::is_truncated() const {
  for (Round t = 1; t <= horizon_; ++t) {
    if (t + delays_[static_cast<std::size_t>(t - 1)] > horizon_) return false;
  }
  return true;
}

DelaySchedule build_schedule(const DelayRegimeSpec& spec, Round horizon) {
  if (horizon < 1) throw ConfigError("schedule: field 'T' must be >= 1");
  spec.regime.validate();
  Rng rng(spec.seed);
  std::vector<std::int64_t> d(static_cast<std::size_t>(horizon));
  for (Round t = 1; t <= horizon; ++t) {
    d[static_cast<std::size_t>(t - 1)] = draw_delay(spec.regime, rng, t, horizon);
  }
  return DelaySchedule(horizon, std::move(d));
}

DelaySchedule truncate(const DelaySchedule& s) {
  std::vector<std::int64_t> d(s.delays().begin(), s.delays().end());
  const Round horizon = s.horizon();
  for (Round t = 1; t <= horizon; ++t) {
    auto& dt = d[static_cast<std::size_t>(t - 1)];
    dt = std::min<std::int64_t>(dt, horizon - t);
  }
  return DelaySchedule(horizon, std::move(d));
}

DelaySchedule realize_schedule(const DelayRegimeSpec& spec, Round horizon) {
  return truncate(build_schedule(spec, horizon));
}

std::vector<Round> arrivals_at(const DelaySchedule& s, Round t) {
  if (t < 1 || t > s.horizon()) {
    throw ArgumentError("arrivals_at: round " + std::to_string(t) + " outside [1, " +
                        std::to_string(s.horizon()) + "]");
  }
  std::vector<Round> out;
  for (Round tau = 1; tau <= t; ++tau) {
    if (tau + s.delay(tau) == t) out.push_back(tau);
  }
  return out;
}

std::vector<Round> missing_at(const DelaySchedule& s, Round t) {
  if (t < 1 || t > s.horizon() + 1) {
    throw ArgumentError("missing_at: round " + std::to_string(t) + " outside [1, " +
                        std::to_string(s.horizon() + 1) + "]");
  }
  std::vector<Round> out;
  for (Round tau = 1; tau < t; ++tau) {
    if (tau + s.delay(tau) >= t) out.push_back(tau);
  }
  return out;
}

DelayStats stats(const DelaySchedule& s) {
  const Round horizon = s.horizon();
  DelayStats st;
  st.perceived_dmax.assign(static_cast<std::size_t>(horizon) + 1, 0);
  const ArrivalIndex index(s);

  // Walk the rounds keeping m_t as a sorted set; arrivals at round t leave
  // the set before round t + 1 begins.
  std::set<Round> missing;
  std::int64_t max_arrived = 0;
  for (Round t = 1; t <= horizon; ++t) {
    st.sigma_max = std::max<std::int64_t>(st.sigma_max, static_cast<std::int64_t>(missing.size()));
    const std::int64_t dt = s.delay(t);
    st.d_max = std::max(st.d_max, dt);
    st.d_tot += dt;
    missing.insert(t);
    for (const Round origin : index.at(t)) {
      missing.erase(origin);
      max_arrived = std::max<std::int64_t>(max_arrived, t - origin);
    }
    std::int64_t perceived = max_arrived;
    if (!missing.empty()) perceived = std::max<std::int64_t>(perceived, t - *missing.begin());
    st.perceived_dmax[static_cast<std::size_t>(t)] = perceived;
  }
  return st;
}

ArrivalIndex::ArrivalIndex(const DelaySchedule& s) {
  if (!s.is_truncated()) throw ConfigError("arrival index: schedule must be truncated");
  const Round horizon = s.horizon();
  std::vector<std::size_t> counts(static_cast<std::size_t>(horizon) + 1, 0);
  for (Round tau = 1; tau <= horizon; ++tau) ++counts[static_cast<std::size_t>(tau + s.delay(tau))];
  offsets_.assign(static_cast<std::size_t>(horizon) + 2, 0);
  for (Round t = 1; t <= horizon; ++t) {
    offsets_[static_cast<std::size_t>(t) + 1] = offsets_[static_cast<std::size_t>(t)] +
                                                 counts[static_cast<std::size_t>(t)];
  }
  origins_.resize(static_cast<std::size_t>(horizon));
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end());
  for (Round tau = 1; tau <= horizon; ++tau) {
    origins_[cursor[static_cast<std::size_t>(tau + s.delay(tau))]++] = tau;
  }
  offsets_.erase(offsets_.begin());  // offsets_[t - 1] .. offsets_[t]
}

std::span<const Round> ArrivalIndex::at(Round t) const {
  if (t < 1 || t > horizon()) {
    throw ArgumentError("arrival index: round " + std::to_string(t) + " out of range");
  }
  const auto b = offsets_[static_cast<std::size_t>(t - 1)];
  const auto e = offsets_[static_cast<std::size_t>(t)];
  return std::span<const Round>(origins_).subspan(b, e - b);
}

void DelayTracker::start_round(Round t) {
  if (t != round_ + 1) {
    throw SequencingError("delay tracker: expected round " + std::to_string(round_ + 1) +
                          ", got " + std::to_string(t));
  }
  round_ = t;
  missing_now_ = static_cast<std::int64_t>(pending_.size());
  cumulative_missing_ += missing_now_;
  pending_.insert(t);
}

void DelayTracker::record_arrival(Round origin, Round t) {
  if (t != round_) {
    throw SequencingError("delay tracker: arrival stamped " + std::to_string(t) +
                          " during round " + std::to_string(round_));
  }
  if (origin > t) throw DataError("delay tracker: arrival precedes origin " + std::to_string(origin));
  if (pending_.erase(origin) == 0) {
    throw DataError("delay tracker: origin " + std::to_string(origin) +
                    " is not outstanding (duplicate or unknown)");
  }
  max_arrived_delay_ = std::max<std::int64_t>(max_arrived_delay_, t - origin);
}

std::int64_t DelayTracker::perceived_dmax() const {
  std::int64_t v = max_arrived_delay_;
  if (!pending_.empty()) v = std::max<std::int64_t>(v, round_ - *pending_.begin());
  return v;
}

std::int64_t online_perceived_dmax(std::span<const ArrivalRecord> arrival_log, Round t) {
  if (t < 1) throw ArgumentError("online_perceived_dmax: round must be >= 1");
  std::set<Round> seen;
  std::vector<bool> arrived(static_cast<std::size_t>(t) + 1, false);
  std::int64_t best = 0;
  for (const auto& rec : arrival_log) {
    if (rec.origin < 1) throw DataError("arrival log: origin must be >= 1");
    if (rec.arrival < rec.origin) {
      throw DataError("arrival log: origin " + std::to_string(rec.origin) +
                      " arrives before it was played");
    }
    if (!seen.insert(rec.origin).second) {
      throw DataError("arrival log: duplicate origin " + std::to_string(rec.origin));
    }
    if (rec.arrival <= t) {
      arrived[static_cast<std::size_t>(rec.origin)] = true;
      best = std::max<std::int64_t>(best, rec.arrival - rec.origin);
    }
  }
  for (Round tau = 1; tau <= t; ++tau) {
    if (!arrived[static_cast<std::size_t>(tau)]) {
      best = std::max<std::int64_t>(best, t - tau);
      break;  // the oldest missing origin dominates
    }
  }
  return best;
}

void write_schedule_file(const std::filesystem::path& path, const DelaySchedule& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schedule file " + path.string());
  out << "T=" << s.horizon() << '\n';
  for (std::size_t i = 0; i < s.delays().size(); ++i) {
    if (i) out << ' ';
    out << s.delays()[i];
  }
  out << '\n';
  if (!out) throw IoError("failed writing schedule file " + path.string());
}

DelaySchedule read_schedule_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read schedule file " + path.string());
  std::string header;
  std::getline(in, header);
  header = trim(header);
  if (header.rfind("T=", 0) != 0) throw ParseError("schedule file: expected 'T=<int>'", 1);
  Round horizon = 0;
  try {
    horizon = parse_int(std::string_view(header).substr(2), "T");
  } catch (const ConfigError& e) {
    throw ParseError(std::string("schedule file: ") + e.what(), 1);
  }
  std::string line;
  std::getline(in, line);
  std::vector<std::int64_t> d;
  try {
    d = parse_delay_list(line, "delays");
  } catch (const ConfigError& e) {
    throw ParseError(std::string("schedule file: ") + e.what(), 2);
  }
  try {
    return DelaySchedule(horizon, std::move(d));
  } catch (const ConfigError& e) {
    throw ParseError(std::string("schedule file: ") + e.what(), 2);
  }
}

}  // namespace doco
