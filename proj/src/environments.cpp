#include "doco/environments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "doco/learners.hpp"
#include "doco/random.hpp"

namespace doco {

namespace {

bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

bool parse_index(std::string_view s, long long& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

Vector uniform_features(Rng& rng, Eigen::Index n) {
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.uniform(-1.0, 1.0);
  return z;
}

}  // namespace

std::string to_string(LossFamily family) {
  switch (family) {
    case LossFamily::strongly_convex_ridge:
      return "ridge";
    case LossFamily::exp_concave_squared:
      return "expconcave";
    case LossFamily::olr_squared:
      return "olr";
  }
  return "?";
}

LossFamily parse_loss_family(std::string_view s) {
  if (s == "ridge" || s == "strongly_convex_ridge") return LossFamily::strongly_convex_ridge;
  if (s == "expconcave" || s == "exp_concave_squared") return LossFamily::exp_concave_squared;
  if (s == "olr" || s == "olr_squared") return LossFamily::olr_squared;
  throw ConfigError("environment: unknown loss family '" + std::string(s) + "'");
}

double loss_value(LossFamily family, const RoundData& round, const Vector& x) {
  const double residual = round.features.dot(x) - round.label;
  double v = 0.5 * residual * residual;
  if (family == LossFamily::strongly_convex_ridge) v += 0.5 * x.squaredNorm();
  return v;
}

Vector loss_grad(LossFamily family, const RoundData& round, const Vector& x) {
  Vector g = (round.features.dot(x) - round.label) * round.features;
  if (family == LossFamily::strongly_convex_ridge) g += x;
  return g;
}

Environment::Environment(EnvironmentSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
  if (spec_.family != LossFamily::olr_squared && !(spec_.radius >= 0.0)) {
    throw ConfigError("environment: field 'radius' must be >= 0");
  }
  if (const auto* s = std::get_if<SyntheticSpec>(&spec_.source)) {
    if (s->dim < 1) throw ConfigError("environment: field 'n' must be >= 1");
    if (!(s->noise_sigma >= 0.0)) throw ConfigError("environment: field 'noise_sigma' must be >= 0");
  } else if (const auto* ns = std::get_if<NonStationarySpec>(&spec_.source)) {
    if (ns->dim < 1) throw ConfigError("environment: field 'n' must be >= 1");
    if (ns->period < 1) throw ConfigError("environment: field 'period' must be >= 1");
    if (ns->noise.empty()) throw ConfigError("environment: field 'noise_file' holds no values");
  } else {
    const auto& d = std::get<std::shared_ptr<const Dataset>>(spec_.source);
    if (!d || d->size() == 0) throw ConfigError("environment: field 'dataset' is empty");
  }
}

Eigen::Index Environment::dim() const {
  return std::visit(
      [](const auto& s) -> Eigen::Index {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, std::shared_ptr<const Dataset>>) {
          return s->dim;
        } else {
          return s.dim;
        }
      },
      spec_.source);
}

BallDomain Environment::domain() const {
  if (spec_.family == LossFamily::olr_squared) return BallDomain::unconstrained(dim());
  return BallDomain{dim(), spec_.radius};
}

std::string Environment::label() const {
  if (!spec_.label.empty()) return spec_.label;
  std::string source = "synthetic";
  if (std::holds_alternative<NonStationarySpec>(spec_.source)) source = "nonstationary";
  if (std::holds_alternative<std::shared_ptr<const Dataset>>(spec_.source)) source = "dataset";
  return to_string(spec_.family) + "-" + source;
}

RoundData Environment::materialize_round(Round t) const {
  if (t < 1) throw ArgumentError("environment: round must be >= 1");
  Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(t)));
  RoundData r;
  if (const auto* s = std::get_if<SyntheticSpec>(&spec_.source)) {
    r.features = uniform_features(rng, s->dim);
    const double noise = s->noise_sigma > 0.0 ? s->noise_sigma * rng.normal() : 0.0;
    r.label = r.features.sum() + noise;
  } else if (const auto* ns = std::get_if<NonStationarySpec>(&spec_.source)) {
    r.features = uniform_features(rng, ns->dim);
    const Round phase = (t - 1) / ns->period;  // 0-based: phase 0 uses theta = 1
    const double signal = phase % 2 == 0 ? r.features.sum() : 0.0;
    r.label = signal + ns->noise[static_cast<std::size_t>(t - 1) % ns->noise.size()];
  } else {
    const auto& d = *std::get<std::shared_ptr<const Dataset>>(spec_.source);
    const std::size_t row = static_cast<std::size_t>(t - 1) % d.size();
    r.features = d.features[row];
    r.label = d.labels[row];
  }
  return r;
}

RealizedStream::RealizedStream(const Environment& env, Round horizon)
    : family_(env.family()), domain_(env.domain()) {
  if (horizon < 1) throw ConfigError("stream: field 'T' must be >= 1");
  rounds_.reserve(static_cast<std::size_t>(horizon));
  for (Round t = 1; t <= horizon; ++t) rounds_.push_back(env.materialize_round(t));
}

RealizedStream::RealizedStream(LossFamily family, BallDomain domain, std::vector<RoundData> rounds)
    : family_(family), domain_(domain), rounds_(std::move(rounds)) {
  for (const auto& r : rounds_) {
    if (r.features.size() != domain_.dim) throw DataError("stream: feature dimension mismatch");
  }
}

const RoundData& RealizedStream::round(Round t) const {
  if (t < 1 || t > horizon()) {
    throw SequencingError("stream: round " + std::to_string(t) + " was not materialized");
  }
  return rounds_[static_cast<std::size_t>(t - 1)];
}

double RealizedStream::loss_value(Round t, const Vector& x) const {
  return doco::loss_value(family_, round(t), x);
}

Vector RealizedStream::loss_grad(Round t, const Vector& x) const {
  return doco::loss_grad(family_, round(t), x);
}

EnvConstants env_constants(LossFamily family, double radius, double z_bound, double y_bound) {
  if (!(radius >= 0.0)) throw ConfigError("env constants: radius must be >= 0");
  EnvConstants c;
  c.z_bound = z_bound;
  c.y_bound = y_bound;
  c.diameter = 2.0 * radius;
  // max over the ball and the data box of |<z, x> - y| is Z R + Y.
  const double max_residual = z_bound * radius + y_bound;
  c.g_bound = z_bound * max_residual;
  if (family == LossFamily::strongly_convex_ridge) {
    c.g_bound += radius;
    c.lambda = 1.0;
  }
  c.alpha = max_residual > 0.0 ? 1.0 / (max_residual * max_residual)
                               : std::numeric_limits<double>::infinity();
  c.beta = ons_beta(c.g_bound, c.diameter, c.alpha);
  return c;
}

EnvConstants env_constants(const Environment& env, const RealizedStream& stream) {
  double z = 0.0;
  double y = 0.0;
  for (Round t = 1; t <= stream.horizon(); ++t) {
    z = std::max(z, stream.round(t).features.norm());
    y = std::max(y, std::abs(stream.round(t).label));
  }
  if (env.spec().z_cap) z = *env.spec().z_cap;
  if (env.spec().y_cap) y = *env.spec().y_cap;
  const bool olr = env.family() == LossFamily::olr_squared;
  EnvConstants c =
      env_constants(env.family(), olr ? env.spec().olr_nominal_radius : env.spec().radius, z, y);
  c.nominal_domain = olr;
  return c;
}

Dataset parse_libsvm(std::istream& in, Eigen::Index dim) {
  if (dim < 0) throw ConfigError("libsvm: dimension must be >= 0");
  struct Row {
    double label;
    std::vector<std::pair<long long, double>> entries;
  };
  std::vector<Row> rows;
  long long max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line
    Row row;
    if (!parse_double(tok, row.label)) throw ParseError("libsvm: bad label '" + tok + "'", lineno);
    long long prev = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ParseError("libsvm: expected index:value, got '" + tok + "'", lineno);
      }
      long long idx = 0;
      double val = 0.0;
      if (!parse_index(std::string_view(tok).substr(0, colon), idx)) {
        throw ParseError("libsvm: bad index in '" + tok + "'", lineno);
      }
      if (!parse_double(std::string_view(tok).substr(colon + 1), val)) {
        throw ParseError("libsvm: bad value in '" + tok + "'", lineno);
      }
      if (idx < 1 || (dim > 0 && idx > dim)) {
        throw ParseError("libsvm: index " + std::to_string(idx) + " out of range", lineno);
      }
      if (idx <= prev) throw ParseError("libsvm: indices must be increasing", lineno);
      prev = idx;
      max_index = std::max(max_index, idx);
      row.entries.emplace_back(idx, val);
    }
    rows.push_back(std::move(row));
  }
  Dataset d;
  d.dim = dim > 0 ? dim : static_cast<Eigen::Index>(max_index);
  d.features.reserve(rows.size());
  d.labels.reserve(rows.size());
  for (const auto& row : rows) {
    Vector z = Vector::Zero(d.dim);
    for (const auto& [idx, val] : row.entries) z(idx - 1) = val;
    d.features.push_back(std::move(z));
    d.labels.push_back(row.label);
  }
  return d;
}

Dataset parse_libsvm(const std::filesystem::path& path, Eigen::Index dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset " + path.string());
  return parse_libsvm(in, dim);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  char buf[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data.labels[i]);
    out << buf;
    for (Eigen::Index j = 0; j < data.dim; ++j) {
      const double v = data.features[i](j);
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(j + 1), v);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<double> parse_noise_stream(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    double v = 0.0;
    if (!parse_double(tok, v)) throw ParseError("noise stream: bad value '" + tok + "'", lineno);
    if (v < 0.0 || v > 1.0) throw ParseError("noise stream: value outside [0, 1]", lineno);
    std::string extra;
    if (ls >> extra) throw ParseError("noise stream: one value per line expected", lineno);
    out.push_back(v);
  }
  return out;
}

std::vector<double> read_noise_stream(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read noise stream " + path.string());
  return parse_noise_stream(in);
}

}  // namespace doco
