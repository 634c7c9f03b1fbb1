#ifndef DOCO_ENVIRONMENTS_HPP
#define DOCO_ENVIRONMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "doco/common.hpp"
#include "doco/geometry.hpp"

namespace doco {

enum class LossFamily { strongly_convex_ridge, exp_concave_squared, olr_squared };

std::string to_string(LossFamily family);
LossFamily parse_loss_family(std::string_view s);

/// z uniform on [-1, 1]^n, y = <z, 1> + noise_sigma * N(0, 1).
struct SyntheticSpec {
  Eigen::Index dim = 5;
  double noise_sigma = 1.0;
};

/// z uniform on [-1, 1]^n, y = <z, theta_t> + noise[t - 1 mod len], where
/// theta_t is the all-ones vector on odd phases of `period` rounds and zero
/// on even ones.
struct NonStationarySpec {
  Eigen::Index dim = 5;
  Round period = 30;
  std::vector<double> noise;
  std::string noise_source;
};

struct Dataset {
  Eigen::Index dim = 0;
  std::vector<Vector> features;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
};

using DataSource = std::variant<SyntheticSpec, NonStationarySpec, std::shared_ptr<const Dataset>>;

struct EnvironmentSpec {
  LossFamily family = LossFamily::strongly_convex_ridge;
  double radius = 2.0;  // ignored for olr_squared, which is unconstrained
  DataSource source = SyntheticSpec{};
  std::optional<double> y_cap;  // overrides the scanned label bound
  std::optional<double> z_cap;  // overrides the scanned feature bound
  /// Radius used to size step-based baselines on the unconstrained family.
  double olr_nominal_radius = 2.0;
  std::string label;  // name used in CSV output
};

struct RoundData {
  Vector features;
  double label = 0.0;
};

double loss_value(LossFamily family, const RoundData& round, const Vector& x);
Vector loss_grad(LossFamily family, const RoundData& round, const Vector& x);

class Environment {
 public:
  Environment(EnvironmentSpec spec, std::uint64_t seed);

  const EnvironmentSpec& spec() const { return spec_; }
  LossFamily family() const { return spec_.family; }
  Eigen::Index dim() const;
  BallDomain domain() const;
  std::string label() const;
  std::uint64_t seed() const { return seed_; }

  /// Deterministic in (seed, t); rounds can be drawn in any order.
  RoundData materialize_round(Round t) const;

 private:
  EnvironmentSpec spec_;
  std::uint64_t seed_;
};

/// The first T rounds of an environment, drawn up front.
class RealizedStream {
 public:
  RealizedStream(const Environment& env, Round horizon);
  RealizedStream(LossFamily family, BallDomain domain, std::vector<RoundData> rounds);

  Round horizon() const { return static_cast<Round>(rounds_.size()); }
  LossFamily family() const { return family_; }
  const BallDomain& domain() const { return domain_; }
  /// Throws SequencingError for a round that was not materialized.
  const RoundData& round(Round t) const;
  double loss_value(Round t, const Vector& x) const;
  Vector loss_grad(Round t, const Vector& x) const;

 private:
  LossFamily family_;
  BallDomain domain_;
  std::vector<RoundData> rounds_;
};

/// Problem constants handed to learners and logged with every run.
struct EnvConstants {
  double g_bound = 0.0;   // G
  double diameter = 0.0;  // D (nominal for the unconstrained family)
  double lambda = 0.0;    // strong convexity, 0 when not applicable
  double alpha = 0.0;     // exp-concavity over the domain
  double beta = 0.0;      // min{1/(4GD), alpha} / 2
  double y_bound = 0.0;   // Y
  double z_bound = 0.0;   // Z
  bool nominal_domain = false;
};

/// Closed-form constants for the given family over a ball of `radius` and
/// data with ||z|| <= z_bound, |y| <= y_bound.
EnvConstants env_constants(LossFamily family, double radius, double z_bound, double y_bound);

/// Constants from the realized data ranges (or the configured caps).
EnvConstants env_constants(const Environment& env, const RealizedStream& stream);

/// LIBSVM sparse text: `<label> <index>:<value> ...`, 1-based indices.
/// dim = 0 infers the dimension from the largest index. Throws ParseError
/// with the line number on malformed input or an out-of-range index.
Dataset parse_libsvm(std::istream& in, Eigen::Index dim = 0);
Dataset parse_libsvm(const std::filesystem::path& path, Eigen::Index dim = 0);
void write_libsvm(std::ostream& out, const Dataset& data);

/// One value in [0, 1] per line; blank lines and `#` comments are skipped.
std::vector<double> parse_noise_stream(std::istream& in);
std::vector<double> read_noise_stream(const std::filesystem::path& path);

}  // namespace doco

#endif  // DOCO_ENVIRONMENTS_HPP
