#ifndef DOCO_LEARNER_HPP
#define DOCO_LEARNER_HPP

#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "doco/common.hpp"

namespace doco {

/// Gradient of round `origin`, evaluated at the point played then, delivered
/// at the end of round `arrival`.
struct GradientPacket {
  Round origin = 0;
  Vector gradient;
  Vector played;
  Round arrival = 0;
};

/// Label of round `origin` with the feature vector it belongs to.
struct LabelPacket {
  Round origin = 0;
  double label = 0.0;
  Vector features;
  Round arrival = 0;
};

/// Everything arriving at the end of one round. Gradient learners read
/// `gradients`, label learners read `labels`; the harness fills both, in
/// ascending origin order.
struct FeedbackBatch {
  Round round = 0;
  std::vector<GradientPacket> gradients;
  std::vector<LabelPacket> labels;
};

/// Per-round quantities exposed for tracing. NaN means not applicable.
struct RoundDiagnostics {
  double learning_rate = std::numeric_limits<double>::quiet_NaN();
  double clip_factor = 1.0;
  double clip_level = std::numeric_limits<double>::quiet_NaN();
};

/// Common contract: play() produces x_t for the next round (OLR learners
/// read the feature vector z_t, others ignore it), absorb() consumes the
/// feedback that arrives at the end of that round. Calls alternate strictly.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;
  virtual std::string_view name() const = 0;
  virtual Vector play(const Vector& features) = 0;
  virtual void absorb(const FeedbackBatch& batch) = 0;
  virtual RoundDiagnostics diagnostics() const { return {}; }
};

}  // namespace doco

#endif  // DOCO_LEARNER_HPP
