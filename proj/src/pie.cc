#include "radcal/pie.h"

#include <cmath>
#include <numeric>
#include <string>

#include "radcal/error.h"

namespace radcal::pie {
namespace {

bool IsTwo(const RenyiParams& p) { return p.alpha == 2.0; }

// sum_j n_j^alpha, exact in double for alpha = 2 while N^2 < 2^53.
double PowerSum(const ChannelHistogram& h, const RenyiParams& p) {
  double sum = 0;
  if (IsTwo(p)) {
    for (const auto n : h.counts) sum += static_cast<double>(n) * static_cast<double>(n);
  } else {
    for (const auto n : h.counts) {
      if (n > 0) sum += std::pow(static_cast<double>(n), p.alpha);
    }
  }
  return sum;
}

double PowerOf(double n, const RenyiParams& p) {
  return IsTwo(p) ? n * n : (n > 0 ? std::pow(n, p.alpha) : 0.0);
}

// Entropy from the power sum S = sum n_j^alpha of a histogram with N pixels.
// For alpha = 2 the ratio N^2 / S is formed from exact integers, so a
// uniform histogram over k levels yields exactly log2(k).
double EntropyFromPowerSum(double power_sum, double total, const RenyiParams& p) {
  if (IsTwo(p)) return std::log2((total * total) / power_sum);
  return (std::log2(power_sum) - p.alpha * std::log2(total)) / (1.0 - p.alpha);
}

}  // namespace

void RenyiParams::Validate() const {
  if (!(alpha > 0) || alpha == 1.0 || !std::isfinite(alpha)) {
    Fail(ErrorCategory::kValidation, "Renyi alpha must be positive and different from 1");
  }
}

ChannelHistogram ChannelHistogram::FromCounts(std::vector<std::uint64_t> counts) {
  ChannelHistogram h;
  h.total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  h.counts = std::move(counts);
  return h;
}

ChannelHistogram Histogram(const RawImage& image, Channel channel) {
  ChannelHistogram h;
  h.counts.assign(std::size_t{1} << image.bit_depth(), 0);
  for (std::size_t y = 0; y < image.height(); ++y) {
    const auto row = image.row(y);
    for (std::size_t x = 0; x < image.width(); ++x) {
      if (image.channel_at(x, y) == channel) ++h.counts[row[x]];
    }
  }
  h.total = std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0});
  return h;
}

double RenyiEntropy(const ChannelHistogram& h, const RenyiParams& params) {
  params.Validate();
  if (h.total == 0) Fail(ErrorCategory::kValidation, "entropy of an empty histogram");
  return EntropyFromPowerSum(PowerSum(h, params), static_cast<double>(h.total), params);
}

double PointInformationGain(const ChannelHistogram& h, std::size_t level,
                            const RenyiParams& params) {
  params.Validate();
  if (level >= h.counts.size() || h.counts[level] == 0) {
    Fail(ErrorCategory::kValidation, "level " + std::to_string(level) + " is unoccupied");
  }
  if (h.total < 2) Fail(ErrorCategory::kValidation, "information gain needs >= 2 pixels");
  const double total = static_cast<double>(h.total);
  const double power_sum = PowerSum(h, params);
  const double n = static_cast<double>(h.counts[level]);
  const double reduced_sum = power_sum - PowerOf(n, params) + PowerOf(n - 1, params);
  return EntropyFromPowerSum(power_sum, total, params) -
         EntropyFromPowerSum(reduced_sum, total - 1, params);
}

double PointInformationEntropy(const ChannelHistogram& h, const RenyiParams& params,
                               Weighting weighting) {
  params.Validate();
  if (h.total < 2) Fail(ErrorCategory::kValidation, "empty channel: PIE needs >= 2 pixels");
  const double total = static_cast<double>(h.total);
  const double power_sum = PowerSum(h, params);
  const double full = EntropyFromPowerSum(power_sum, total, params);
  double pie = 0;
  for (const auto count : h.counts) {
    if (count == 0) continue;
    const double n = static_cast<double>(count);
    const double reduced_sum = power_sum - PowerOf(n, params) + PowerOf(n - 1, params);
    const double gain = full - EntropyFromPowerSum(reduced_sum, total - 1, params);
    pie += weighting == Weighting::kDistinct ? gain : n * gain;
  }
  return pie;
}

double PointInformationEntropy(const RawImage& image, Channel channel,
                               const RenyiParams& params, Weighting weighting) {
  return PointInformationEntropy(Histogram(image, channel), params, weighting);
}

double FocusProfile::ChannelMean(std::size_t frame) const {
  const auto& v = frames.at(frame);
  return (v[0] + v[1] + v[2] + v[3]) / kChannelCount;
}

FocusProfile ComputeFocusProfile(std::span<const RawImage> stack, const RenyiParams& params,
                                 Weighting weighting, Executor& executor) {
  params.Validate();
  FocusProfile profile;
  profile.frames.resize(stack.size());
  executor.ForRange(0, stack.size() * kChannelCount, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t frame = i / kChannelCount;
      const int c = static_cast<int>(i % kChannelCount);
      profile.frames[frame][c] =
          PointInformationEntropy(stack[frame], kAllChannels[c], params, weighting);
    }
  });
  return profile;
}

std::size_t SelectFocus(const FocusProfile& profile, const FocusSelection& selection) {
  const std::size_t n = profile.frames.size();
  if (n == 0) Fail(ErrorCategory::kValidation, "empty focus profile");
  if (selection.rule == FocusRule::kManual) {
    if (selection.manual_index >= n) {
      Fail(ErrorCategory::kRange, "manual focus index " +
                                      std::to_string(selection.manual_index) +
                                      " outside stack of " + std::to_string(n));
    }
    return selection.manual_index;
  }
  // Twice the distance to the centre, to stay in integers for even n.
  auto centre_distance = [n](std::size_t i) {
    const long long d = 2 * static_cast<long long>(i) - static_cast<long long>(n - 1);
    return d < 0 ? -d : d;
  };
  std::size_t best = 0;
  double best_value = profile.ChannelMean(0);
  for (std::size_t i = 1; i < n; ++i) {
    const double v = profile.ChannelMean(i);
    const bool better = selection.rule == FocusRule::kMax ? v > best_value : v < best_value;
    if (better || (v == best_value && centre_distance(i) < centre_distance(best))) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

}  // namespace radcal::pie
