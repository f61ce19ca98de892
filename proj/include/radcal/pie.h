#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "radcal/image.h"
#include "radcal/parallel.h"

namespace radcal::pie {

struct RenyiParams {
  double alpha = 2.0;

  // Throws kValidation unless alpha > 0 and alpha != 1.
  void Validate() const;
};

// Occurrences of each intensity level among the pixels of one channel.
struct ChannelHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  static ChannelHistogram FromCounts(std::vector<std::uint64_t> counts);
};

ChannelHistogram Histogram(const RawImage& image, Channel channel);

// H_alpha = log2(sum_j (n_j / N)^alpha) / (1 - alpha), in bits.
double RenyiEntropy(const ChannelHistogram& h, const RenyiParams& params = {});

// Entropy change when one pixel at `level` is removed: H(h) - H(h minus one
// pixel of that level). Positive when the pixel carried information.
double PointInformationGain(const ChannelHistogram& h, std::size_t level,
                            const RenyiParams& params = {});

enum class Weighting {
  kDistinct,    // one removal per occupied level
  kOccurrence,  // every pixel removed once, i.e. n_j removals per level
};

// Sum of point information gains over the occupied levels of `h`.
double PointInformationEntropy(const ChannelHistogram& h, const RenyiParams& params = {},
                               Weighting weighting = Weighting::kDistinct);

double PointInformationEntropy(const RawImage& image, Channel channel,
                               const RenyiParams& params = {},
                               Weighting weighting = Weighting::kDistinct);

// PIE per channel for every frame of a z-stack.
struct FocusProfile {
  std::vector<std::array<double, kChannelCount>> frames;

  double ChannelMean(std::size_t frame) const;
};

FocusProfile ComputeFocusProfile(std::span<const RawImage> stack, const RenyiParams& params,
                                 Weighting weighting, Executor& executor = Serial());

enum class FocusRule { kMax, kMin, kManual };

struct FocusSelection {
  FocusRule rule = FocusRule::kMax;
  std::size_t manual_index = 0;
};

// Frame whose channel-mean PIE is extremal under the rule. Ties go to the
// frame closest to the stack centre, then to the lower index.
std::size_t SelectFocus(const FocusProfile& profile, const FocusSelection& selection);

}  // namespace radcal::pie
