#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tdekws/raster.hpp"

namespace tdekws {

// Plug-in mutual information in bits between paired discrete labels.
double plugin_mutual_information(std::span<const int> classes,
                                 std::span<const long long> responses);

// Plug-in MI minus the mean MI over `shuffles` label permutations. The pairs
// are put in a canonical order first, so the result does not depend on the
// order the samples arrive in.
double shuffle_corrected_mi(std::span<const int> classes,
                            std::span<const long long> responses,
                            int shuffles, std::uint64_t seed);

struct InfoOptions {
  double window = 0.4;     // seconds, measured from each channel's first spike
  int max_word_bins = 27;  // at most 64
  int shuffles = 20;
  std::uint64_t seed = 0;
};

struct ChannelInfo {
  std::vector<double> per_channel;  // bits
  double mean = 0.0;
  double stddev = 0.0;
};

// I(class; spike count in the window). Samples where a channel is silent get
// their own response symbol.
ChannelInfo info_rate(const Dataset& data, const InfoOptions& options = {});

// I(class; binary word of ceil(window / delta_t) bins). Throws DomainError when
// delta_t is finer than the raster step or the word would exceed
// max_word_bins.
ChannelInfo info_pattern(const Dataset& data, double delta_t,
                         const InfoOptions& options = {});

struct InfoRow {
  int channel = 0;
  double delta_t = 0.0;
  double i_rate = 0.0;
  double i_pattern = 0.0;
};

// One row per channel per delta_t.
std::vector<InfoRow> info_table(const Dataset& data,
                                std::span<const double> delta_ts,
                                const InfoOptions& options = {});

// `channel,delta_t,i_rate,i_pattern`
void save_info_csv(const std::filesystem::path& path,
                   std::span<const InfoRow> rows);

}  // namespace tdekws
