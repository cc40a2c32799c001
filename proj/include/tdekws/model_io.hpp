#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tdekws/analysis.hpp"
#include "tdekws/topology.hpp"
#include "tdekws/training.hpp"

namespace tdekws {

inline constexpr std::string_view kModelFormat = "tdekws-model-v1";
inline constexpr std::string_view kReportFormat = "tdekws-report-v1";
inline constexpr std::string_view kInterpretFormat = "tdekws-interpret-v1";

// A trained network plus the hyperparameters it was trained with.
struct ModelFile {
  NetworkSpec spec;
  ParameterSet params;
  TrainConfig config;
};

// Doubles are written in shortest round-trip form, so save/load is bit-exact.
std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

// Wall-clock time is left out so reports are reproducible byte for byte.
std::string report_to_json(const TrainReport& report);
TrainReport report_from_json(std::string_view text);
void save_report(const std::filesystem::path& path, const TrainReport& report);

std::string interpretability_to_json(const InterpretabilityReport& report);
void save_interpretability(const std::filesystem::path& path,
                           const InterpretabilityReport& report);

// Whole-file helpers shared by the writers.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace tdekws
