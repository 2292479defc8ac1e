#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "snnbench/experiment.hpp"

namespace snnbench {

enum class ReportFormat { kCsv, kJson };

std::string_view to_string(ReportFormat format);
ReportFormat report_format_from_string(std::string_view name);

// Column contracts of the CSV outputs.
inline constexpr std::string_view kSummaryHeader =
    "method,architecture,seed,train_accuracy,test_accuracy,learning_state_peak,failed_stage";
inline constexpr std::string_view kCurveHeader = "epoch,loss,train_accuracy,test_accuracy";
inline constexpr std::string_view kFgsmHeader = "method,architecture,epsilon,accuracy,asr,seed";
inline constexpr std::string_view kBackdoorHeader =
    "method,architecture,rate,accuracy,asr,seed,run,source,target,poisoned,base_confusion";
inline constexpr std::string_view kFisherHeader = "t,layer,kind,value";
inline constexpr std::string_view kTimingHeader = "seed,wall_seconds";

// Files written, all prefixed `{method}_{arch}`:
//   csv:  _{seed}.csv (training curve), _{seed}_cka.csv (square), _{seed}_fisher.csv,
//         _summary.csv (per seed + mean row), _fgsm.csv and _backdoor.csv (long format)
//   json: _{seed}.json (one seed), _report.json (whole report incl. config)
//   both: _timing.csv, the only file that differs between identical reruns.
// Returns the paths in write order. Throws std::runtime_error on unwritable paths.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, ReportFormat format,
                                               const std::filesystem::path& out_dir);

std::string report_prefix(const ExperimentConfig& config);

nlohmann::json seed_to_json(const SeedReport& seed);
SeedReport seed_from_json(const nlohmann::json& j);
// Wall time is not serialized.
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
ExperimentReport load_report(const std::filesystem::path& path);

std::string cka_csv(const Matrix& m);
// Rows t = 1..T in curve order.
std::string fisher_csv(const std::vector<FisherProfile>& curve);

}  // namespace snnbench
