#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "nphmm/calibration.hpp"
#include "nphmm/campaign.hpp"
#include "nphmm/crossval.hpp"
#include "nphmm/diagnostics.hpp"
#include "nphmm/family.hpp"
#include "nphmm/selection.hpp"

namespace nphmm {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0";

/// Throws Schema unless doc["schema_version"] has major version 1.
void check_schema_version(const Json& doc);

/// Plain text with one value per line ('#' comments and blank lines skipped), or
/// with `column` set, a CSV file with a header row; `column` is a header name or
/// a 0-based index. Every value must lie in [0, 1].
std::vector<double> read_observations(const std::string& path,
                                      const std::optional<std::string>& column = std::nullopt);
void write_observations(const std::string& path, const std::vector<double>& observations);

Json basis_to_json(const Basis& basis);
Basis basis_from_json(const Json& j);

Json family_to_json(const EstimatorFamily& family);
EstimatorFamily family_from_json(const Json& j);

Json selection_to_json(const SelectionResult& result);
SelectionResult selection_from_json(const Json& j);

Json calibration_to_json(const Calibration& calibration);
Json cv_to_json(const CvResult& result);
Json hdet_to_json(const HdetReport& report);
Json params_to_json(const HmmParams& params);
HmmParams params_from_json(const Json& j);

Json campaign_to_json(const CampaignConfig& config);
CampaignConfig campaign_from_json(const Json& j);

/// Machine-readable failure record.
Json error_record(const std::string& kind, const std::string& message);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& doc);
void write_text(const std::string& path, const std::string& text);

std::string selection_csv(const SelectionResult& result);
std::string jump_curves_csv(const Calibration& calibration);
std::string cv_csv(const CvResult& result);

std::string results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(const std::string& text);
std::vector<ResultRow> read_results_csv(const std::string& path);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace nphmm
