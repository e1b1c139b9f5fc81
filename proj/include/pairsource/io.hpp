#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairsource/counting.hpp"
#include "pairsource/dispersion.hpp"
#include "pairsource/franson.hpp"
#include "pairsource/link.hpp"
#include "pairsource/sfwm.hpp"
#include "pairsource/spectra.hpp"

namespace pairsource::io {

using json = nlohmann::ordered_json;

/// Numeric CSV table with a header row. Blank lines and lines starting with '#' are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};

/// Throws ParseError (with line number) on a header mismatch, a wrong field count or a
/// malformed number. NaN and infinity parse but are rejected by the callers' validators.
CsvTable read_csv(std::istream& in, const std::vector<std::string>& expected_header);
CsvTable read_csv_file(const std::string& path, const std::vector<std::string>& expected_header);

/// Round-trip exact decimal (%.17g).
std::string format_double(double v);
void write_csv(std::ostream& out, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

json read_json_file(const std::string& path);

// Tabular inputs.
dispersion::ResonanceGrid grid_from_csv(const CsvTable& t);
spectra::SpectrumTrace trace_from_csv(const CsvTable& t);
counting::PowerSweepRecord sweep_from_csv(const CsvTable& t);
link::SampledField field_from_csv(const CsvTable& t);

inline const std::vector<std::string> kGridHeader{"mu", "frequency_hz"};
inline const std::vector<std::string> kTraceHeader{"frequency_hz", "transmission"};
inline const std::vector<std::string> kSweepHeader{"power_w", "ns_hz", "ni_hz", "nnet_hz"};
inline const std::vector<std::string> kFieldHeader{"x_m", "y_m", "amplitude"};
inline const std::vector<std::string> kFringeHeader{"phase_rad", "ncc_hz"};
inline const std::vector<std::string> kHistogramHeader{"offset_s", "counts"};

// Key accessors that raise ConfigError naming the missing or mistyped key.
double get_double(const json& j, const std::string& key);
double get_double(const json& j, const std::string& key, double fallback);
const json& get_object(const json& j, const std::string& key);

// JSON <-> domain types. Parsers validate and raise ConfigError.
dispersion::MaterialModel material_from_json(const json& j);
json to_json(const dispersion::MaterialModel& m);
dispersion::EffectiveIndexTable index_table_from_json(const json& j);
json to_json(const dispersion::DispersionFit& f);

spectra::ResonatorMode mode_from_json(const json& j);
json to_json(const spectra::ResonatorMode& m);
json to_json(const spectra::ResonanceFit& f);

sfwm::ModeTriple triple_from_json(const json& j);
json to_json(const sfwm::ModeTriple& t);
json to_json(const sfwm::Report& r);

counting::DetectionChain chain_from_json(const json& j);
json to_json(const counting::DetectionChain& c);
counting::SourceTruth source_from_json(const json& j);
json to_json(const counting::SourceTruth& s);
counting::MeasurementSettings measurement_from_json(const json& j);
json to_json(const counting::MeasurementSettings& m);
json to_json(const counting::CoincidenceRates& r);
json to_json(const counting::HeraldedG2& g);
json to_json(const counting::PgrExtraction& x);

franson::FransonConfig franson_from_json(const json& j);
json to_json(const franson::FransonConfig& c);
json to_json(const franson::FringeFit& f);

link::LossBudget budget_from_json(const json& j);
json to_json(const link::LossBudget& b);
link::FiberSpec fiber_from_json(const json& j);
json to_json(const link::FiberSpec& f);

}  // namespace pairsource::io
