// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <radiosim/radiomap.hpp>

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace radiosim
{

class ChatClient;

/// Quadrants in grid-index space. Column i is left when 2i+1 <= nx, row j is
/// lower when 2j+1 <= ny, so an odd midline goes to the lower/left side.
enum class Quadrant
{
    LowerLeft,
    LowerRight,
    UpperLeft,
    UpperRight,
};

[[nodiscard]] std::string_view to_string(Quadrant q);
[[nodiscard]] Quadrant quadrant_of(int i, int j, int nx, int ny);

struct QuadrantStats
{
    Quadrant quadrant = Quadrant::LowerLeft;
    std::size_t covered_cells = 0;
    std::optional<double> mean_db; ///< absent when no covered cell falls in the quadrant
    std::optional<double> median_db;
};

struct CellIndex
{
    int i = 0;
    int j = 0;
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

struct SummaryOptions
{
    double gradient_threshold_db = 10.0; ///< per cell
};

class EmptyMapError: public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

struct MapSummary
{
    int nx = 0;
    int ny = 0;
    std::size_t total_cells = 0;
    std::size_t covered_cells = 0;
    double min_db = 0.0;
    double max_db = 0.0;
    double p5 = 0.0;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double p95 = 0.0;
    std::array<QuadrantStats, 4> quadrants {}; ///< in Quadrant order
    Quadrant strongest = Quadrant::LowerLeft;  ///< lowest mean pathloss
    Quadrant weakest = Quadrant::LowerLeft;    ///< highest mean pathloss
    double gradient_threshold_db = 10.0;
    std::vector<CellIndex> high_gradient_cells; ///< row-major order
    double wall_adjacent_fraction = 0.0;        ///< of the high-gradient cells
    double los_fraction = 0.0;                  ///< of all cells
    std::vector<double> sorted_values;          ///< covered pathloss values, ascending

    /// Fraction of covered cells with pathloss <= threshold_db.
    [[nodiscard]] double coverage_fraction(double threshold_db) const;
};

/// Throws EmptyMapError when no cell is covered.
[[nodiscard]] MapSummary summarize_pathloss_map(const RadioMapResult& result, const SummaryOptions& options = {});
[[nodiscard]] MapSummary summarize_pathloss_map(const Grid<double>& pathloss,
                                                const Grid<std::uint8_t>& building_mask,
                                                const Grid<std::uint8_t>& los_mask,
                                                const SummaryOptions& options = {});

/// Central-difference gradient magnitude in dB per cell; one-sided at the grid
/// edge or next to an uncovered cell, zero for isolated cells.
[[nodiscard]] double gradient_magnitude(const Grid<double>& pathloss, int i, int j);

[[nodiscard]] std::string render_summary_text(const MapSummary& summary);
[[nodiscard]] nlohmann::json summary_to_json(const MapSummary& summary);

inline constexpr std::string_view kVisionInstruction =
    "You are looking at a radio pathloss heatmap (dB, lower is stronger signal). "
    "Describe the value range, which quadrants have strong and weak signal, and any sharp gradients, "
    "in three sentences.";

/// Sends the image as a base64 data URL in an OpenAI-style image_url content
/// part and returns the reply text verbatim. Throws ChatError on failure.
[[nodiscard]] std::string summarize_image_via_vision_model(const std::filesystem::path& image_path,
                                                           ChatClient& client,
                                                           std::string_view instruction = kVisionInstruction);

struct MapDescription
{
    std::string text;
    std::string source; ///< "vision-model" or "deterministic"
    std::optional<std::string> fallback_reason;
};

/// Vision model when a client is given and answers, deterministic summary otherwise.
[[nodiscard]] MapDescription describe_pathloss_map(const RadioMapResult& result,
                                                   const std::filesystem::path& image_path,
                                                   ChatClient* client,
                                                   const SummaryOptions& options = {});

} // namespace radiosim
