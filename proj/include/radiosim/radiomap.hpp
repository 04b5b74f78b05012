// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <radiosim/catalog.hpp>
#include <radiosim/geometry.hpp>
#include <radiosim/propagation.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace radiosim
{

/// Pathloss value of cells no enabled mechanism covers.
inline constexpr double kUncovered = -999.0;
[[nodiscard]] inline bool is_covered(double pathloss_db) { return pathloss_db != kUncovered; }

/// Row-major ny x nx array; row 0 is the lowest y.
template <typename T>
struct Grid
{
    int nx = 0;
    int ny = 0;
    std::vector<T> values;

    Grid() = default;
    Grid(int nx_, int ny_, T fill = T {}):
        nx(nx_), ny(ny_), values(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), fill)
    {
    }

    [[nodiscard]] T& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
    [[nodiscard]] const T& at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
    friend bool operator==(const Grid&, const Grid&) = default;
};

struct Mechanisms
{
    bool los = true;
    bool ref = true;
    bool gref = true;
    bool nlos = true;
    bool bel = true;

    [[nodiscard]] bool any() const { return los || ref || gref || nlos || bel; }
    friend bool operator==(const Mechanisms&, const Mechanisms&) = default;
};

struct SimulationParams
{
    Point3 tx;
    std::string location;
    int nx = 50;
    int ny = 50;
    Mechanisms mechanisms;
    RadioConfig radio;
    std::optional<double> rx_height; ///< defaults to radio.rx_height_default

    [[nodiscard]] double receiver_height() const { return rx_height.value_or(radio.rx_height_default); }
    /// Environment-independent checks. Throws ParamsError.
    void validate() const;
    friend bool operator==(const SimulationParams&, const SimulationParams&) = default;
};

class ParamsError: public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Field names follow the tool vocabulary: tx_x, tx_y, tx_z, location, nx, ny,
/// LOS, REF, GREF, NLOS, BEL, plus optional radio settings.
[[nodiscard]] nlohmann::json params_to_json(const SimulationParams& params);
/// Missing optional fields take defaults; wrong types or unknown fields throw ParamsError.
[[nodiscard]] SimulationParams params_from_json(const nlohmann::json& doc);

struct RadioMapGrids
{
    Grid<double> pathloss_db;
    Grid<std::uint8_t> los_mask;
    Grid<double> phi; ///< azimuth from tx, radians
    Grid<double> d3d;
    Grid<std::uint8_t> ref_mask;
    Grid<std::uint8_t> building_mask;
    Grid<double> height_map; ///< building height at building cells, else rx height

    RadioMapGrids() = default;
    RadioMapGrids(int nx, int ny);
    friend bool operator==(const RadioMapGrids&, const RadioMapGrids&) = default;
};

struct RadioMapResult
{
    SimulationParams params;
    std::string environment_name;
    std::string environment_hash;
    Bounds bounds;
    RadioMapGrids grids;
    std::string run_id;
    std::string created_at;
    std::vector<std::string> warnings;

    [[nodiscard]] int nx() const { return params.nx; }
    [[nodiscard]] int ny() const { return params.ny; }
    [[nodiscard]] Point3 receiver(int i, int j) const;
};

/// Receiver cell centers spanning the bounds.
[[nodiscard]] Vec2 cell_center(const Bounds& bounds, int nx, int ny, int i, int j);

struct SimulationOptions
{
    unsigned threads = 0; ///< 0 = hardware concurrency
};

/// Runs the full grid. Throws ParamsError for invalid params or a transmitter
/// outside the bounds. Results do not depend on the thread count.
[[nodiscard]] RadioMapResult simulate_radio_environment(const SimulationParams& params,
                                                        const Environment& env,
                                                        const SimulationOptions& options = {});
/// Resolves params.location through the catalog (UnknownEnvironmentError).
[[nodiscard]] RadioMapResult simulate_radio_environment(const SimulationParams& params,
                                                        const EnvironmentCatalog& catalog,
                                                        const SimulationOptions& options = {});

// ---------------------------------------------------------------------------
// Dataset files

inline constexpr std::string_view kDatasetHeader = "rx_x rx_y rx_z los phi d3d ref bld height pathloss_db";

class DatasetError: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Space-separated table, one header line then one row per cell (row-major,
/// lowest y first). Values use the shortest round-tripping decimal form.
void export_dataset(const RadioMapResult& result, const std::filesystem::path& path);
[[nodiscard]] std::string dataset_text(const RadioMapResult& result);
/// Parses a dataset table back into grids.
[[nodiscard]] RadioMapGrids read_dataset(const std::filesystem::path& path, int nx, int ny);
[[nodiscard]] RadioMapGrids parse_dataset(std::string_view text, int nx, int ny);

[[nodiscard]] nlohmann::json metadata_json(const RadioMapResult& result);
void write_metadata(const RadioMapResult& result, const std::filesystem::path& path);

inline constexpr std::string_view kDatasetFile = "dataset.txt";
inline constexpr std::string_view kMetadataFile = "metadata.json";
inline constexpr std::string_view kHeatmapFile = "pathloss.png";

/// Loads metadata.json + dataset.txt from a run directory.
[[nodiscard]] RadioMapResult load_result(const std::filesystem::path& run_dir);

// ---------------------------------------------------------------------------
// Heatmap

struct HeatmapOptions
{
    int scale = 8; ///< pixels per grid cell
    std::optional<std::pair<double, double>> color_range;
    bool tx_marker = true;
};

struct HeatmapInfo
{
    int width = 0;
    int height = 0;
    int map_x = 0; ///< top-left pixel of the map area
    int map_y = 0;
    int map_width = 0;
    int map_height = 0;
    double range_lo = 0.0;
    double range_hi = 0.0;
    std::vector<std::string> colorbar_labels; ///< bottom (lo) to top (hi)
};

struct Rgba
{
    std::uint8_t r = 0, g = 0, b = 0, a = 255;
    friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// Pixels of a rendered heatmap, row 0 at the top.
struct Image
{
    int width = 0;
    int height = 0;
    std::vector<Rgba> pixels;
    [[nodiscard]] const Rgba& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr Rgba kBuildingColor { 128, 128, 128, 255 };
inline constexpr Rgba kUncoveredColor { 0, 0, 0, 0 };

/// Low pathloss at the hot (red) end, high at the cold (blue) end.
[[nodiscard]] Rgba colormap(double fraction_of_range);
/// Linear-interpolation percentile (q in [0, 100]) of the covered cells.
[[nodiscard]] double percentile(std::vector<double> values, double q);

[[nodiscard]] std::pair<Image, HeatmapInfo> render_heatmap_image(const RadioMapResult& result,
                                                                 const HeatmapOptions& options = {});
/// Writes a PNG (with colorbar range in tEXt chunks) and returns the layout.
HeatmapInfo render_heatmap(const RadioMapResult& result,
                           const std::filesystem::path& path,
                           const HeatmapOptions& options = {});
[[nodiscard]] Image read_png(const std::filesystem::path& path);
/// tEXt chunks of a PNG (colorbar_min_db, colorbar_max_db, run_id for our heatmaps).
[[nodiscard]] std::map<std::string, std::string> read_png_text(const std::filesystem::path& path);

/// dataset.txt + metadata.json + pathloss.png into dir.
void write_run_artifacts(const RadioMapResult& result, const std::filesystem::path& dir, const HeatmapOptions& heatmap = {});

} // namespace radiosim
