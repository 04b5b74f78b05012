// SPDX-License-Identifier: Apache-2.0
#include <radiosim/radiomap.hpp>
#include <radiosim/raytrace.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <thread>

namespace radiosim
{

namespace
{

    constexpr int kMaxGridCells = 4096;

    const std::set<std::string, std::less<>> kParamKeys = {
        "tx_x", "tx_y", "tx_z", "location", "nx", "ny", "LOS", "REF", "GREF", "NLOS", "BEL",
        "frequency_ghz", "rx_height", "tx_power_dbm", "wall_permittivity", "ground_permittivity",
        "building_class", "bel_probability",
    };

    double number_field(const nlohmann::json& doc, const char* key)
    {
        auto const& v = doc.at(key);
        if (!v.is_number())
            throw ParamsError(fmt::format("'{}' must be a number", key));
        return v.get<double>();
    }

    int integer_field(const nlohmann::json& doc, const char* key)
    {
        auto const& v = doc.at(key);
        if (v.is_number_integer())
            return v.get<int>();
        if (v.is_number_float())
        {
            auto const d = v.get<double>();
            if (std::floor(d) == d && std::abs(d) < 1e9)
                return static_cast<int>(d);
        }
        throw ParamsError(fmt::format("'{}' must be an integer", key));
    }

    bool bool_field(const nlohmann::json& doc, const char* key)
    {
        auto const& v = doc.at(key);
        if (!v.is_boolean())
            throw ParamsError(fmt::format("'{}' must be a boolean", key));
        return v.get<bool>();
    }

} // namespace

void SimulationParams::validate() const
{
    if (!std::isfinite(tx.x) || !std::isfinite(tx.y) || !std::isfinite(tx.z))
        throw ParamsError("transmitter coordinates must be finite");
    if (location.empty())
        throw ParamsError("location must name an environment");
    if (nx < 2 || ny < 2)
        throw ParamsError(fmt::format("grid must be at least 2x2, got {}x{}", nx, ny));
    if (nx > kMaxGridCells || ny > kMaxGridCells)
        throw ParamsError(fmt::format("grid dimensions are limited to {} per axis", kMaxGridCells));
    if (rx_height && (!(*rx_height > 0.0) || !std::isfinite(*rx_height)))
        throw ParamsError("rx_height must be positive");
    try
    {
        radio.validate();
    }
    catch (const std::invalid_argument& e)
    {
        throw ParamsError(e.what());
    }
    if (mechanisms.bel && !(radio.frequency_ghz >= 0.08 && radio.frequency_ghz <= 100.0))
        throw ParamsError("BEL requires a frequency within 0.08-100 GHz");
}

nlohmann::json params_to_json(const SimulationParams& p)
{
    auto doc = nlohmann::json {
        { "tx_x", p.tx.x },
        { "tx_y", p.tx.y },
        { "tx_z", p.tx.z },
        { "location", p.location },
        { "nx", p.nx },
        { "ny", p.ny },
        { "LOS", p.mechanisms.los },
        { "REF", p.mechanisms.ref },
        { "GREF", p.mechanisms.gref },
        { "NLOS", p.mechanisms.nlos },
        { "BEL", p.mechanisms.bel },
        { "frequency_ghz", p.radio.frequency_ghz },
        { "tx_power_dbm", p.radio.tx_power_dbm },
        { "wall_permittivity", p.radio.wall_permittivity },
        { "ground_permittivity", p.radio.ground_permittivity },
        { "building_class", std::string(to_string(p.radio.building_class)) },
        { "bel_probability", p.radio.bel_probability },
    };
    if (p.rx_height)
        doc["rx_height"] = *p.rx_height;
    return doc;
}

SimulationParams params_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw ParamsError("simulation parameters must be a JSON object");
    for (auto const& [key, _]: doc.items())
        if (!kParamKeys.contains(key))
            throw ParamsError(fmt::format("unknown parameter '{}'", key));
    for (auto const* key: { "tx_x", "tx_y", "tx_z", "location" })
        if (!doc.contains(key))
            throw ParamsError(fmt::format("missing required parameter '{}'", key));

    auto p = SimulationParams {};
    p.tx = { number_field(doc, "tx_x"), number_field(doc, "tx_y"), number_field(doc, "tx_z") };
    if (!doc["location"].is_string())
        throw ParamsError("'location' must be a string");
    p.location = doc["location"].get<std::string>();
    if (doc.contains("nx"))
        p.nx = integer_field(doc, "nx");
    if (doc.contains("ny"))
        p.ny = integer_field(doc, "ny");
    auto flag = [&](const char* key, bool& out) {
        if (doc.contains(key))
            out = bool_field(doc, key);
    };
    flag("LOS", p.mechanisms.los);
    flag("REF", p.mechanisms.ref);
    flag("GREF", p.mechanisms.gref);
    flag("NLOS", p.mechanisms.nlos);
    flag("BEL", p.mechanisms.bel);
    auto number = [&](const char* key, double& out) {
        if (doc.contains(key))
            out = number_field(doc, key);
    };
    number("frequency_ghz", p.radio.frequency_ghz);
    number("tx_power_dbm", p.radio.tx_power_dbm);
    number("wall_permittivity", p.radio.wall_permittivity);
    number("ground_permittivity", p.radio.ground_permittivity);
    number("bel_probability", p.radio.bel_probability);
    if (doc.contains("rx_height"))
        p.rx_height = number_field(doc, "rx_height");
    if (doc.contains("building_class"))
    {
        auto const& v = doc["building_class"];
        auto const c = v.is_string() ? building_class_from_string(v.get<std::string>()) : std::nullopt;
        if (!c)
            throw ParamsError("'building_class' must be 'traditional' or 'thermally_efficient'");
        p.radio.building_class = *c;
    }
    p.validate();
    return p;
}

RadioMapGrids::RadioMapGrids(int nx, int ny):
    pathloss_db(nx, ny, kUncovered),
    los_mask(nx, ny),
    phi(nx, ny),
    d3d(nx, ny),
    ref_mask(nx, ny),
    building_mask(nx, ny),
    height_map(nx, ny)
{
}

Vec2 cell_center(const Bounds& bounds, int nx, int ny, int i, int j)
{
    return {
        bounds.min_x + (i + 0.5) * bounds.width() / nx,
        bounds.min_y + (j + 0.5) * bounds.height() / ny,
    };
}

Point3 RadioMapResult::receiver(int i, int j) const
{
    auto const c = cell_center(bounds, nx(), ny(), i, j);
    return { c.x, c.y, params.receiver_height() };
}

namespace
{

    struct CellWriter
    {
        const SimulationParams& params;
        const Environment& env;
        RadioMapResult& result;

        void operator()(int i, int j) const
        {
            auto& g = result.grids;
            auto const& mech = params.mechanisms;
            auto const& radio = params.radio;
            auto const tx = params.tx;
            auto const rx = result.receiver(i, j);
            auto const rxh = rx.z;

            g.d3d.at(i, j) = distance(tx, rx);
            g.phi.at(i, j) = std::atan2(rx.y - tx.y, rx.x - tx.x);

            auto const building = env.building_at(rx.xy());
            g.building_mask.at(i, j) = building ? 1 : 0;
            auto const buildingHeight = building ? env.buildings()[*building].height : 0.0;
            g.height_map.at(i, j) = building ? buildingHeight : rxh;

            if (building && rx.z < buildingHeight)
            {
                // Indoor: no geometric ray terminates inside a building.
                if (!mech.nlos)
                    return;
                auto loss = nlos_3gpp(g.d3d.at(i, j), radio.frequency_ghz, rxh).db;
                if (mech.bel)
                {
                    auto const d2d = norm(rx.xy() - tx.xy());
                    auto const elevation = std::atan2(tx.z - rx.z, d2d) * 180.0 / std::numbers::pi;
                    loss += bel_p2109(radio.frequency_ghz, elevation, radio.bel_probability, radio.building_class);
                }
                g.pathloss_db.at(i, j) = loss;
                return;
            }

            auto const direct = !los_blocked(env, tx, rx);
            auto const reflections = wall_reflections(env, tx, rx);
            g.los_mask.at(i, j) = direct ? 1 : 0;
            g.ref_mask.at(i, j) = reflections.empty() ? 0 : 1;

            auto losses = std::vector<double> {};
            if (mech.los && direct)
                losses.push_back(fspl(g.d3d.at(i, j), radio.frequency_ghz));
            if (mech.ref)
                for (auto const& path: reflections)
                    losses.push_back(fspl(path.total_length, radio.frequency_ghz)
                                     + fresnel_reflection_loss(*path.incidence_angle, radio.wall_permittivity));
            if (mech.gref)
                if (auto const ground = ground_reflection(env, tx, rx))
                    losses.push_back(fspl(ground->total_length, radio.frequency_ghz)
                                     + fresnel_reflection_loss(*ground->incidence_angle, radio.ground_permittivity));

            if (auto const combined = combine_contributions(std::span<const double>(losses)))
                g.pathloss_db.at(i, j) = *combined;
            else if (mech.nlos)
                g.pathloss_db.at(i, j) = nlos_3gpp(g.d3d.at(i, j), radio.frequency_ghz, rxh).db;
        }
    };

} // namespace

RadioMapResult simulate_radio_environment(const SimulationParams& params,
                                          const Environment& env,
                                          const SimulationOptions& options)
{
    params.validate();
    if (!env.bounds().contains(params.tx.xy()))
        throw ParamsError(fmt::format("transmitter ({}, {}) is outside the bounds of '{}' [{}, {}] x [{}, {}]",
                                      params.tx.x,
                                      params.tx.y,
                                      env.name(),
                                      env.bounds().min_x,
                                      env.bounds().max_x,
                                      env.bounds().min_y,
                                      env.bounds().max_y));

    auto result = RadioMapResult {
        .params = params,
        .environment_name = env.name(),
        .environment_hash = environment_hash(env),
        .bounds = env.bounds(),
        .grids = RadioMapGrids(params.nx, params.ny),
        .run_id = random_id(),
        .created_at = utc_timestamp(),
        .warnings = {},
    };
    if (!params.mechanisms.any())
        result.warnings.emplace_back("all propagation mechanisms are disabled; every cell is uncovered");
    if (params.mechanisms.nlos && nlos_3gpp(1.0, params.radio.frequency_ghz, params.receiver_height()).height_clamped)
        result.warnings.push_back(fmt::format(
            "receiver height {} m is outside the NLOS model range [0.5, 22.5] m and was clamped", params.receiver_height()));

    auto const writer = CellWriter { params, env, result };
    auto workers = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(params.ny));

    auto run_rows = [&](unsigned first) {
        for (auto j = static_cast<int>(first); j < params.ny; j += static_cast<int>(workers))
            for (auto i = 0; i < params.nx; ++i)
                writer(i, j);
    };
    if (workers == 1)
        run_rows(0);
    else
    {
        auto pool = std::vector<std::jthread> {};
        for (auto w = 0u; w < workers; ++w)
            pool.emplace_back(run_rows, w);
    }
    return result;
}

RadioMapResult simulate_radio_environment(const SimulationParams& params,
                                          const EnvironmentCatalog& catalog,
                                          const SimulationOptions& options)
{
    params.validate();
    auto const env = catalog.environment(params.location);
    return simulate_radio_environment(params, *env, options);
}

} // namespace radiosim
