// SPDX-License-Identifier: Apache-2.0
#include <radiosim/catalog.hpp>
#include <radiosim/util.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cctype>

namespace radiosim
{

std::string to_lower(std::string_view s)
{
    auto out = std::string(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

EnvironmentCatalog::EnvironmentCatalog(std::filesystem::path catalogFile): _file(std::move(catalogFile))
{
    reload();
}

void EnvironmentCatalog::reload()
{
    if (_file.empty())
        return;
    auto doc = nlohmann::json {};
    try
    {
        doc = nlohmann::json::parse(read_file(_file));
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw EnvironmentParseError(fmt::format("catalog {}: {}", _file.string(), e.what()));
    }
    catch (const std::runtime_error& e)
    {
        throw EnvironmentParseError(fmt::format("catalog: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("environments") || !doc["environments"].is_array())
        throw EnvironmentParseError(fmt::format("catalog {}: expected an 'environments' array", _file.string()));

    auto entries = std::map<std::string, CatalogEntry> {};
    for (auto const& j: doc["environments"])
    {
        if (!j.is_object() || !j.contains("name") || !j.contains("file") || !j["name"].is_string()
            || !j["file"].is_string())
            throw EnvironmentParseError(fmt::format("catalog {}: entries need string 'name' and 'file'", _file.string()));
        auto entry = CatalogEntry {
            .name = to_lower(j["name"].get<std::string>()),
            .file = j["file"].get<std::string>(),
            .description = j.value("description", std::string {}),
            .substitute = j.value("substitute", false),
        };
        if (entry.file.is_relative())
            entry.file = _file.parent_path() / entry.file;
        if (!entries.emplace(entry.name, entry).second)
            throw EnvironmentParseError(fmt::format("catalog {}: duplicate name '{}'", _file.string(), entry.name));
    }

    auto lock = std::lock_guard(_mutex);
    _cache.clear();
    _entries = std::move(entries);
}

namespace
{

// Entries backed by the same file share one cache slot; in-memory entries use their name.
std::string cache_key(const CatalogEntry& e)
{
    return e.file.empty() ? "memory:" + e.name : "file:" + e.file.lexically_normal().string();
}

} // namespace

void EnvironmentCatalog::add(CatalogEntry entry)
{
    entry.name = to_lower(entry.name);
    auto lock = std::lock_guard(_mutex);
    if (auto it = _entries.find(entry.name); it != _entries.end())
        _cache.erase(cache_key(it->second));
    _cache.erase(cache_key(entry));
    _entries[entry.name] = std::move(entry);
}

void EnvironmentCatalog::add(std::shared_ptr<const Environment> env, std::string description)
{
    auto const key = to_lower(env->name());
    auto lock = std::lock_guard(_mutex);
    auto entry = CatalogEntry { .name = key, .file = {}, .description = std::move(description), .substitute = false };
    _cache[cache_key(entry)] = std::move(env);
    _entries[key] = std::move(entry);
}

std::vector<CatalogEntry> EnvironmentCatalog::entries() const
{
    auto lock = std::lock_guard(_mutex);
    auto out = std::vector<CatalogEntry> {};
    for (auto const& [_, e]: _entries)
        out.push_back(e);
    return out;
}

std::vector<std::string> EnvironmentCatalog::names() const
{
    auto lock = std::lock_guard(_mutex);
    auto out = std::vector<std::string> {};
    for (auto const& [name, _]: _entries)
        out.push_back(name);
    return out;
}

std::optional<CatalogEntry> EnvironmentCatalog::find(std::string_view name) const
{
    auto lock = std::lock_guard(_mutex);
    auto it = _entries.find(to_lower(name));
    if (it == _entries.end())
        return std::nullopt;
    return it->second;
}

std::shared_ptr<const Environment> EnvironmentCatalog::environment(std::string_view name) const
{
    auto const key = to_lower(name);
    auto file = std::filesystem::path {};
    auto slot = std::string {};
    {
        auto lock = std::lock_guard(_mutex);
        auto it = _entries.find(key);
        if (it == _entries.end())
            throw UnknownEnvironmentError(std::string(name));
        file = it->second.file;
        slot = cache_key(it->second);
        if (auto c = _cache.find(slot); c != _cache.end())
            return c->second;
    }
    auto env = std::make_shared<const Environment>(load_environment(file));
    auto lock = std::lock_guard(_mutex);
    return _cache.emplace(slot, std::move(env)).first->second;
}

std::string EnvironmentCatalog::content_hash(std::string_view name) const
{
    return environment_hash(*environment(name));
}

std::string environment_hash(const Environment& env)
{
    return sha256_hex(environment_to_json(env).dump());
}

} // namespace radiosim
