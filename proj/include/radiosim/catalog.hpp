// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <radiosim/geometry.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace radiosim
{

struct CatalogEntry
{
    std::string name; ///< lower-case lookup key
    std::filesystem::path file;
    std::string description;
    /// Set when the entry stands in for a dataset that is not shipped (e.g. a city scan).
    bool substitute = false;
};

class UnknownEnvironmentError: public EnvironmentError
{
  public:
    explicit UnknownEnvironmentError(const std::string& name):
        EnvironmentError("unknown environment '" + name + "'"), _name(name)
    {
    }
    [[nodiscard]] const std::string& name() const { return _name; }

  private:
    std::string _name;
};

/// Maps environment names to files. Catalog JSON:
///   { "environments": [ { "name": "munich01", "file": "synthetic01.json",
///                          "description": "...", "substitute": true }, ... ] }
/// Relative file paths resolve against the catalog's directory. Lookups are
/// case-insensitive. Loaded environments are cached and shared read-only.
class EnvironmentCatalog
{
  public:
    EnvironmentCatalog() = default;
    explicit EnvironmentCatalog(std::filesystem::path catalogFile);

    EnvironmentCatalog(const EnvironmentCatalog&) = delete;
    EnvironmentCatalog& operator=(const EnvironmentCatalog&) = delete;

    /// Re-reads the catalog file (no-op for in-memory catalogs).
    void reload();
    void add(CatalogEntry entry);
    /// Registers an already-built environment under its name.
    void add(std::shared_ptr<const Environment> env, std::string description = {});

    [[nodiscard]] std::vector<CatalogEntry> entries() const;
    [[nodiscard]] std::vector<std::string> names() const;
    [[nodiscard]] std::optional<CatalogEntry> find(std::string_view name) const;

    /// Throws UnknownEnvironmentError, or the loader's errors for a bad file.
    [[nodiscard]] std::shared_ptr<const Environment> environment(std::string_view name) const;
    /// See environment_hash().
    [[nodiscard]] std::string content_hash(std::string_view name) const;

  private:
    std::filesystem::path _file;
    mutable std::mutex _mutex;
    std::map<std::string, CatalogEntry> _entries;
    mutable std::map<std::string, std::shared_ptr<const Environment>> _cache;
};

/// SHA-256 of the environment's canonical JSON; stable across whitespace edits.
[[nodiscard]] std::string environment_hash(const Environment& env);

[[nodiscard]] std::string to_lower(std::string_view s);

} // namespace radiosim
