#pragma once

#include "weblapse/http.hpp"
#include "weblapse/urlnorm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace weblapse::cli {

enum class StrategyKind { PerYear, ChangeThreshold };

struct Config {
    std::string memento_aggregator;
    int nomination_differential_days = 30;
    int daily_run_limit = 24;
    StrategyKind strategy = StrategyKind::PerYear;
    int change_threshold = 4;
    net::FetchPolicy fetch;

    std::filesystem::path store_dir = "store";
    std::filesystem::path workdir_root = "work";
    std::filesystem::path gallery_dir = "gallery";
    std::filesystem::path fixtures_dir = "fixtures";
    std::filesystem::path knowledge_dir = "knowledge";
    std::filesystem::path soundtrack_manifest; // empty = silent videos
    std::filesystem::path category_map;        // empty = built-in default

    std::optional<std::uint64_t> rng_seed;
    bool offline = false;
    render::HashAlgo workdir_hash = render::HashAlgo::Md5;
    std::string browser_debug_base = "http://127.0.0.1:9222";

    std::vector<std::string> warnings; // unknown keys etc.
};

// JSON key/value config. Unknown keys warn; absent keys take the defaults
// above. Throws MissingFile / ConfigError.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

} // namespace weblapse::cli
