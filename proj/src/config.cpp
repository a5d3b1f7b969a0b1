#include "weblapse/config.hpp"

#include "weblapse/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace weblapse::cli {

namespace {

using nlohmann::json;

int int_field(const json& doc, const char* key, int fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc[key];
    if (!v.is_number_integer())
        throw Error(ErrorKind::ConfigError, std::string(key) + " must be an integer");
    return v.get<int>();
}

std::string str_field(const json& doc, const char* key, const std::string& fallback) {
    if (!doc.contains(key)) return fallback;
    const auto& v = doc[key];
    if (!v.is_string()) throw Error(ErrorKind::ConfigError, std::string(key) + " must be a string");
    return v.get<std::string>();
}

std::filesystem::path path_field(const json& doc, const char* key,
                                 const std::filesystem::path& fallback,
                                 const std::filesystem::path& base_dir) {
    std::filesystem::path p = str_field(doc, key, fallback.string());
    if (!p.empty() && p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p;
}

} // namespace

Config parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    if (text.empty() || text.find_first_not_of(" \t\r\n") == std::string::npos) {
        doc = json::object();
    } else {
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
    }

    static const std::set<std::string> known = {
        "mementoAggregator", "nominationDifferential", "dailyRunLimit", "strategy",
        "changeThreshold", "maxParallelFetches", "perRequestTimeout", "maxRedirectHops",
        "retries", "storeDir", "workdirRoot", "galleryDir", "fixturesDir", "knowledgeDir",
        "soundtrackLibrary", "categoryGenreMap", "rngSeed", "offline", "workdirHash",
        "browserDebugUrl",
    };

    Config cfg;
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!known.count(key)) cfg.warnings.push_back("unknown config key '" + key + "' ignored");
    }

    cfg.memento_aggregator = str_field(doc, "mementoAggregator", "");
    cfg.nomination_differential_days = int_field(doc, "nominationDifferential", 30);
    if (cfg.nomination_differential_days < 0)
        throw Error(ErrorKind::ConfigError, "nominationDifferential must be >= 0");
    cfg.daily_run_limit = int_field(doc, "dailyRunLimit", 24);
    if (cfg.daily_run_limit < 1) throw Error(ErrorKind::ConfigError, "dailyRunLimit must be >= 1");

    std::string strategy = str_field(doc, "strategy", "per-year");
    if (strategy == "per-year") cfg.strategy = StrategyKind::PerYear;
    else if (strategy == "simhash" || strategy == "change-threshold")
        cfg.strategy = StrategyKind::ChangeThreshold;
    else throw Error(ErrorKind::ConfigError, "strategy must be per-year or simhash");

    cfg.change_threshold = int_field(doc, "changeThreshold", 4);
    if (cfg.change_threshold < 0 || cfg.change_threshold > 64)
        throw Error(ErrorKind::ConfigError, "changeThreshold must lie in [0,64]");

    cfg.fetch.max_parallel_fetches = int_field(doc, "maxParallelFetches", 4);
    cfg.fetch.per_request_timeout_s = int_field(doc, "perRequestTimeout", 30);
    cfg.fetch.max_redirect_hops = int_field(doc, "maxRedirectHops", 10);
    cfg.fetch.retries = int_field(doc, "retries", 1);
    if (cfg.fetch.max_parallel_fetches < 1 || cfg.fetch.per_request_timeout_s < 1 ||
        cfg.fetch.max_redirect_hops < 1 || cfg.fetch.retries < 0)
        throw Error(ErrorKind::ConfigError, "fetch policy fields must be positive");

    cfg.store_dir = path_field(doc, "storeDir", cfg.store_dir, base_dir);
    cfg.workdir_root = path_field(doc, "workdirRoot", cfg.workdir_root, base_dir);
    cfg.gallery_dir = path_field(doc, "galleryDir", cfg.gallery_dir, base_dir);
    cfg.fixtures_dir = path_field(doc, "fixturesDir", cfg.fixtures_dir, base_dir);
    cfg.knowledge_dir = path_field(doc, "knowledgeDir", cfg.knowledge_dir, base_dir);
    cfg.soundtrack_manifest = path_field(doc, "soundtrackLibrary", "", base_dir);
    cfg.category_map = path_field(doc, "categoryGenreMap", "", base_dir);

    if (doc.contains("rngSeed")) {
        if (!doc["rngSeed"].is_number_integer())
            throw Error(ErrorKind::ConfigError, "rngSeed must be an integer");
        cfg.rng_seed = doc["rngSeed"].get<std::uint64_t>();
    }
    if (doc.contains("offline")) {
        if (!doc["offline"].is_boolean())
            throw Error(ErrorKind::ConfigError, "offline must be a boolean");
        cfg.offline = doc["offline"].get<bool>();
    }

    std::string hash = str_field(doc, "workdirHash", "md5");
    if (hash == "md5") cfg.workdir_hash = render::HashAlgo::Md5;
    else if (hash == "fnv64") cfg.workdir_hash = render::HashAlgo::Fnv64;
    else throw Error(ErrorKind::ConfigError, "workdirHash must be md5 or fnv64");

    cfg.browser_debug_base = str_field(doc, "browserDebugUrl", cfg.browser_debug_base);
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

} // namespace weblapse::cli
