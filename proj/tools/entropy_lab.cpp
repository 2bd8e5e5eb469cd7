#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "catmap/lab/commands.hpp"
#include "catmap/lab/config.hpp"
#include "catmap/lab/table.hpp"

namespace lab = catmap::lab;

namespace {

// --workers beats ENTROPY_LAB_WORKERS beats the config value.
int resolve_workers(std::optional<int> flag, int from_config) {
    if (flag) {
        if (*flag < 1) throw lab::ConfigError("--workers must be >= 1");
        return *flag;
    }
    if (const char* env = std::getenv("ENTROPY_LAB_WORKERS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 1024) throw lab::ConfigError("ENTROPY_LAB_WORKERS must be an integer in [1, 1024]");
        return static_cast<int>(v);
    }
    return from_config;
}

int run(const std::string& command, const std::string& config_path, const std::optional<std::string>& out_flag,
        std::optional<int> workers_flag, std::optional<std::uint64_t> seed_flag) {
    nlohmann::json doc = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw lab::ConfigError("cannot open config '" + config_path + "'");
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw lab::ConfigError(std::string("config: ") + e.what());
        }
    }
    if (seed_flag) doc["seeds"] = nlohmann::json::array({*seed_flag});
    const auto cfg = lab::parse_config(doc);
    const int workers = resolve_workers(workers_flag, cfg.workers);
    const std::string out_dir = out_flag.value_or(cfg.out_dir);
    const lab::Provenance prov{command, lab::config_hash(cfg.source)};

    const auto result = lab::find_command(command)(cfg, workers);
    for (const auto& t : result.tables) lab::write_table(out_dir, t, prov);
    if (command == "verify") std::cout << lab::to_csv(result.tables.front(), prov);
    for (const auto& f : result.failures) std::cerr << "FAIL " << f << "\n";
    std::cerr << command << ": " << (result.failures.empty() ? "ok" : std::to_string(result.failures.size()) + " failure(s)")
              << ", config " << prov.config_hash << ", output in " << out_dir << "\n";
    return result.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantized cat map entropy lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    for (const char* name : {"verify", "classical-ks", "alf", "egorov", "localization", "sweep"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "worker cap");
        sub->add_option("--seed", seed, "single seed overriding the config");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : lab::kExitConfig;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), config_path, out_dir, workers, seed);
    } catch (const lab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return lab::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lab::kExitInvariant;
    }
}
