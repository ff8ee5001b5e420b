#include "ciatr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ciatr/core.hpp"

namespace ciatr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

}  // namespace

void validate(const AugmentConfig& cfg) {
    if (cfg.ra_max < 0.0 || cfg.ra_max > 1.0) {
        throw ConfigError("augment.ra_max must lie in [0,1], got " + std::to_string(cfg.ra_max));
    }
    if (cfg.include_prob < 0.0 || cfg.include_prob > 1.0) {
        throw ConfigError("augment.include_prob must lie in [0,1], got " +
                          std::to_string(cfg.include_prob));
    }
    if (cfg.rm_re_choices.empty()) {
        throw ConfigError("augment.rm_re_choices must not be empty");
    }
    for (int re : cfg.rm_re_choices) {
        if (re <= 0) throw ConfigError("augment.rm_re_choices entries must be positive");
    }
    if (cfg.sigma_rotate <= 0.0 || cfg.sigma_translate <= 0.0 || cfg.sigma_scale <= 0.0) {
        throw ConfigError("augment sigmas must be positive");
    }
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (cfg.lr <= 0.0) throw ConfigError("train.lr must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
        throw ConfigError("train.momentum must lie in [0,1), got " +
                          std::to_string(cfg.momentum));
    }
    if (cfg.margin <= 0.0) throw ConfigError("train.margin must be positive");
    if (cfg.lambda_d < 0.0) throw ConfigError("train.lambda_d must be >= 0");
}

void validate(const ConfoundConfig& cfg) {
    if (cfg.num_classes < 2) throw ConfigError("data.num_classes must be >= 2");
    if (cfg.n_per_class < 1) throw ConfigError("data.n_per_class must be >= 1");
    if (cfg.test_per_class < 1) throw ConfigError("data.test_per_class must be >= 1");
    if (!is_pow2(cfg.height) || !is_pow2(cfg.width) || cfg.height < 8 || cfg.width < 8) {
        throw ConfigError("data.height/width must be powers of two and >= 8");
    }
    if (cfg.rho < 0.0 || cfg.rho > 1.0) {
        throw ConfigError("data.rho must lie in [0,1], got " + std::to_string(cfg.rho));
    }
    if (cfg.num_ic_buckets < 2 || cfg.num_ic_buckets > 36) {
        throw ConfigError("data.num_ic_buckets must lie in [2,36], got " +
                          std::to_string(cfg.num_ic_buckets));
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"data.num_classes", [&](const std::string& k, const std::string& v) {
             cfg.data.num_classes = static_cast<int>(parse_int(k, v)); }},
        {"data.n_per_class", [&](const std::string& k, const std::string& v) {
             cfg.data.n_per_class = static_cast<int>(parse_int(k, v)); }},
        {"data.test_per_class", [&](const std::string& k, const std::string& v) {
             cfg.data.test_per_class = static_cast<int>(parse_int(k, v)); }},
        {"data.height", [&](const std::string& k, const std::string& v) {
             cfg.data.height = static_cast<int>(parse_int(k, v)); }},
        {"data.width", [&](const std::string& k, const std::string& v) {
             cfg.data.width = static_cast<int>(parse_int(k, v)); }},
        {"data.rho", [&](const std::string& k, const std::string& v) {
             cfg.data.rho = parse_double(k, v); }},
        {"data.num_ic_buckets", [&](const std::string& k, const std::string& v) {
             cfg.data.num_ic_buckets = static_cast<int>(parse_int(k, v)); }},
        {"augment.enabled", [&](const std::string& k, const std::string& v) {
             cfg.augment.enabled = parse_bool(k, v); }},
        {"augment.ra_max", [&](const std::string& k, const std::string& v) {
             cfg.augment.ra_max = parse_double(k, v); }},
        {"augment.rm_re_choices", [&](const std::string& k, const std::string& v) {
             cfg.augment.rm_re_choices.clear();
             for (const std::string& item : split_list(v)) {
                 cfg.augment.rm_re_choices.push_back(static_cast<int>(parse_int(k, item)));
             } }},
        {"augment.include_prob", [&](const std::string& k, const std::string& v) {
             cfg.augment.include_prob = parse_double(k, v); }},
        {"augment.sigma_rotate", [&](const std::string& k, const std::string& v) {
             cfg.augment.sigma_rotate = parse_double(k, v); }},
        {"augment.sigma_translate", [&](const std::string& k, const std::string& v) {
             cfg.augment.sigma_translate = parse_double(k, v); }},
        {"augment.sigma_scale", [&](const std::string& k, const std::string& v) {
             cfg.augment.sigma_scale = parse_double(k, v); }},
        {"augment.fixed", [&](const std::string& k, const std::string& v) {
             cfg.augment.fixed = parse_bool(k, v); }},
        {"train.epochs", [&](const std::string& k, const std::string& v) {
             cfg.train.epochs = static_cast<int>(parse_int(k, v)); }},
        {"train.batch_size", [&](const std::string& k, const std::string& v) {
             cfg.train.batch_size = static_cast<int>(parse_int(k, v)); }},
        {"train.lr", [&](const std::string& k, const std::string& v) {
             cfg.train.lr = parse_double(k, v); }},
        {"train.momentum", [&](const std::string& k, const std::string& v) {
             cfg.train.momentum = parse_double(k, v); }},
        {"train.margin", [&](const std::string& k, const std::string& v) {
             cfg.train.margin = parse_double(k, v); }},
        {"train.lambda_d", [&](const std::string& k, const std::string& v) {
             cfg.train.lambda_d = parse_double(k, v); }},
        {"train.seed", [&](const std::string& k, const std::string& v) {
             cfg.train.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
        {"train.augment_on", [&](const std::string& k, const std::string& v) {
             cfg.train.augment_on = parse_bool(k, v); }},
        {"train.ld_on", [&](const std::string& k, const std::string& v) {
             cfg.train.ld_on = parse_bool(k, v); }},
        {"paths.data_dir", [&](const std::string&, const std::string& v) {
             cfg.data_dir = v; }},
        {"paths.out_dir", [&](const std::string&, const std::string& v) {
             cfg.out_dir = v; }},
        {"paths.checkpoint", [&](const std::string&, const std::string& v) {
             cfg.checkpoint = v; }},
        {"experiment.seeds", [&](const std::string& k, const std::string& v) {
             cfg.experiment_seeds.clear();
             for (const std::string& item : split_list(v)) {
                 cfg.experiment_seeds.push_back(
                     static_cast<std::uint64_t>(parse_int(k, item)));
             } }},
        {"experiment.n_values", [&](const std::string& k, const std::string& v) {
             cfg.experiment_n_values.clear();
             for (const std::string& item : split_list(v)) {
                 cfg.experiment_n_values.push_back(static_cast<int>(parse_int(k, item)));
             } }},
        {"experiment.variants", [&](const std::string&, const std::string& v) {
             cfg.experiment_variants = split_list(v); }},
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("unknown config key '" + key + "' (line " +
                              std::to_string(lineno) + ")");
        }
        it->second(key, value);
    }

    validate(cfg.data);
    validate(cfg.augment);
    validate(cfg.train);
    if (cfg.experiment_seeds.empty() || cfg.experiment_n_values.empty() ||
        cfg.experiment_variants.empty()) {
        throw ConfigError("experiment lists must not be empty");
    }
    for (const std::string& variant : cfg.experiment_variants) {
        TrainConfig probe;
        apply_variant(probe, variant);  // throws on unknown names
    }
    return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_variant(TrainConfig& cfg, const std::string& variant) {
    if (variant == "ce-only") {
        cfg.augment_on = false;
        cfg.ld_on = false;
    } else if (variant == "aug") {
        cfg.augment_on = true;
        cfg.ld_on = false;
    } else if (variant == "aug-ld") {
        cfg.augment_on = true;
        cfg.ld_on = true;
    } else {
        throw ConfigError("unknown variant '" + variant +
                          "' (expected ce-only, aug, aug-ld)");
    }
}

}  // namespace ciatr
