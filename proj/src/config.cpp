#include "nsc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nsc/errors.hpp"

namespace nsc {

namespace {

[[noreturn]] void fail(const std::string& name, int line, const std::string& msg) {
    throw UsageError(name + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& name, int line, const std::string& key,
              const std::string& value) {
    try {
        size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail(name, line, key + " expects an integer, got '" + value + "'");
    }
}

float parse_float(const std::string& name, int line, const std::string& key,
                  const std::string& value) {
    try {
        size_t used = 0;
        const float v = std::stof(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail(name, line, key + " expects a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& name, int line, const std::string& key,
                const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    fail(name, line, key + " expects true or false, got '" + value + "'");
}

TrainMode parse_mode(const std::string& name, int line, const std::string& value) {
    if (value == "nested") return TrainMode::Nested;
    if (value == "single-sparse") return TrainMode::SingleSparse;
    if (value == "dense") return TrainMode::Dense;
    if (value == "naive-shared") return TrainMode::NaiveShared;
    fail(name, line, "unknown mode '" + value +
                         "' (nested, single-sparse, dense, naive-shared)");
}

std::vector<float> parse_levels(const std::string& name, int line,
                                const std::string& value) {
    std::vector<float> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(name, line, "empty entry in levels list");
        out.push_back(parse_float(name, line, "levels", item));
    }
    if (out.empty()) fail(name, line, "levels list is empty");
    return out;
}

// Block shape written as "MxN", e.g. "1x2".
void parse_block(const std::string& name, int line, const std::string& value,
                 SparsityLevelSet& levels) {
    const size_t x = value.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= value.size())
        fail(name, line, "block expects MxN, got '" + value + "'");
    levels.block_m = parse_int(name, line, "block", value.substr(0, x));
    levels.block_n = parse_int(name, line, "block", value.substr(x + 1));
    if (levels.block_m < 1 || levels.block_n < 1)
        fail(name, line, "block dimensions must be >= 1");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& name) {
    RunConfig cfg;
    std::stringstream stream(text);
    std::string raw;
    int line = 0;
    while (std::getline(stream, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        const size_t eq = s.find('=');
        if (eq == std::string::npos) fail(name, line, "expected key=value, got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail(name, line, "missing key before '='");
        if (value.empty()) fail(name, line, "missing value for " + key);

        if (key == "data") cfg.data_path = value;
        else if (key == "eval") cfg.eval_path = value;
        else if (key == "out_model") cfg.out_model = value;
        else if (key == "out_metrics") cfg.out_metrics = value;
        else if (key == "arch") cfg.arch = value;
        else if (key == "mode") cfg.train.mode = parse_mode(name, line, value);
        else if (key == "levels") cfg.train.levels.levels = parse_levels(name, line, value);
        else if (key == "block") parse_block(name, line, value, cfg.train.levels);
        else if (key == "steps") cfg.train.steps = parse_int(name, line, key, value);
        else if (key == "batch_size") cfg.train.batch_size = parse_int(name, line, key, value);
        else if (key == "seed") cfg.train.seed =
            static_cast<uint64_t>(parse_int(name, line, key, value));
        else if (key == "warmup_steps") cfg.train.schedule.warmup_steps =
            parse_int(name, line, key, value);
        else if (key == "period") cfg.train.schedule.period = parse_int(name, line, key, value);
        else if (key == "eval_interval") cfg.train.eval_interval =
            parse_int(name, line, key, value);
        else if (key == "lr") cfg.train.optimizer.base_lr = parse_float(name, line, key, value);
        else if (key == "momentum") cfg.train.optimizer.momentum =
            parse_float(name, line, key, value);
        else if (key == "weight_decay") cfg.train.optimizer.weight_decay =
            parse_float(name, line, key, value);
        else if (key == "distill") cfg.train.distill = parse_bool(name, line, key, value);
        else if (key == "train_fraction") cfg.train_fraction =
            parse_float(name, line, key, value);
        else fail(name, line, "unknown key '" + key + "'");
    }

    if (cfg.data_path.empty()) throw UsageError(name + ": missing required key 'data'");
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed on " + path);
    return parse_config_text(ss.str(), path);
}

}  // namespace nsc
