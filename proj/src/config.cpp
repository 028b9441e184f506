#include "capde/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace capde {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("config: bad numeric value for " + key + ": " + v);
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw UsageError("config: bad integer value for " + key + ": " + v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("config: bad boolean value for " + key + ": " + v);
}

std::string fmt_double(double d) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    return buf;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));

        if (key == "run.id") cfg.run_id = val;
        else if (key == "run.seed") { cfg.seed = to_uint(key, val); cfg.train.seed = cfg.seed; }
        else if (key == "run.out") cfg.out_dir = val;
        else if (key == "data.train") cfg.data_train = val;
        else if (key == "data.eval_in") cfg.data_eval_in = val;
        else if (key == "data.adapt") cfg.data_adapt = val;
        else if (key == "data.eval_out") cfg.data_eval_out = val;
        else if (key == "backbone.kind") cfg.train.backbone.kind = parse_backbone_kind(val);
        else if (key == "backbone.in_channels") cfg.train.backbone.in_channels = to_uint(key, val);
        else if (key == "backbone.out_channels") cfg.train.backbone.out_channels = to_uint(key, val);
        else if (key == "backbone.depth") cfg.train.backbone.depth = to_uint(key, val);
        else if (key == "backbone.width") cfg.train.backbone.width = to_uint(key, val);
        else if (key == "backbone.kernel") cfg.train.backbone.kernel = to_uint(key, val);
        else if (key == "backbone.context_dim") cfg.train.backbone.context_dim = to_uint(key, val);
        else if (key == "backbone.conditioned") cfg.train.backbone.conditioned = to_bool(key, val);
        else if (key == "train.epochs") cfg.train.epochs = to_uint(key, val);
        else if (key == "train.batch") cfg.train.batch = to_uint(key, val);
        else if (key == "train.lr") cfg.train.lr = to_double(key, val);
        else if (key == "train.sched.threshold") cfg.train.sched_threshold = to_double(key, val);
        else if (key == "train.sched.patience") cfg.train.sched_patience = static_cast<int>(to_uint(key, val));
        else if (key == "train.sched.decay") cfg.train.sched_decay = to_double(key, val);
        else if (key == "train.sched.min_lr") cfg.train.sched_min_lr = to_double(key, val);
        else if (key == "train.per_env_batches") cfg.train.per_env_batches = to_bool(key, val);
        else if (key == "train.init") cfg.train.lowrank_init = parse_init_kind(val);
        else if (key == "loss.rollout") {
            if (val == "node") cfg.train.loss.rollout = RolloutMode::node;
            else if (val == "onestep") cfg.train.loss.rollout = RolloutMode::onestep;
            else throw UsageError("config: loss.rollout must be node or onestep");
        }
        else if (key == "loss.substeps") cfg.train.loss.substeps = static_cast<int>(to_uint(key, val));
        else if (key == "loss.teacher_forcing") cfg.train.loss.teacher_forcing = static_cast<int>(to_uint(key, val));
        else if (key == "loss.history") cfg.train.loss.history = to_uint(key, val);
        else if (key == "hybrid.enabled") cfg.train.hybrid = to_bool(key, val);
        else if (key == "hybrid.strategy") {
            const std::uint64_t s2 = to_uint(key, val);
            if (s2 == 1) cfg.train.strategy = CoeffStrategy::shared_projection;
            else if (s2 == 2) cfg.train.strategy = CoeffStrategy::per_env;
            else throw UsageError("config: hybrid.strategy must be 1 or 2");
        }
        else if (key == "hybrid.combine") {
            if (val == "additive") cfg.train.combine = CombineMode::additive;
            else if (val == "composed") cfg.train.combine = CombineMode::composed;
            else throw UsageError("config: hybrid.combine must be additive or composed");
        }
        else if (key == "adapt.epochs") cfg.train.adapt_epochs = to_uint(key, val);
        else if (key == "adapt.lr") cfg.train.adapt_lr = to_double(key, val);
        else if (key == "adapt.plateau_patience") cfg.train.adapt_plateau_patience = static_cast<int>(to_uint(key, val));
        else if (key == "adapt.plateau_threshold") cfg.train.adapt_plateau_threshold = to_double(key, val);
        else if (key == "adapt.mode") cfg.train.adapt_mode = parse_adapt_mode(val);
        else if (key == "plot.enabled") cfg.plots = to_bool(key, val);
        else throw UsageError("config: unknown key: " + key);
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

std::string dump_config(const RunConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["run.id"] = cfg.run_id;
    kv["run.seed"] = std::to_string(cfg.seed);
    kv["run.out"] = cfg.out_dir;
    kv["data.train"] = cfg.data_train;
    kv["data.eval_in"] = cfg.data_eval_in;
    kv["data.adapt"] = cfg.data_adapt;
    kv["data.eval_out"] = cfg.data_eval_out;
    kv["backbone.kind"] = backbone_kind_name(cfg.train.backbone.kind);
    kv["backbone.depth"] = std::to_string(cfg.train.backbone.depth);
    kv["backbone.width"] = std::to_string(cfg.train.backbone.width);
    kv["backbone.kernel"] = std::to_string(cfg.train.backbone.kernel);
    kv["backbone.in_channels"] = std::to_string(cfg.train.backbone.in_channels);
    kv["backbone.out_channels"] = std::to_string(cfg.train.backbone.out_channels);
    kv["backbone.context_dim"] = std::to_string(cfg.train.backbone.context_dim);
    kv["backbone.conditioned"] = cfg.train.backbone.conditioned ? "true" : "false";
    kv["train.epochs"] = std::to_string(cfg.train.epochs);
    kv["train.batch"] = std::to_string(cfg.train.batch);
    kv["train.lr"] = fmt_double(cfg.train.lr);
    kv["train.sched.threshold"] = fmt_double(cfg.train.sched_threshold);
    kv["train.sched.patience"] = std::to_string(cfg.train.sched_patience);
    kv["train.sched.decay"] = fmt_double(cfg.train.sched_decay);
    kv["train.sched.min_lr"] = fmt_double(cfg.train.sched_min_lr);
    kv["train.per_env_batches"] = cfg.train.per_env_batches ? "true" : "false";
    kv["train.init"] = init_kind_name(cfg.train.lowrank_init);
    kv["loss.rollout"] = cfg.train.loss.rollout == RolloutMode::node ? "node" : "onestep";
    kv["loss.substeps"] = std::to_string(cfg.train.loss.substeps);
    kv["loss.teacher_forcing"] = std::to_string(cfg.train.loss.teacher_forcing);
    kv["loss.history"] = std::to_string(cfg.train.loss.history);
    kv["hybrid.enabled"] = cfg.train.hybrid ? "true" : "false";
    kv["hybrid.strategy"] = cfg.train.strategy == CoeffStrategy::shared_projection ? "1" : "2";
    kv["hybrid.combine"] = cfg.train.combine == CombineMode::additive ? "additive" : "composed";
    kv["adapt.epochs"] = std::to_string(cfg.train.adapt_epochs);
    kv["adapt.lr"] = fmt_double(cfg.train.adapt_lr);
    kv["adapt.plateau_patience"] = std::to_string(cfg.train.adapt_plateau_patience);
    kv["adapt.plateau_threshold"] = fmt_double(cfg.train.adapt_plateau_threshold);
    kv["adapt.mode"] = adapt_mode_name(cfg.train.adapt_mode);
    kv["plot.enabled"] = cfg.plots ? "true" : "false";

    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string s = dump_config(cfg);
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace capde
