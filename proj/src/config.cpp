#include "iifcn/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace iifcn {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::invalid_argument("config: bad value '" + value + "' for key " + key);
}

int64_t to_i64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        int64_t r = std::stoll(trim(v), &used);
        if (used != trim(v).size()) bad_value(key, v);
        return r;
    } catch (const std::invalid_argument&) {
        bad_value(key, v);
    } catch (const std::out_of_range&) {
        bad_value(key, v);
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        uint64_t r = std::stoull(trim(v), &used);
        if (used != trim(v).size()) bad_value(key, v);
        return r;
    } catch (const std::invalid_argument&) {
        bad_value(key, v);
    } catch (const std::out_of_range&) {
        bad_value(key, v);
    }
}

real to_real(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        real r = std::stod(trim(v), &used);
        if (used != trim(v).size()) bad_value(key, v);
        return r;
    } catch (const std::invalid_argument&) {
        bad_value(key, v);
    } catch (const std::out_of_range&) {
        bad_value(key, v);
    }
}

std::vector<int64_t> to_i64_list(const std::string& key, const std::string& v) {
    std::vector<int64_t> out;
    if (trim(v).empty()) return out;
    for (const auto& part : split(v, ',')) out.push_back(to_i64(key, part));
    return out;
}

// 252x380@8x8 = HxW @ batch x epochs
std::vector<ScaleStage> to_stages(const std::string& key, const std::string& v) {
    std::vector<ScaleStage> out;
    if (trim(v).empty()) return out;
    for (const auto& part : split(v, ',')) {
        auto at = split(trim(part), '@');
        if (at.size() != 2) bad_value(key, part);
        auto hw = split(trim(at[0]), 'x');
        auto be = split(trim(at[1]), 'x');
        if (hw.size() != 2 || be.size() != 2) bad_value(key, part);
        ScaleStage s;
        s.h = to_i64(key, hw[0]);
        s.w = to_i64(key, hw[1]);
        s.batch = to_i64(key, be[0]);
        s.epochs = to_i64(key, be[1]);
        out.push_back(s);
    }
    return out;
}

// 3:2,3:4 = kernel:rate pairs
std::vector<DilatedSpec> to_head(const std::string& key, const std::string& v) {
    std::vector<DilatedSpec> out;
    if (trim(v).empty()) return out;
    for (const auto& part : split(v, ',')) {
        auto kr = split(trim(part), ':');
        if (kr.size() != 2) bad_value(key, part);
        out.push_back({to_i64(key, kr[0]), to_i64(key, kr[1])});
    }
    return out;
}

JaccardMode to_mode(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    if (t == "soft") return JaccardMode::soft;
    if (t == "literal") return JaccardMode::literal;
    bad_value(key, v);
}

std::string fmt_real(real v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_i64_list(const std::vector<int64_t>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::string fmt_stages(const std::vector<ScaleStage>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i].h) + "x" + std::to_string(v[i].w) + "@" +
             std::to_string(v[i].batch) + "x" + std::to_string(v[i].epochs);
    }
    return s;
}

std::string fmt_head(const std::vector<DilatedSpec>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i].kernel) + ":" + std::to_string(v[i].rate);
    }
    return s;
}

} // namespace

void TrainConfig::validate() const {
    if (stages.empty()) throw std::invalid_argument("train config: at least one stage required");
    for (const auto& s : stages) {
        if (s.h < 1 || s.w < 1)
            throw std::invalid_argument("train config: stage sizes must be positive");
        if (s.batch < 1) throw std::invalid_argument("train config: batch size must be >= 1");
        if (s.epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
    }
    if (adam.lr <= 0 || adam.epsilon <= 0 || adam.beta1 < 0 || adam.beta1 >= 1 ||
        adam.beta2 < 0 || adam.beta2 >= 1)
        throw std::invalid_argument("train config: bad optimizer hyperparameters");
    if (val_split < 0) throw std::invalid_argument("train config: val_split must be >= 0");
    if (checkpoint_every < 1)
        throw std::invalid_argument("train config: checkpoint_every must be >= 1");
    if (jaccard_k <= 1) throw std::invalid_argument("train config: jaccard_k must exceed 1");
}

void RunConfig::validate() const {
    model.validate();
    augment.validate();
    train.validate();
    crf.validate();
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key == "model.blocks") cfg.model.blocks = to_i64(key, value);
        else if (key == "model.widths") cfg.model.widths = to_i64_list(key, value);
        else if (key == "model.branch_channels") cfg.model.branch_channels = to_i64_list(key, value);
        else if (key == "model.dilated_head") cfg.model.dilated_head = to_head(key, value);
        else if (key == "model.num_classes") cfg.model.num_classes = to_i64(key, value);
        else if (key == "augment.stage1_prob") cfg.augment.stage1_prob = to_real(key, value);
        else if (key == "augment.stage2_prob") cfg.augment.stage2_prob = to_real(key, value);
        else if (key == "augment.stage3_prob") cfg.augment.stage3_prob = to_real(key, value);
        else if (key == "augment.factor_lo") cfg.augment.factor_lo = to_real(key, value);
        else if (key == "augment.factor_hi") cfg.augment.factor_hi = to_real(key, value);
        else if (key == "augment.sigma_lo") cfg.augment.sigma_lo = to_real(key, value);
        else if (key == "augment.sigma_hi") cfg.augment.sigma_hi = to_real(key, value);
        else if (key == "augment.zoom_lo") cfg.augment.zoom_lo = to_real(key, value);
        else if (key == "augment.zoom_hi") cfg.augment.zoom_hi = to_real(key, value);
        else if (key == "train.stages") cfg.train.stages = to_stages(key, value);
        else if (key == "train.lr") cfg.train.adam.lr = to_real(key, value);
        else if (key == "train.beta1") cfg.train.adam.beta1 = to_real(key, value);
        else if (key == "train.beta2") cfg.train.adam.beta2 = to_real(key, value);
        else if (key == "train.epsilon") cfg.train.adam.epsilon = to_real(key, value);
        else if (key == "train.seed") cfg.train.seed = to_u64(key, value);
        else if (key == "train.val_split") cfg.train.val_split = to_i64(key, value);
        else if (key == "train.checkpoint_every") cfg.train.checkpoint_every = to_i64(key, value);
        else if (key == "train.jaccard_mode") cfg.train.jaccard_mode = to_mode(key, value);
        else if (key == "train.jaccard_k") cfg.train.jaccard_k = to_real(key, value);
        else if (key == "crf.smoothness_weight") cfg.crf.smoothness_weight = to_real(key, value);
        else if (key == "crf.smoothness_sigma") cfg.crf.smoothness_sigma = to_real(key, value);
        else if (key == "crf.appearance_weight") cfg.crf.appearance_weight = to_real(key, value);
        else if (key == "crf.appearance_sigma") cfg.crf.appearance_sigma = to_real(key, value);
        else if (key == "crf.color_sigma") cfg.crf.color_sigma = to_real(key, value);
        else if (key == "crf.iterations") cfg.crf.iterations = to_i64(key, value);
        else if (key == "crf.max_side") cfg.crf.max_side = to_i64(key, value);
        else if (key == "paths.data") cfg.data_dir = value;
        else if (key == "paths.out") cfg.out_dir = value;
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream o;
    o << "model.blocks = " << cfg.model.blocks << "\n";
    o << "model.widths = " << fmt_i64_list(cfg.model.widths) << "\n";
    o << "model.branch_channels = " << fmt_i64_list(cfg.model.branch_channels) << "\n";
    o << "model.dilated_head = " << fmt_head(cfg.model.dilated_head) << "\n";
    o << "model.num_classes = " << cfg.model.num_classes << "\n";
    o << "augment.stage1_prob = " << fmt_real(cfg.augment.stage1_prob) << "\n";
    o << "augment.stage2_prob = " << fmt_real(cfg.augment.stage2_prob) << "\n";
    o << "augment.stage3_prob = " << fmt_real(cfg.augment.stage3_prob) << "\n";
    o << "augment.factor_lo = " << fmt_real(cfg.augment.factor_lo) << "\n";
    o << "augment.factor_hi = " << fmt_real(cfg.augment.factor_hi) << "\n";
    o << "augment.sigma_lo = " << fmt_real(cfg.augment.sigma_lo) << "\n";
    o << "augment.sigma_hi = " << fmt_real(cfg.augment.sigma_hi) << "\n";
    o << "augment.zoom_lo = " << fmt_real(cfg.augment.zoom_lo) << "\n";
    o << "augment.zoom_hi = " << fmt_real(cfg.augment.zoom_hi) << "\n";
    o << "train.stages = " << fmt_stages(cfg.train.stages) << "\n";
    o << "train.lr = " << fmt_real(cfg.train.adam.lr) << "\n";
    o << "train.beta1 = " << fmt_real(cfg.train.adam.beta1) << "\n";
    o << "train.beta2 = " << fmt_real(cfg.train.adam.beta2) << "\n";
    o << "train.epsilon = " << fmt_real(cfg.train.adam.epsilon) << "\n";
    o << "train.seed = " << cfg.train.seed << "\n";
    o << "train.val_split = " << cfg.train.val_split << "\n";
    o << "train.checkpoint_every = " << cfg.train.checkpoint_every << "\n";
    o << "train.jaccard_mode = "
      << (cfg.train.jaccard_mode == JaccardMode::soft ? "soft" : "literal") << "\n";
    o << "train.jaccard_k = " << fmt_real(cfg.train.jaccard_k) << "\n";
    o << "crf.smoothness_weight = " << fmt_real(cfg.crf.smoothness_weight) << "\n";
    o << "crf.smoothness_sigma = " << fmt_real(cfg.crf.smoothness_sigma) << "\n";
    o << "crf.appearance_weight = " << fmt_real(cfg.crf.appearance_weight) << "\n";
    o << "crf.appearance_sigma = " << fmt_real(cfg.crf.appearance_sigma) << "\n";
    o << "crf.color_sigma = " << fmt_real(cfg.crf.color_sigma) << "\n";
    o << "crf.iterations = " << cfg.crf.iterations << "\n";
    o << "crf.max_side = " << cfg.crf.max_side << "\n";
    if (!cfg.data_dir.empty()) o << "paths.data = " << cfg.data_dir << "\n";
    if (!cfg.out_dir.empty()) o << "paths.out = " << cfg.out_dir << "\n";
    return o.str();
}

} // namespace iifcn
