#include "hoin/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace hoin {

namespace {

struct Entry {
    std::string key, value;
    int line = 0;
};

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace((unsigned char)s[a])) ++a;
    while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& msg, int line) {
    throw ConfigError("config: " + msg + " (line " + std::to_string(line) + ")");
}

long long to_int(const Entry& e) {
    char* end = nullptr;
    const long long v = std::strtoll(e.value.c_str(), &end, 10);
    if (e.value.empty() || end != e.value.c_str() + e.value.size())
        fail("expected integer for '" + e.key + "', got '" + e.value + "'", e.line);
    return v;
}

uint64_t to_u64(const Entry& e) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
    if (e.value.empty() || end != e.value.c_str() + e.value.size())
        fail("expected unsigned integer for '" + e.key + "', got '" + e.value + "'", e.line);
    return v;
}

double to_double(const Entry& e) {
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (e.value.empty() || end != e.value.c_str() + e.value.size())
        fail("expected number for '" + e.key + "', got '" + e.value + "'", e.line);
    return v;
}

using Section = std::vector<Entry>;

std::map<std::string, Section> split_sections(const std::string& text) {
    static const char* kSections[] = {"model", "encoder", "task", "train", "output"};
    std::map<std::string, Section> out;
    std::istringstream in(text);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header", lineno);
            section = trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const char* s : kSections) known = known || section == s;
            if (!known) fail("unknown section '[" + section + "]'", lineno);
            out[section]; // ensure present even if empty
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'", lineno);
        if (section.empty()) fail("key outside any section", lineno);
        Entry e;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = lineno;
        if (e.key.empty()) fail("empty key", lineno);
        out[section].push_back(std::move(e));
    }
    return out;
}

template <typename T>
T parse_enum(const Entry& e, std::initializer_list<std::pair<const char*, T>> table) {
    std::string valid;
    for (auto& [name, v] : table) {
        if (e.value == name) return v;
        if (!valid.empty()) valid += "|";
        valid += name;
    }
    fail("invalid value '" + e.value + "' for '" + e.key + "' (expected " + valid + ")", e.line);
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

const char* to_string(TaskKind k) {
    switch (k) {
    case TaskKind::represent: return "represent";
    case TaskKind::denoise: return "denoise";
    case TaskKind::sr: return "sr";
    case TaskKind::ct: return "ct";
    case TaskKind::inpaint: return "inpaint";
    }
    return "?";
}
const char* to_string(BlockKind k) {
    switch (k) {
    case BlockKind::plain: return "plain";
    case BlockKind::residual: return "residual";
    case BlockKind::ho: return "ho";
    }
    return "?";
}
const char* to_string(Act a) {
    switch (a) {
    case Act::relu: return "relu";
    case Act::sine: return "sine";
    case Act::linear: return "linear";
    }
    return "?";
}
const char* to_string(EncKind k) {
    switch (k) {
    case EncKind::identity: return "identity";
    case EncKind::positional: return "positional";
    case EncKind::fourier: return "fourier";
    case EncKind::hashgrid: return "hashgrid";
    }
    return "?";
}

RunConfig parse_config(const std::string& text) {
    auto sections = split_sections(text);
    RunConfig cfg;
    TaskSpec& t = cfg.task;

    // [task] first: the kind drives epoch/lr defaults
    for (const Entry& e : sections["task"]) {
        if (e.key == "kind")
            t.kind = parse_enum<TaskKind>(e, {{"represent", TaskKind::represent},
                                              {"denoise", TaskKind::denoise},
                                              {"sr", TaskKind::sr},
                                              {"ct", TaskKind::ct},
                                              {"inpaint", TaskKind::inpaint}});
        else if (e.key == "image")
            cfg.image_path = e.value;
        else if (e.key == "truth")
            cfg.truth_path = e.value;
        else if (e.key == "phantom")
            cfg.phantom = e.value;
        else if (e.key == "size") {
            cfg.size = (int)to_int(e);
            if (cfg.size < 1) fail("size must be >= 1", e.line);
        } else if (e.key == "sigma") {
            t.noise_sigma = to_double(e);
            if (t.noise_sigma < 0) fail("sigma must be >= 0", e.line);
        } else if (e.key == "factor") {
            t.sr_factor = (int)to_int(e);
            if (t.sr_factor < 1) fail("factor must be >= 1", e.line);
        } else if (e.key == "keep") {
            t.mask_keep = to_double(e);
            if (t.mask_keep <= 0 || t.mask_keep > 1) fail("keep must be in (0,1]", e.line);
        } else if (e.key == "angles") {
            t.ct_angles = (int)to_int(e);
            if (t.ct_angles < 1) fail("angles must be >= 1", e.line);
        } else
            fail("unknown key '" + e.key + "' in [task]", e.line);
    }

    // [encoder]: kind selects per-kind defaults before explicit overrides
    EncKind ekind = t.model.encoder.kind;
    for (const Entry& e : sections["encoder"])
        if (e.key == "kind")
            ekind = parse_enum<EncKind>(e, {{"identity", EncKind::identity},
                                            {"positional", EncKind::positional},
                                            {"fourier", EncKind::fourier},
                                            {"hashgrid", EncKind::hashgrid}});
    EncoderSpec enc = default_encoder(ekind);
    for (const Entry& e : sections["encoder"]) {
        if (e.key == "kind") continue;
        if (e.key == "m") {
            enc.m = (int)to_int(e);
            if (enc.m < 0) fail("m must be >= 0", e.line);
        } else if (e.key == "sigma") {
            enc.sigma = to_double(e);
            if (enc.sigma <= 0) fail("sigma must be > 0", e.line);
        } else if (e.key == "levels") {
            enc.levels = (int)to_int(e);
            if (enc.levels < 1) fail("levels must be >= 1", e.line);
        } else if (e.key == "base_resolution") {
            enc.base_resolution = (int)to_int(e);
            if (enc.base_resolution < 2) fail("base_resolution must be >= 2", e.line);
        } else if (e.key == "growth") {
            enc.growth = to_double(e);
            if (enc.growth < 1) fail("growth must be >= 1", e.line);
        } else if (e.key == "features_per_entry") {
            enc.features_per_entry = (int)to_int(e);
            if (enc.features_per_entry < 1) fail("features_per_entry must be >= 1", e.line);
        } else if (e.key == "table_size") {
            enc.table_size = (int)to_int(e);
            if (enc.table_size < 2 || (enc.table_size & (enc.table_size - 1)) != 0)
                fail("table_size must be a power of two >= 2", e.line);
        } else
            fail("unknown key '" + e.key + "' in [encoder]", e.line);
    }
    t.model.encoder = enc;

    for (const Entry& e : sections["model"]) {
        if (e.key == "block")
            t.model.block = parse_enum<BlockKind>(e, {{"plain", BlockKind::plain},
                                                      {"residual", BlockKind::residual},
                                                      {"ho", BlockKind::ho}});
        else if (e.key == "hidden_layers") {
            t.model.hidden_layers = (int)to_int(e);
            if (t.model.hidden_layers < 1) fail("hidden_layers must be >= 1", e.line);
        } else if (e.key == "width") {
            t.model.width = (int)to_int(e);
            if (t.model.width < 1) fail("width must be >= 1", e.line);
        } else if (e.key == "activation")
            t.model.act = parse_enum<Act>(
                e, {{"relu", Act::relu}, {"sine", Act::sine}, {"linear", Act::linear}});
        else if (e.key == "w0") {
            t.model.w0 = to_double(e);
            if (t.model.w0 <= 0) fail("w0 must be > 0", e.line);
        } else if (e.key == "out_dim") {
            t.model.out_dim = (int)to_int(e);
            if (t.model.out_dim < 1) fail("out_dim must be >= 1", e.line);
        } else
            fail("unknown key '" + e.key + "' in [model]", e.line);
    }

    bool lr_set = false, epochs_set = false;
    for (const Entry& e : sections["train"]) {
        if (e.key == "epochs") {
            t.epochs = (int)to_int(e);
            if (t.epochs < 1) fail("epochs must be >= 1", e.line);
            epochs_set = true;
        } else if (e.key == "lr") {
            t.lr = to_double(e);
            if (t.lr <= 0) fail("lr must be > 0", e.line);
            lr_set = true;
        } else if (e.key == "adam_eps") {
            t.adam_eps = to_double(e);
            if (t.adam_eps <= 0) fail("adam_eps must be > 0", e.line);
        } else if (e.key == "seed")
            t.seed = to_u64(e);
        else if (e.key == "decay_factor") {
            t.lr_decay_factor = to_double(e);
            if (t.lr_decay_factor <= 0) fail("decay_factor must be > 0", e.line);
        } else if (e.key == "decay_at") {
            t.lr_decay_at = to_double(e);
            if (t.lr_decay_at < 0 || t.lr_decay_at > 1) fail("decay_at must be in [0,1]", e.line);
        } else
            fail("unknown key '" + e.key + "' in [train]", e.line);
    }

    for (const Entry& e : sections["output"]) {
        if (e.key == "dir")
            cfg.out_dir = e.value;
        else if (e.key == "bands") {
            t.bands = (int)to_int(e);
            if (t.bands != 0 && t.bands < 2) fail("bands must be 0 or >= 2", e.line);
        } else if (e.key == "band_every") {
            t.band_every = (int)to_int(e);
            if (t.band_every < 1) fail("band_every must be >= 1", e.line);
        } else if (e.key == "metric_every") {
            t.metric_every = (int)to_int(e);
            if (t.metric_every < 1) fail("metric_every must be >= 1", e.line);
        } else
            fail("unknown key '" + e.key + "' in [output]", e.line);
    }

    if (!epochs_set) t.epochs = default_epochs(t.kind);
    if (!lr_set) t.lr = default_lr(t.model);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    const TaskSpec& t = cfg.task;
    const ModelSpec& m = t.model;
    const EncoderSpec& e = m.encoder;
    std::ostringstream o;
    o << "[model]\n";
    o << "block = " << to_string(m.block) << "\n";
    o << "hidden_layers = " << m.hidden_layers << "\n";
    o << "width = " << m.width << "\n";
    o << "activation = " << to_string(m.act) << "\n";
    o << "w0 = " << fmt_g17(m.w0) << "\n";
    o << "out_dim = " << m.out_dim << "\n";
    o << "\n[encoder]\n";
    o << "kind = " << to_string(e.kind) << "\n";
    o << "m = " << e.m << "\n";
    o << "sigma = " << fmt_g17(e.sigma) << "\n";
    o << "levels = " << e.levels << "\n";
    o << "base_resolution = " << e.base_resolution << "\n";
    o << "growth = " << fmt_g17(e.growth) << "\n";
    o << "features_per_entry = " << e.features_per_entry << "\n";
    o << "table_size = " << e.table_size << "\n";
    o << "\n[task]\n";
    o << "kind = " << to_string(t.kind) << "\n";
    if (!cfg.image_path.empty()) o << "image = " << cfg.image_path << "\n";
    if (!cfg.truth_path.empty()) o << "truth = " << cfg.truth_path << "\n";
    if (!cfg.phantom.empty()) o << "phantom = " << cfg.phantom << "\n";
    o << "size = " << cfg.size << "\n";
    o << "sigma = " << fmt_g17(t.noise_sigma) << "\n";
    o << "factor = " << t.sr_factor << "\n";
    o << "keep = " << fmt_g17(t.mask_keep) << "\n";
    o << "angles = " << t.ct_angles << "\n";
    o << "\n[train]\n";
    o << "epochs = " << t.epochs << "\n";
    o << "lr = " << fmt_g17(t.lr) << "\n";
    o << "seed = " << t.seed << "\n";
    o << "decay_factor = " << fmt_g17(t.lr_decay_factor) << "\n";
    o << "decay_at = " << fmt_g17(t.lr_decay_at) << "\n";
    o << "\n[output]\n";
    o << "dir = " << cfg.out_dir << "\n";
    o << "bands = " << t.bands << "\n";
    o << "band_every = " << t.band_every << "\n";
    o << "metric_every = " << t.metric_every << "\n";
    return o.str();
}

} // namespace hoin
