#include "atrfas/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "atrfas/errors.hpp"

namespace atrfas {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for '" + key + "': '" + v + "'");
    }
}

float to_float(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        float x = std::stof(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': '" + v + "'");
    }
}

uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad seed for '" + key + "': '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError("config: bad boolean for '" + key + "': '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

RunConfig RunConfig::defaults() { return RunConfig{}; }

void RunConfig::override_seed(uint64_t seed) {
    gen.seed = seed;
    train.seed = seed;
    gen_seed_set = true;
    train_seed_set = true;
}

void RunConfig::apply_env_seed_fallback() {
    const char* env = std::getenv("ATRFAS_SEED");
    if (!env) return;
    const uint64_t seed = to_u64(env, "ATRFAS_SEED");
    if (!gen_seed_set) gen.seed = seed;
    if (!train_seed_set) train.seed = seed;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config: malformed section at " + where);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "dataset" && section != "train" && section != "ablate" &&
                section != "sweep")
                throw ConfigError("config: unknown section [" + section + "] at " + where);
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at " + where);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config: key '" + key + "' outside any section at " + where);

        if (section == "dataset") {
            if (key == "height") cfg.gen.height = to_int(val, key);
            else if (key == "width") cfg.gen.width = to_int(val, key);
            else if (key == "n0") cfg.gen.n0 = to_int(val, key);
            else if (key == "label_height") cfg.gen.label_h = to_int(val, key);
            else if (key == "label_width") cfg.gen.label_w = to_int(val, key);
            else if (key == "train_live") cfg.gen.train.live = to_int(val, key);
            else if (key == "train_print") cfg.gen.train.print = to_int(val, key);
            else if (key == "train_replay") cfg.gen.train.replay = to_int(val, key);
            else if (key == "train_mask") cfg.gen.train.mask = to_int(val, key);
            else if (key == "test_live") cfg.gen.test.live = to_int(val, key);
            else if (key == "test_print") cfg.gen.test.print = to_int(val, key);
            else if (key == "test_replay") cfg.gen.test.replay = to_int(val, key);
            else if (key == "test_mask") cfg.gen.test.mask = to_int(val, key);
            else if (key == "ambient_lo") cfg.gen.ambient_lo = to_float(val, key);
            else if (key == "ambient_hi") cfg.gen.ambient_hi = to_float(val, key);
            else if (key == "ka_lo") cfg.gen.ka_lo = to_float(val, key);
            else if (key == "ka_hi") cfg.gen.ka_hi = to_float(val, key);
            else if (key == "kd_lo") cfg.gen.kd_lo = to_float(val, key);
            else if (key == "kd_hi") cfg.gen.kd_hi = to_float(val, key);
            else if (key == "flash_scale_lo") cfg.gen.flash_scale_lo = to_float(val, key);
            else if (key == "flash_scale_hi") cfg.gen.flash_scale_hi = to_float(val, key);
            else if (key == "noise_sigma") cfg.gen.noise_sigma = to_float(val, key);
            else if (key == "test_ambient_shift") cfg.gen.test_ambient_shift = to_float(val, key);
            else if (key == "seed") { cfg.gen.seed = to_u64(val, key); cfg.gen_seed_set = true; }
            else throw ConfigError("config: unknown key '" + key + "' in [dataset] at " + where);
        } else if (section == "train") {
            if (key == "batch_size") cfg.train.batch_size = to_int(val, key);
            else if (key == "lr") cfg.train.lr = to_float(val, key);
            else if (key == "decay") cfg.train.decay = to_float(val, key);
            else if (key == "epochs") cfg.train.epochs = to_int(val, key);
            else if (key == "n0") cfg.train.n0 = to_int(val, key);
            else if (key == "seed") { cfg.train.seed = to_u64(val, key); cfg.train_seed_set = true; }
            else if (key == "mode") cfg.train.mode = mode_from_string(val);
            else if (key == "scheme") cfg.train.scheme = scheme_from_string(val);
            else if (key == "lambda_c") cfg.train.weights.lambda_c = to_float(val, key);
            else if (key == "lambda_d") cfg.train.weights.lambda_d = to_float(val, key);
            else if (key == "lambda_g") cfg.train.weights.lambda_g = to_float(val, key);
            else if (key == "depth_loss") {
                if (val == "bce") cfg.train.depth_loss_kind = DepthLossKind::bce;
                else if (val == "softmax2d") cfg.train.depth_loss_kind = DepthLossKind::softmax2d;
                else throw ConfigError("config: depth_loss must be bce or softmax2d, got '" + val + "'");
            }
            else if (key == "input_standardize") cfg.train.input_standardize = to_bool(val, key);
            else if (key == "val_fraction") cfg.train.val_fraction = to_float(val, key);
            else if (key == "experts") cfg.train.experts = to_int(val, key);
            else if (key == "stem_channels") cfg.train.stem_channels = to_int(val, key);
            else throw ConfigError("config: unknown key '" + key + "' in [train] at " + where);
        } else if (section == "ablate") {
            if (key == "k") cfg.ablate.k = to_int(val, key);
            else if (key == "epochs") cfg.ablate.epochs = to_int(val, key);
            else if (key == "rows") cfg.ablate.rows = split_list(val);
            else throw ConfigError("config: unknown key '" + key + "' in [ablate] at " + where);
        } else if (section == "sweep") {
            if (key == "n0_values") {
                cfg.sweep.n0_values.clear();
                for (const std::string& s : split_list(val))
                    cfg.sweep.n0_values.push_back(to_int(s, key));
                if (cfg.sweep.n0_values.empty())
                    throw ConfigError("config: n0_values must not be empty");
            }
            else if (key == "epochs") cfg.sweep.epochs = to_int(val, key);
            else if (key == "train_live") cfg.sweep.train.live = to_int(val, key);
            else if (key == "train_print") cfg.sweep.train.print = to_int(val, key);
            else if (key == "train_replay") cfg.sweep.train.replay = to_int(val, key);
            else if (key == "train_mask") cfg.sweep.train.mask = to_int(val, key);
            else if (key == "test_live") cfg.sweep.test.live = to_int(val, key);
            else if (key == "test_print") cfg.sweep.test.print = to_int(val, key);
            else if (key == "test_replay") cfg.sweep.test.replay = to_int(val, key);
            else if (key == "test_mask") cfg.sweep.test.mask = to_int(val, key);
            else if (key == "timing_runs") cfg.sweep.timing_runs = to_int(val, key);
            else throw ConfigError("config: unknown key '" + key + "' in [sweep] at " + where);
        }
    }
    if (cfg.train.n0 != cfg.gen.n0)
        throw ConfigError("config: [train] n0 and [dataset] n0 must agree");
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    RunConfig cfg = parse(buf.str(), path);
    cfg.apply_env_seed_fallback();
    return cfg;
}

std::string RunConfig::echo() const {
    std::ostringstream os;
    os << "# resolved atrfas configuration\n";
    os << "[dataset]\n";
    os << "height = " << gen.height << "\n";
    os << "width = " << gen.width << "\n";
    os << "n0 = " << gen.n0 << "\n";
    os << "label_height = " << gen.label_h << "\n";
    os << "label_width = " << gen.label_w << "\n";
    os << "train_live = " << gen.train.live << "\n";
    os << "train_print = " << gen.train.print << "\n";
    os << "train_replay = " << gen.train.replay << "\n";
    os << "train_mask = " << gen.train.mask << "\n";
    os << "test_live = " << gen.test.live << "\n";
    os << "test_print = " << gen.test.print << "\n";
    os << "test_replay = " << gen.test.replay << "\n";
    os << "test_mask = " << gen.test.mask << "\n";
    os << "ambient_lo = " << gen.ambient_lo << "\n";
    os << "ambient_hi = " << gen.ambient_hi << "\n";
    os << "ka_lo = " << gen.ka_lo << "\n";
    os << "ka_hi = " << gen.ka_hi << "\n";
    os << "kd_lo = " << gen.kd_lo << "\n";
    os << "kd_hi = " << gen.kd_hi << "\n";
    os << "flash_scale_lo = " << gen.flash_scale_lo << "\n";
    os << "flash_scale_hi = " << gen.flash_scale_hi << "\n";
    os << "noise_sigma = " << gen.noise_sigma << "\n";
    os << "test_ambient_shift = " << gen.test_ambient_shift << "\n";
    os << "seed = " << gen.seed << "\n";
    os << "[train]\n";
    os << "batch_size = " << train.batch_size << "\n";
    os << "lr = " << train.lr << "\n";
    os << "decay = " << train.decay << "\n";
    os << "epochs = " << train.epochs << "\n";
    os << "n0 = " << train.n0 << "\n";
    os << "seed = " << train.seed << "\n";
    os << "mode = " << to_string(train.mode) << "\n";
    os << "scheme = " << to_string(train.scheme) << "\n";
    os << "lambda_c = " << train.weights.lambda_c << "\n";
    os << "lambda_d = " << train.weights.lambda_d << "\n";
    os << "lambda_g = " << train.weights.lambda_g << "\n";
    os << "depth_loss = " << (train.depth_loss_kind == DepthLossKind::bce ? "bce" : "softmax2d")
       << "\n";
    os << "input_standardize = " << (train.input_standardize ? "true" : "false") << "\n";
    os << "val_fraction = " << train.val_fraction << "\n";
    os << "experts = " << train.experts << "\n";
    os << "stem_channels = " << train.stem_channels << "\n";
    os << "[ablate]\n";
    os << "k = " << ablate.k << "\n";
    os << "epochs = " << ablate.epochs << "\n";
    os << "rows = ";
    for (size_t i = 0; i < ablate.rows.size(); ++i) os << (i ? "," : "") << ablate.rows[i];
    os << "\n";
    os << "[sweep]\n";
    os << "n0_values = ";
    for (size_t i = 0; i < sweep.n0_values.size(); ++i)
        os << (i ? "," : "") << sweep.n0_values[i];
    os << "\n";
    os << "epochs = " << sweep.epochs << "\n";
    os << "train_live = " << sweep.train.live << "\n";
    os << "train_print = " << sweep.train.print << "\n";
    os << "train_replay = " << sweep.train.replay << "\n";
    os << "train_mask = " << sweep.train.mask << "\n";
    os << "test_live = " << sweep.test.live << "\n";
    os << "test_print = " << sweep.test.print << "\n";
    os << "test_replay = " << sweep.test.replay << "\n";
    os << "test_mask = " << sweep.test.mask << "\n";
    os << "timing_runs = " << sweep.timing_runs << "\n";
    return os.str();
}

} // namespace atrfas
