#include "atrfas/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "atrfas/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace atrfas {

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os << text;
    if (!os) throw DataError("write failed for " + path);
}

void echo_config(const RunConfig& cfg, const std::string& out_dir) {
    write_text((fs::path(out_dir) / "resolved.ini").string(), cfg.echo());
}

std::string pct(double v, double s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f +- %.2f", v * 100.0, s * 100.0);
    return buf;
}

} // namespace

std::string resolve_train_split(const std::string& dir) {
    if (fs::exists(fs::path(dir) / "train" / "manifest.json"))
        return (fs::path(dir) / "train").string();
    if (fs::exists(fs::path(dir) / "manifest.json")) return dir;
    throw DataError("no dataset found under " + dir);
}

std::string resolve_test_split(const std::string& dir) {
    if (fs::exists(fs::path(dir) / "test" / "manifest.json"))
        return (fs::path(dir) / "test").string();
    if (fs::exists(fs::path(dir) / "manifest.json")) return dir;
    throw DataError("no dataset found under " + dir);
}

void cmd_generate(const RunConfig& cfg, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create " + out_dir + ": " + ec.message());
    const auto [ntrain, ntest] = generate_dataset(cfg.gen, out_dir);
    echo_config(cfg, out_dir);

    std::cout << "split\tattack_type\tcount\n";
    const GenCounts* counts[2] = {&cfg.gen.train, &cfg.gen.test};
    const char* names[2] = {"train", "test"};
    for (int s = 0; s < 2; ++s) {
        std::cout << names[s] << "\tlive\t" << counts[s]->live << '\n';
        std::cout << names[s] << "\tprint\t" << counts[s]->print << '\n';
        std::cout << names[s] << "\treplay\t" << counts[s]->replay << '\n';
        std::cout << names[s] << "\tmask\t" << counts[s]->mask << '\n';
    }
    std::cout << "written\t" << out_dir << "\t" << (ntrain + ntest) << '\n';
}

void cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir,
               bool force) {
    const Dataset data = Dataset::load(resolve_train_split(data_dir));
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create " + out_dir + ": " + ec.message());
    const fs::path ckpt = fs::path(out_dir) / "model.ckpt";
    if (fs::exists(ckpt) && !force)
        throw DataError("checkpoint " + ckpt.string() + " exists (use --force to overwrite)");

    TrainConfig tc = cfg.train;
    tc.n0 = data.n0;
    const TrainResult result = train(data, tc);

    json extra;
    extra["seed"] = tc.seed;
    extra["scheme"] = to_string(tc.scheme);
    extra["input_standardize"] = tc.input_standardize;
    extra["val_fraction"] = tc.val_fraction;
    extra["n0"] = tc.n0;
    extra["best_epoch"] = result.best_epoch;
    extra["best_val_eer"] = result.best_val_eer;
    extra["best_val_threshold"] = result.best_val_threshold;
    AtrFasModel best = result.restore_best();
    best.save(ckpt.string(), extra.dump());

    std::string log_text;
    for (const EpochLog& l : result.log) log_text += l.tsv_line() + "\n";
    write_text((fs::path(out_dir) / "train.log").string(), log_text);
    echo_config(cfg, out_dir);

    std::cout << "checkpoint\t" << ckpt.string() << '\n';
    std::cout << "epochs\t" << result.log.size() << '\n';
    std::cout << "best_epoch\t" << result.best_epoch << '\n';
    std::cout << "best_val_eer\t" << result.best_val_eer << '\n';
}

namespace {

ScoreSet read_scores_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open scores file " + path);
    ScoreSet s;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        float score;
        int label;
        if (!(ls >> score >> label))
            throw DataError("bad scores line " + std::to_string(lineno) + " in " + path);
        s.scores.push_back(score);
        s.labels.push_back(label);
    }
    return s;
}

void print_report(const EvalReport& rep) {
    std::cout << "metric\tvalue\n";
    std::cout << "eer\t" << rep.eer << '\n';
    std::cout << "eer_threshold\t" << rep.eer_threshold << '\n';
    std::cout << "dev_threshold\t" << rep.dev_threshold << '\n';
    std::cout << "far\t" << rep.far << '\n';
    std::cout << "frr\t" << rep.frr << '\n';
    std::cout << "hter\t" << rep.hter << '\n';
}

} // namespace

void cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
              const EvalOptions& opts) {
    std::string roc_path = opts.roc_csv;
    if (roc_path.empty())
        roc_path = (fs::path(ckpt_path).parent_path() / "roc.csv").string();

    if (!opts.scores_file.empty()) {
        // Metric bypass: evaluate an externally produced score list.
        const ScoreSet s = read_scores_file(opts.scores_file);
        const EerResult e = eer(s);
        const EvalReport rep = evaluate_scores(s, e.threshold);
        print_report(rep);
        write_roc_csv(roc_path, rep.roc);
        return;
    }

    std::string extra;
    AtrFasModel model = AtrFasModel::load(ckpt_path, &extra);
    if (extra.empty())
        throw DataError("checkpoint carries no training metadata; cannot derive dev threshold");
    json meta;
    try {
        meta = json::parse(extra);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad training metadata in checkpoint: ") + e.what());
    }
    const uint64_t seed = meta.at("seed").get<uint64_t>();
    const InputScheme scheme = scheme_from_string(meta.at("scheme").get<std::string>());
    const bool standardize = meta.at("input_standardize").get<bool>();
    const float val_fraction = meta.at("val_fraction").get<float>();

    // Dev threshold: EER threshold on the training val split (never on test).
    const Dataset train_data = Dataset::load(resolve_train_split(data_dir));
    const auto [train_idx, val_idx] = split_train_val_indices(train_data, val_fraction, seed);
    const Dataset dev = train_data.subset(val_idx);
    std::vector<float> dev_scores = score_dataset(model, dev, scheme, standardize);
    const EerResult dev_eer = eer(score_set_from(dev_scores, dev));

    const Dataset test_data = Dataset::load(resolve_test_split(data_dir));
    std::vector<float> scores = score_dataset(model, test_data, scheme, standardize);
    const EvalReport rep =
        evaluate_scores(score_set_from(scores, test_data), dev_eer.threshold);
    print_report(rep);
    write_roc_csv(roc_path, rep.roc);
}

void cmd_ablate(const RunConfig& cfg, const std::string& data_dir,
                const std::vector<std::string>& rows, int jobs, const std::string& out_dir) {
    const Dataset data = Dataset::load(resolve_train_split(data_dir));
    TrainConfig base = cfg.train;
    base.n0 = data.n0;
    if (cfg.ablate.epochs >= 0) base.epochs = cfg.ablate.epochs;

    std::vector<AblationSetting> grid = default_ablation_grid();
    const std::vector<std::string>& want = rows.empty() ? cfg.ablate.rows : rows;
    if (!want.empty()) {
        std::vector<AblationSetting> filtered;
        for (const std::string& name : want) {
            bool found = false;
            for (const AblationSetting& s : grid)
                if (s.name == name) {
                    filtered.push_back(s);
                    found = true;
                }
            if (!found) throw ConfigError("unknown ablation row '" + name + "'");
        }
        grid = std::move(filtered);
    }

    const auto table = run_ablation(data, grid, cfg.ablate.k, base, jobs);
    std::ostringstream os;
    os << "setting\tHTER%\tEER%\n";
    for (const AblationRow& r : table)
        os << r.name << '\t' << pct(r.hter_mean, r.hter_std) << '\t'
           << pct(r.eer_mean, r.eer_std) << '\n';
    std::cout << os.str();
    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw DataError("cannot create " + out_dir + ": " + ec.message());
        write_text((fs::path(out_dir) / "ablation.tsv").string(), os.str());
        echo_config(cfg, out_dir);
    }
}

void cmd_sweep_n0(const RunConfig& cfg, const std::string& work_dir, int jobs) {
    std::error_code ec;
    fs::create_directories(work_dir, ec);
    if (ec) throw DataError("cannot create " + work_dir + ": " + ec.message());

    GenConfig gen = cfg.gen;
    gen.train = cfg.sweep.train;
    gen.test = cfg.sweep.test;
    gen.jobs = jobs;
    TrainConfig base = cfg.train;
    if (cfg.sweep.epochs >= 0) base.epochs = cfg.sweep.epochs;

    const auto rows =
        sweep_n0(gen, cfg.sweep.n0_values, base, work_dir, cfg.sweep.timing_runs);
    std::ostringstream os;
    os << "n0\tN\tHTER%\tEER%\tforward_ms\n";
    for (const SweepRow& r : rows) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%d\t%d\t%.2f\t%.2f\t%.3f\n", r.n0, r.n_frames,
                      r.hter * 100.0, r.eer * 100.0, r.forward_ms);
        os << buf;
    }
    std::cout << os.str();
    write_text((fs::path(work_dir) / "sweep.tsv").string(), os.str());
    echo_config(cfg, work_dir);
}

} // namespace atrfas
