#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atrfas/commands.hpp"
#include "atrfas/errors.hpp"

using namespace atrfas;

namespace {

RunConfig load_config(const std::string& path, std::optional<uint64_t> seed) {
    RunConfig cfg;
    if (!path.empty()) {
        cfg = RunConfig::from_file(path);
    } else {
        cfg = RunConfig::defaults();
        cfg.apply_env_seed_fallback();
    }
    if (seed) cfg.override_seed(*seed);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic screen-flash face anti-spoofing pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir, ckpt_path, work_dir;
    std::optional<uint64_t> seed;
    int jobs = 1;
    bool force = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration file (key = value with sections)");
        cmd->add_option("--seed", seed, "override every seed in the configuration");
    };

    // generate
    auto* gen = app.add_subcommand("generate", "render a synthetic dataset");
    add_common(gen);
    gen->add_option("--out", out_dir, "output dataset directory")->required();
    gen->add_option("--jobs", jobs, "parallel sample rendering");
    std::optional<int> tl, tp, tr, tm, el, ep, er, em;
    gen->add_option("--train-live", tl, "override train live count");
    gen->add_option("--train-print", tp, "override train print count");
    gen->add_option("--train-replay", tr, "override train replay count");
    gen->add_option("--train-mask", tm, "override train mask count");
    gen->add_option("--test-live", el, "override test live count");
    gen->add_option("--test-print", ep, "override test print count");
    gen->add_option("--test-replay", er, "override test replay count");
    gen->add_option("--test-mask", em, "override test mask count");

    // train
    auto* trn = app.add_subcommand("train", "train a model on a dataset");
    add_common(trn);
    trn->add_option("data", data_dir, "dataset directory")->required();
    trn->add_option("--out", out_dir, "output directory for checkpoint and log")->required();
    std::string mode_str, scheme_str;
    std::optional<int> epochs_override;
    trn->add_option("--mode", mode_str, "model variant (woMEMM..DGM)");
    trn->add_option("--scheme", scheme_str, "input scheme (dn, no_dn, adjacent)");
    trn->add_option("--epochs", epochs_override, "override epoch count");
    trn->add_flag("--force", force, "overwrite an existing checkpoint");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    ev->add_option("ckpt", ckpt_path, "checkpoint file")->required();
    ev->add_option("data", data_dir, "dataset directory");
    EvalOptions eopts;
    ev->add_option("--scores-file", eopts.scores_file,
                   "skip the model; compute metrics from 'score label' rows");
    ev->add_option("--roc", eopts.roc_csv, "ROC CSV output path");

    // ablate
    auto* ab = app.add_subcommand("ablate", "run the ablation grid");
    add_common(ab);
    ab->add_option("data", data_dir, "dataset directory")->required();
    std::string modes_csv;
    ab->add_option("--modes", modes_csv, "comma-separated row names (default: full grid)");
    ab->add_option("--jobs", jobs, "parallel folds");
    ab->add_option("--out", out_dir, "optional output directory for the table");

    // sweep-n0
    auto* sw = app.add_subcommand("sweep-n0", "frame-count sweep: render, train, evaluate, time");
    add_common(sw);
    sw->add_option("--out", work_dir, "working/output directory")->required();
    sw->add_option("--jobs", jobs, "parallel sample rendering");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            RunConfig cfg = load_config(config_path, seed);
            if (tl) cfg.gen.train.live = *tl;
            if (tp) cfg.gen.train.print = *tp;
            if (tr) cfg.gen.train.replay = *tr;
            if (tm) cfg.gen.train.mask = *tm;
            if (el) cfg.gen.test.live = *el;
            if (ep) cfg.gen.test.print = *ep;
            if (er) cfg.gen.test.replay = *er;
            if (em) cfg.gen.test.mask = *em;
            cfg.gen.jobs = jobs;
            cmd_generate(cfg, out_dir);
        } else if (trn->parsed()) {
            RunConfig cfg = load_config(config_path, seed);
            if (!mode_str.empty()) cfg.train.mode = mode_from_string(mode_str);
            if (!scheme_str.empty()) cfg.train.scheme = scheme_from_string(scheme_str);
            if (epochs_override) cfg.train.epochs = *epochs_override;
            cmd_train(cfg, data_dir, out_dir, force);
        } else if (ev->parsed()) {
            if (eopts.scores_file.empty() && data_dir.empty())
                throw ConfigError("eval: a dataset directory is required without --scores-file");
            cmd_eval(ckpt_path, data_dir, eopts);
        } else if (ab->parsed()) {
            RunConfig cfg = load_config(config_path, seed);
            std::vector<std::string> rows;
            if (!modes_csv.empty()) {
                std::stringstream ss(modes_csv);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) rows.push_back(item);
            }
            cmd_ablate(cfg, data_dir, rows, jobs, out_dir);
        } else if (sw->parsed()) {
            RunConfig cfg = load_config(config_path, seed);
            cmd_sweep_n0(cfg, work_dir, jobs);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ParamError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const ValueError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
