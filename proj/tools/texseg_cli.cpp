#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "texseg/annotations/io.hpp"
#include "texseg/annotations/stats.hpp"
#include "texseg/annotations/validate.hpp"
#include "texseg/harness/ablate.hpp"
#include "texseg/harness/evaluate.hpp"
#include "texseg/harness/glyph_pretrain.hpp"
#include "texseg/harness/reports.hpp"
#include "texseg/harness/train.hpp"
#include "texseg/synthdata/synth.hpp"

namespace {

using namespace texseg;

std::string default_data_root() {
    const char* env = std::getenv("TEXSEG_DATA_ROOT");
    return env ? env : "";
}

anno::Split parse_split(const std::string& s) { return anno::split_from_name(s); }

int cmd_synth(int n, uint64_t seed, const std::string& preset, const std::string& out,
              const std::string& split) {
    synth::SynthConfig cfg = preset == "hard" ? synth::hard_preset() : synth::easy_preset();
    cfg.seed = seed;
    const auto manifest = synth::generate_split(cfg, n, out, parse_split(split));
    std::cout << "wrote " << manifest.ids.size() << " " << split << " samples to " << out
              << "\n";
    return 0;
}

int cmd_validate(const std::string& data, const std::string& split) {
    int errors = 0, warnings = 0;
    const auto ds = anno::load_dataset(data, parse_split(split));
    for (const auto& rec : ds) {
        for (const auto& v : anno::validate_sample(rec)) {
            const bool err = v.severity == anno::Severity::kError;
            (err ? errors : warnings) += 1;
            std::cout << (err ? "ERROR " : "WARN  ") << v.code << ": " << v.message << "\n";
        }
    }
    std::cout << ds.size() << " samples, " << errors << " errors, " << warnings
              << " warnings\n";
    return errors > 0 ? 1 : 0;
}

int cmd_stats(const std::string& data, const std::string& split, const std::string& out) {
    const auto ds = anno::load_dataset(data, parse_split(split));
    const nlohmann::json j = anno::stats_to_json(anno::dataset_stats(ds));
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream f(out);
        f << j.dump(2) << "\n";
        std::cout << "stats written to " << out << "\n";
    }
    return 0;
}

int cmd_pretrain_glyph(const std::string& data, const std::string& split, int epochs,
                       uint64_t seed, const std::string& out) {
    const auto ds = harness::load_union_dataset({data}, parse_split(split));
    harness::GlyphPretrainReport rep;
    model::GlyphClassifier clf = harness::pretrain_classifier(ds, epochs, seed, &rep);
    std::cout << "held-out accuracy: " << rep.holdout_accuracy << " (" << rep.n_train
              << " train / " << rep.n_holdout << " held-out crops)\n";
    if (!rep.missing_classes.empty()) {
        std::cout << "warning: " << rep.missing_classes.size()
                  << " classes absent from training crops\n";
    }
    clf.save(out, epochs, seed);
    std::cout << "classifier checkpoint: " << out << " (params "
              << clf.parameter_count() << ", hash " << std::hex << clf.parameter_hash()
              << std::dec << ")\n";
    return 0;
}

int cmd_train(const std::string& config_path) {
    harness::TrainConfig cfg = harness::load_config(config_path);
    model::SegModel seg(cfg.model_config());
    const harness::TrainResult res = harness::train(cfg, seg);
    std::cout << "checkpoint: " << res.checkpoint_path << "\n"
              << "log: " << res.log_path << "\n"
              << "final loss: " << res.final_losses.total << " (" << res.steps_run
              << " steps, " << res.steps_skipped << " skipped)\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& split,
             const std::string& out_csv) {
    model::SegModel seg = model::SegModel::from_checkpoint(ckpt);
    const bool use_attention =
        load_sidecar(ckpt).at("config").value("attention", true);
    const auto ds = harness::load_union_dataset({data}, parse_split(split));
    const harness::EvaluateOutput ev = harness::evaluate(seg, ds, use_attention);
    const std::string row = metrics::eval_csv_row(data, split, ev.result);
    std::cout << metrics::eval_csv_header() << "\n" << row << "\n";
    if (!out_csv.empty()) {
        std::ofstream f(out_csv);
        f << metrics::eval_csv_header() << "\n" << row << "\n";
    }
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& eval_data,
               const std::string& eval_split) {
    harness::TrainConfig cfg = harness::load_config(config_path);
    const auto train_data = harness::load_union_dataset(cfg.data_roots, anno::Split::kTrain);
    const std::string eval_root = eval_data.empty() ? cfg.data_roots.front() : eval_data;
    const auto test_data = harness::load_union_dataset({eval_root}, parse_split(eval_split));

    std::optional<model::GlyphClassifier> clf;
    if (!cfg.glyph_checkpoint.empty()) {
        clf.emplace();
        clf->load(cfg.glyph_checkpoint);
        clf->freeze();
    } else {
        harness::GlyphPretrainReport rep;
        clf = harness::pretrain_classifier(train_data, 10, cfg.seed, &rep);
        std::cout << "pretrained glyph classifier (held-out accuracy "
                  << rep.holdout_accuracy << ")\n";
    }

    const harness::AblationTable table =
        harness::ablate(cfg, train_data, test_data, &*clf);
    std::cout << harness::ablation_csv(table);
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream f(std::filesystem::path(cfg.out_dir) / "ablation.csv");
    f << harness::ablation_csv(table);
    return 0;
}

int cmd_report(const std::string& kind, const std::string& ckpt, const std::string& data,
               const std::string& split, const std::string& out) {
    model::SegModel seg = model::SegModel::from_checkpoint(ckpt);
    const bool use_attention =
        load_sidecar(ckpt).at("config").value("attention", true);
    const auto ds = harness::load_union_dataset({data}, parse_split(split));
    if (kind == "cossim") {
        const harness::CosSimReport rep = harness::cossim_report(seg, ds, use_attention);
        std::cout << harness::cossim_csv(rep);
        if (rep.rho)
            std::cout << "# spearman_rho = " << *rep.rho << "\n";
        else
            std::cout << "# spearman_rho undefined (need >= 3 distinct images)\n";
        if (!out.empty()) {
            std::ofstream f(out);
            f << harness::cossim_csv(rep);
        }
        return 0;
    }
    if (kind == "activation") {
        const std::string dir = out.empty() ? "activation_report" : out;
        harness::activation_report(seg, ds, dir, use_attention);
        std::cout << "activation maps written to " << dir << "\n";
        return 0;
    }
    std::cerr << "unknown report kind: " << kind << " (expected cossim|activation)\n";
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TexRNet text segmentation toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset split");
    int n = 10;
    uint64_t seed = 0;
    std::string preset = "easy", out_dir, split = "train";
    synth_cmd->add_option("--n", n, "number of samples");
    synth_cmd->add_option("--seed", seed, "generator seed");
    synth_cmd->add_option("--preset", preset, "easy|hard")
        ->check(CLI::IsMember({"easy", "hard"}));
    synth_cmd->add_option("--out", out_dir, "output dataset root")->required();
    synth_cmd->add_option("--split", split, "train|val|test")
        ->check(CLI::IsMember({"train", "val", "test"}));

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "validate a dataset split");
    std::string v_data = default_data_root(), v_split = "train";
    validate_cmd->add_option("--data", v_data, "dataset root");
    validate_cmd->add_option("--split", v_split, "train|val|test");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "dataset statistics report");
    std::string s_data = default_data_root(), s_split = "train", s_out;
    stats_cmd->add_option("--data", s_data, "dataset root");
    stats_cmd->add_option("--split", s_split, "train|val|test");
    stats_cmd->add_option("--out", s_out, "write JSON report here");

    // pretrain-glyph
    auto* glyph_cmd = app.add_subcommand("pretrain-glyph", "pre-train the char classifier");
    std::string g_data = default_data_root(), g_split = "train", g_out = "glyph.ckpt";
    int g_epochs = 12;
    uint64_t g_seed = 1;
    glyph_cmd->add_option("--data", g_data, "dataset root");
    glyph_cmd->add_option("--split", g_split, "train|val|test");
    glyph_cmd->add_option("--epochs", g_epochs, "training epochs");
    glyph_cmd->add_option("--seed", g_seed, "seed");
    glyph_cmd->add_option("--out", g_out, "classifier checkpoint path");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a segmentation model");
    std::string t_config;
    train_cmd->add_option("--config", t_config, "key=value config file")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string e_ckpt, e_data = default_data_root(), e_split = "test", e_out;
    eval_cmd->add_option("--ckpt", e_ckpt, "model checkpoint")->required();
    eval_cmd->add_option("--data", e_data, "dataset root");
    eval_cmd->add_option("--split", e_split, "train|val|test");
    eval_cmd->add_option("--out", e_out, "write CSV here");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "run the 5-row ablation table");
    std::string a_config, a_eval_data, a_eval_split = "test";
    ablate_cmd->add_option("--config", a_config, "base config file")->required();
    ablate_cmd->add_option("--eval-data", a_eval_data, "eval root (default: first train root)");
    ablate_cmd->add_option("--eval-split", a_eval_split, "eval split");

    // report
    auto* report_cmd = app.add_subcommand("report", "diagnostic reports");
    std::string r_kind, r_ckpt, r_data = default_data_root(), r_split = "test", r_out;
    report_cmd->add_option("kind", r_kind, "cossim|activation")->required();
    report_cmd->add_option("--ckpt", r_ckpt, "model checkpoint")->required();
    report_cmd->add_option("--data", r_data, "dataset root");
    report_cmd->add_option("--split", r_split, "train|val|test");
    report_cmd->add_option("--out", r_out, "output file/directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return cmd_synth(n, seed, preset, out_dir, split);
        if (validate_cmd->parsed()) return cmd_validate(v_data, v_split);
        if (stats_cmd->parsed()) return cmd_stats(s_data, s_split, s_out);
        if (glyph_cmd->parsed())
            return cmd_pretrain_glyph(g_data, g_split, g_epochs, g_seed, g_out);
        if (train_cmd->parsed()) return cmd_train(t_config);
        if (eval_cmd->parsed()) return cmd_eval(e_ckpt, e_data, e_split, e_out);
        if (ablate_cmd->parsed()) return cmd_ablate(a_config, a_eval_data, a_eval_split);
        if (report_cmd->parsed()) return cmd_report(r_kind, r_ckpt, r_data, r_split, r_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
