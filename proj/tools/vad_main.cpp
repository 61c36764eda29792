#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vad/config.hpp"
#include "vad/eval.hpp"
#include "vad/io_util.hpp"
#include "vad/pipeline.hpp"
#include "vad/taxonomy.hpp"

namespace {

using namespace vad;

ExperimentConfig config_from(const std::string& path, bool has_seed, std::uint64_t seed) {
    ExperimentConfig cfg =
        path.empty() ? parse_experiment_config(default_config_ini()) : load_experiment_config(path);
    if (has_seed) cfg.override_master_seed(seed);
    return cfg;
}

std::vector<FrameScoreSeries> read_any_scores(const std::string& path) {
    const std::string text = read_text_file(path);
    const auto nl = text.find('\n');
    const std::string header = nl == std::string::npos ? text : text.substr(0, nl);
    if (header == "video,frame,score") return series_from_csv(text);
    if (header.rfind("video,frame,score,", 0) == 0) {
        // fused csv: keep the first three columns
        std::istringstream is(text);
        std::string line;
        std::getline(is, line);
        std::ostringstream plain;
        plain << "video,frame,score\n";
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto fields = split(line, ',');
            if (fields.size() < 3) throw DataError("bad scores row: " + line);
            plain << fields[0] << "," << fields[1] << "," << fields[2] << "\n";
        }
        return series_from_csv(plain.str());
    }
    throw DataError("unrecognized scores csv header: " + header);
}

using LabelSets = std::vector<std::pair<std::string, std::vector<int>>>;

LabelSets labels_from_videos(const std::vector<SyntheticVideo>& videos) {
    LabelSets out;
    for (const auto& v : videos) out.emplace_back(v.video_id, v.labels);
    return out;
}

// rows "video,frame,label", frames consecutive per video
LabelSets labels_from_csv(const std::string& path) {
    std::istringstream is(read_text_file(path));
    std::string line;
    if (!std::getline(is, line) || line != "video,frame,label")
        throw DataError("labels csv must start with 'video,frame,label': " + path);
    LabelSets out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 3) throw DataError("bad labels row: " + line);
        if (out.empty() || out.back().first != fields[0]) out.emplace_back(fields[0], std::vector<int>{});
        out.back().second.push_back(std::stoi(fields[2]));
    }
    return out;
}

LabeledScores labeled_from_series(const std::vector<FrameScoreSeries>& series,
                                  const LabelSets& label_sets) {
    std::map<std::string, const FrameScoreSeries*> by_id;
    for (const auto& s : series) by_id[s.video_id] = &s;
    LabeledScores ls;
    for (const auto& [video_id, labels] : label_sets) {
        auto it = by_id.find(video_id);
        if (it == by_id.end()) throw DataError("no scores for video " + video_id);
        const FrameScoreSeries filled = fill_missing(*it->second, 0.0);
        std::vector<double> scores;
        for (const auto& s : filled.scores) scores.push_back(*s);
        ls.append(video_id, scores, labels);
    }
    return ls;
}

std::string roc_csv_text(const RocCurve& curve) {
    std::ostringstream os;
    os << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : curve.points)
        os << fmt_double(fpr) << "," << fmt_double(tpr) << "\n";
    return os.str();
}

std::string taxonomy_row(const TaxonomyRecord& r) {
    std::ostringstream os;
    os << r.venue;
    for (std::size_t i = r.venue.size(); i < 26; ++i) os << ' ';
    os << r.in_mod << "  " << r.train_focus << "  " << r.model_proc << "  " << r.model_branch
       << "  " << r.out_mod << "  " << r.test_focus;
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"divide-and-conquer video anomaly detection pipeline"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_path, model_path, split = "test";
    std::string curve_path, mode_name = "w_human";
    std::uint64_t seed = 0;
    bool has_seed = false;
    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master seed override")
            ->each([&](const std::string&) { has_seed = true; });
    };

    auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic dataset");
    synth_cmd->add_option("--config", config_path, "experiment config (ini)");
    synth_cmd->add_option("--out", out_path, "output dataset directory")->required();
    add_seed(synth_cmd);

    auto* train_flow_cmd = app.add_subcommand("train-flow", "train the skeleton flow branch");
    train_flow_cmd->add_option("--config", config_path, "experiment config (ini)");
    train_flow_cmd->add_option("--data", data_dir, "dataset directory")->required();
    train_flow_cmd->add_option("--out", out_path, "model checkpoint path")->required();
    train_flow_cmd->add_option("--curve", curve_path, "loss-curve csv path");
    add_seed(train_flow_cmd);

    auto* train_jigsaw_cmd = app.add_subcommand("train-jigsaw", "train the jigsaw branch");
    train_jigsaw_cmd->add_option("--config", config_path, "experiment config (ini)");
    train_jigsaw_cmd->add_option("--data", data_dir, "dataset directory")->required();
    train_jigsaw_cmd->add_option("--out", out_path, "model checkpoint path")->required();
    train_jigsaw_cmd->add_option("--curve", curve_path, "accuracy-curve csv path");
    add_seed(train_jigsaw_cmd);

    auto* score_cmd = app.add_subcommand("score", "score a dataset split with a trained model");
    score_cmd->add_option("--config", config_path, "experiment config (ini)");
    score_cmd->add_option("--model", model_path, "model checkpoint")->required();
    score_cmd->add_option("--data", data_dir, "dataset directory")->required();
    score_cmd->add_option("--split", split, "dataset split (default test)");
    score_cmd->add_option("--out", out_path, "scores csv path")->required();
    score_cmd->add_option("--mode", mode_name, "jigsaw mode: w_human | wo_human");

    auto* fuse_cmd = app.add_subcommand("fuse", "late-fuse two branch score files");
    std::string skeleton_csv, jigsaw_csv, norm_name = "minmax";
    double missing_default = 0.0;
    fuse_cmd->add_option("--skeleton", skeleton_csv, "skeleton scores csv")->required();
    fuse_cmd->add_option("--jigsaw", jigsaw_csv, "jigsaw scores csv")->required();
    fuse_cmd->add_option("--out", out_path, "fused csv path")->required();
    fuse_cmd->add_option("--normalization", norm_name, "none | minmax | zscore");
    fuse_cmd->add_option("--missing-default", missing_default, "fill value for MISSING");

    auto* eval_cmd = app.add_subcommand("eval", "frame-level micro-AUC report");
    std::vector<std::string> run_specs;
    std::string labels_csv;
    eval_cmd->add_option("--data", data_dir, "dataset directory (labels source)");
    eval_cmd->add_option("--labels", labels_csv, "labels csv (video,frame,label) alternative");
    eval_cmd->add_option("--split", split, "dataset split (default test)");
    eval_cmd->add_option("--scores", run_specs, "name=path, repeatable")->required();
    eval_cmd->add_option("--out", out_path, "output directory for report/roc files");

    auto* taxonomy_cmd = app.add_subcommand("taxonomy", "divide-and-conquer method registry");
    std::string query_spec, self_mode, csv_path;
    taxonomy_cmd->add_option("--query", query_spec, "filter, e.g. InMod=1");
    taxonomy_cmd->add_option("--self", self_mode, "classify this pipeline: w_human | wo_human");
    taxonomy_cmd->add_option("--csv", csv_path, "write registry csv here");

    auto* run_cmd = app.add_subcommand("run", "full experiment: synth, train, score, fuse, eval");
    run_cmd->add_option("--config", config_path, "experiment config (ini)");
    run_cmd->add_option("--out", out_path, "output directory")->required();
    add_seed(run_cmd);

    auto* config_cmd = app.add_subcommand("default-config", "print the default config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth_cmd->parsed()) {
            ExperimentConfig cfg = config_from(config_path, has_seed, seed);
            const Dataset ds = generate_dataset(cfg.synth, cfg.synth_seed);
            save_dataset(ds, out_path, cfg.synth);
            std::cout << "wrote " << ds.train.size() << " train / " << ds.test.size()
                      << " test videos to " << out_path << "\n";
        } else if (train_flow_cmd->parsed()) {
            ExperimentConfig cfg = config_from(config_path, has_seed, seed);
            const auto train_videos = load_split(data_dir, "train");
            Rng rng(derive_seed(cfg.flow.train.seed, 0xf10a));
            FlowModel model = FlowModel::create(cfg.flow.model, rng, FlowInit::Identity);
            const auto windows = collect_train_windows(train_videos, cfg.flow);
            const FlowTrainResult result = train_flow(model, windows, cfg.flow.train);
            save_flow(model, out_path);
            if (!curve_path.empty()) {
                std::ostringstream os;
                os << "epoch,mean_nll\n0," << fmt_double(result.initial_nll) << "\n";
                for (std::size_t i = 0; i < result.epoch_nll.size(); ++i)
                    os << (i + 1) << "," << fmt_double(result.epoch_nll[i]) << "\n";
                write_text_file(curve_path, os.str());
            }
            std::cout << "trained on " << windows.size() << " windows; mean NLL "
                      << fmt_double(result.initial_nll) << " -> " << fmt_double(result.final_nll)
                      << "\n";
        } else if (train_jigsaw_cmd->parsed()) {
            ExperimentConfig cfg = config_from(config_path, has_seed, seed);
            const auto train_videos = load_split(data_dir, "train");
            Rng rng(derive_seed(cfg.jigsaw.train.seed, 0x1195a));
            JigsawNet net = JigsawNet::create(cfg.jigsaw.model, rng);
            const auto cubes = collect_train_cubes(train_videos, cfg.jigsaw);
            const JigsawTrainResult result = train_jigsaw(net, cubes, cfg.jigsaw.train);
            save_jigsaw(net, out_path);
            if (!curve_path.empty()) {
                std::ostringstream os;
                os << "epoch,train_loss,holdout_acc_temporal,holdout_acc_spatial\n";
                for (const auto& p : result.curve)
                    os << p.epoch << "," << fmt_double(p.train_loss) << ","
                       << fmt_double(p.holdout_acc_temporal) << ","
                       << fmt_double(p.holdout_acc_spatial) << "\n";
                write_text_file(curve_path, os.str());
            }
            std::cout << "trained on " << cubes.size() << " cubes; holdout acc temporal "
                      << fmt_double(result.final_acc_temporal) << ", spatial "
                      << fmt_double(result.final_acc_spatial) << "\n";
        } else if (score_cmd->parsed()) {
            ExperimentConfig cfg = config_from(config_path, false, 0);
            const auto videos = load_split(data_dir, split);
            const auto doc = nlohmann::json::parse(read_text_file(model_path));
            const std::string kind = doc.value("kind", "");
            std::vector<FrameScoreSeries> series;
            if (kind == "flow") {
                const FlowModel model = load_flow(model_path);
                FlowBranchConfig fc = cfg.flow;
                fc.model = model.hyper;
                series = score_skeleton_split(model, videos, fc);
            } else if (kind == "jigsaw") {
                const JigsawNet net = load_jigsaw(model_path);
                series = score_jigsaw_split(net, videos, net.hyper, parse_fusion_mode(mode_name));
            } else {
                throw DataError("unrecognized checkpoint kind in " + model_path);
            }
            write_series_csv(out_path, series);
            std::cout << "wrote scores for " << series.size() << " videos to " << out_path << "\n";
        } else if (fuse_cmd->parsed()) {
            FusionConfig fc;
            fc.normalization = parse_normalization(norm_name);
            fc.missing_default = missing_default;
            auto skeleton = prepare_series(read_any_scores(skeleton_csv), fc);
            auto jigsaw = prepare_series(read_any_scores(jigsaw_csv), fc);
            const auto fused = fuse_all(skeleton, jigsaw, fc);
            write_fused_csv(out_path, fused);
            std::cout << "fused " << fused.size() << " videos to " << out_path << "\n";
        } else if (eval_cmd->parsed()) {
            if (data_dir.empty() == labels_csv.empty())
                throw UsageError("eval needs exactly one of --data or --labels");
            const LabelSets label_sets = labels_csv.empty()
                                             ? labels_from_videos(load_split(data_dir, split))
                                             : labels_from_csv(labels_csv);
            std::vector<std::pair<std::string, LabeledScores>> runs;
            for (const auto& spec : run_specs) {
                const auto eq = spec.find('=');
                if (eq == std::string::npos)
                    throw UsageError("--scores expects name=path, got: " + spec);
                runs.emplace_back(
                    spec.substr(0, eq),
                    labeled_from_series(read_any_scores(spec.substr(eq + 1)), label_sets));
            }
            const RunComparison cmp = compare_runs(runs);
            std::cout << cmp.text;
            if (!out_path.empty()) {
                namespace fs = std::filesystem;
                fs::create_directories(out_path);
                write_text_file(fs::path(out_path) / "report.csv", cmp.csv);
                write_text_file(fs::path(out_path) / "report.txt", cmp.text);
                for (const auto& [name, ls] : runs)
                    write_text_file(fs::path(out_path) / ("roc_" + name + ".csv"),
                                    roc_csv_text(roc_curve(ls)));
            }
        } else if (taxonomy_cmd->parsed()) {
            const auto& registry = builtin_registry();
            if (!csv_path.empty()) write_text_file(csv_path, registry_csv(registry));
            if (!self_mode.empty()) {
                std::cout << taxonomy_row(classify_self(parse_fusion_mode(self_mode))) << "\n";
            } else if (!query_spec.empty()) {
                const auto eq = query_spec.find('=');
                if (eq == std::string::npos)
                    throw UsageError("--query expects Dim=value, got: " + query_spec);
                const TaxonomyDim dim = parse_dimension(query_spec.substr(0, eq));
                const int value = std::stoi(query_spec.substr(eq + 1));
                for (const auto& r : query(registry, dim, value))
                    std::cout << taxonomy_row(r) << "\n";
            } else if (csv_path.empty()) {
                std::cout << "Venue                     InMod TrainFocus ModelProc ModelBranch "
                             "OutMod TestFocus\n";
                for (const auto& r : registry) std::cout << taxonomy_row(r) << "\n";
            }
        } else if (run_cmd->parsed()) {
            ExperimentConfig cfg = config_from(config_path, has_seed, seed);
            const ExperimentReport report = run_experiment(cfg, out_path);
            std::cout << report.comparison.text;
        } else if (config_cmd->parsed()) {
            std::cout << default_config_ini();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
