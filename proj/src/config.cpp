#include "vad/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "vad/io_util.hpp"

namespace vad {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

SectionMap parse_ini(const std::string& text) {
    SectionMap sections;
    std::istringstream is(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(t.substr(1, t.size() - 2));
            sections[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!sections[section].emplace(key, value).second)
            throw ConfigError("config: duplicate key '" + key + "' in [" + section + "]");
    }
    return sections;
}

class SectionReader {
public:
    SectionReader(const SectionMap& map, std::string name) : name_(std::move(name)) {
        auto it = map.find(name_);
        if (it != map.end()) kv_ = it->second;
    }

    double num(const std::string& key, double fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        return parse_double(it->second);
    }
    long integer(const std::string& key, long fallback) {
        return static_cast<long>(num(key, static_cast<double>(fallback)));
    }
    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        return std::stoull(it->second);
    }
    std::string str(const std::string& key, const std::string& fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        return it->second;
    }

    void finish() const {
        for (const auto& [key, value] : kv_)
            if (!seen_.count(key))
                throw ConfigError("config: unknown key '" + key + "' in [" + name_ + "]");
    }

private:
    std::string name_;
    std::map<std::string, std::string> kv_;
    std::set<std::string> seen_;
};

}  // namespace

void ExperimentConfig::override_master_seed(std::uint64_t seed) {
    synth_seed = derive_seed(seed, 101);
    flow.train.seed = derive_seed(seed, 102);
    jigsaw.train.seed = derive_seed(seed, 103);
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    const SectionMap map = parse_ini(text);
    for (const auto& [name, kv] : map)
        if (name != "synth" && name != "flow" && name != "jigsaw" && name != "fusion")
            throw ConfigError("config: unknown section [" + name + "]");

    ExperimentConfig cfg;
    cfg.raw_text = text;

    SectionReader synth(map, "synth");
    SynthConfig& s = cfg.synth;
    cfg.synth_seed = synth.seed("seed", cfg.synth_seed);
    s.image_size = synth.num("image_size", s.image_size);
    s.frames_per_video = synth.integer("frames_per_video", s.frames_per_video);
    s.train_videos = static_cast<int>(synth.integer("train_videos", s.train_videos));
    s.test_videos = static_cast<int>(synth.integer("test_videos", s.test_videos));
    s.actors_per_video = static_cast<int>(synth.integer("actors_per_video", s.actors_per_video));
    s.benign_objects_per_video =
        static_cast<int>(synth.integer("benign_objects_per_video", s.benign_objects_per_video));
    s.keypoints = static_cast<int>(synth.integer("keypoints", s.keypoints));
    s.intervals_per_test_video =
        static_cast<int>(synth.integer("intervals_per_test_video", s.intervals_per_test_video));
    s.interval_len = synth.integer("interval_len", s.interval_len);
    s.pose_fraction = synth.num("pose_fraction", s.pose_fraction);
    s.weight_velocity_spike = synth.num("weight_velocity_spike", s.weight_velocity_spike);
    s.weight_joint_scramble = synth.num("weight_joint_scramble", s.weight_joint_scramble);
    s.weight_freeze = synth.num("weight_freeze", s.weight_freeze);
    s.spike_multiplier = synth.num("spike_multiplier", s.spike_multiplier);
    s.texture_base_mean = synth.num("texture_base_mean", s.texture_base_mean);
    s.texture_base_sd = synth.num("texture_base_sd", s.texture_base_sd);
    s.texture_amp = synth.num("texture_amp", s.texture_amp);
    s.texture_cell_strength = synth.num("texture_cell_strength", s.texture_cell_strength);
    s.texture_freq_min = synth.num("texture_freq_min", s.texture_freq_min);
    s.texture_freq_max = synth.num("texture_freq_max", s.texture_freq_max);
    s.texture_phase_rate = synth.num("texture_phase_rate", s.texture_phase_rate);
    s.texture_blob_amp = synth.num("texture_blob_amp", s.texture_blob_amp);
    s.texture_blob_radius = synth.num("texture_blob_radius", s.texture_blob_radius);
    s.texture_blob_rate = synth.num("texture_blob_rate", s.texture_blob_rate);
    s.texture_blur_ref = synth.num("texture_blur_ref", s.texture_blur_ref);
    s.anomaly_base_offset = synth.num("anomaly_base_offset", s.anomaly_base_offset);
    s.separation_threshold = synth.num("separation_threshold", s.separation_threshold);
    s.patch_lattice = static_cast<int>(synth.integer("patch_lattice", s.patch_lattice));
    s.body_scale_min = synth.num("body_scale_min", s.body_scale_min);
    s.body_scale_max = synth.num("body_scale_max", s.body_scale_max);
    s.walk_speed_min = synth.num("walk_speed_min", s.walk_speed_min);
    s.walk_speed_max = synth.num("walk_speed_max", s.walk_speed_max);
    s.limb_amp_min = synth.num("limb_amp_min", s.limb_amp_min);
    s.limb_amp_max = synth.num("limb_amp_max", s.limb_amp_max);
    s.limb_freq_min = synth.num("limb_freq_min", s.limb_freq_min);
    s.limb_freq_max = synth.num("limb_freq_max", s.limb_freq_max);
    s.border_margin = synth.num("border_margin", s.border_margin);
    s.box_margin = synth.num("box_margin", s.box_margin);
    synth.finish();

    SectionReader flow(map, "flow");
    cfg.flow.model.window_len =
        static_cast<std::size_t>(flow.integer("window_len", static_cast<long>(cfg.flow.model.window_len)));
    cfg.flow.model.keypoints = static_cast<std::size_t>(s.keypoints);
    cfg.flow.model.layers =
        static_cast<std::size_t>(flow.integer("layers", static_cast<long>(cfg.flow.model.layers)));
    cfg.flow.model.hidden =
        static_cast<std::size_t>(flow.integer("hidden", static_cast<long>(cfg.flow.model.hidden)));
    cfg.flow.model.smax = flow.num("smax", cfg.flow.model.smax);
    cfg.flow.train.epochs =
        static_cast<std::size_t>(flow.integer("epochs", static_cast<long>(cfg.flow.train.epochs)));
    cfg.flow.train.batch_size = static_cast<std::size_t>(
        flow.integer("batch_size", static_cast<long>(cfg.flow.train.batch_size)));
    cfg.flow.train.lr = flow.num("lr", cfg.flow.train.lr);
    cfg.flow.train.seed = flow.seed("seed", cfg.flow.train.seed);
    cfg.flow.train_stride =
        static_cast<std::size_t>(flow.integer("train_stride", static_cast<long>(cfg.flow.train_stride)));
    cfg.flow.test_stride =
        static_cast<std::size_t>(flow.integer("test_stride", static_cast<long>(cfg.flow.test_stride)));
    cfg.flow.max_train_windows = static_cast<std::size_t>(
        flow.integer("max_train_windows", static_cast<long>(cfg.flow.max_train_windows)));
    flow.finish();

    SectionReader jig(map, "jigsaw");
    cfg.jigsaw.model.T = static_cast<std::size_t>(jig.integer("T", static_cast<long>(cfg.jigsaw.model.T)));
    cfg.jigsaw.model.S = static_cast<std::size_t>(jig.integer("S", static_cast<long>(cfg.jigsaw.model.S)));
    cfg.jigsaw.model.G = static_cast<std::size_t>(jig.integer("G", static_cast<long>(cfg.jigsaw.model.G)));
    cfg.jigsaw.model.T_sub =
        static_cast<std::size_t>(jig.integer("T_sub", static_cast<long>(cfg.jigsaw.model.T_sub)));
    cfg.jigsaw.model.filter = jig.num("filter", cfg.jigsaw.model.filter);
    cfg.jigsaw.model.d_cell =
        static_cast<std::size_t>(jig.integer("d_cell", static_cast<long>(cfg.jigsaw.model.d_cell)));
    cfg.jigsaw.model.d_patch =
        static_cast<std::size_t>(jig.integer("d_patch", static_cast<long>(cfg.jigsaw.model.d_patch)));
    cfg.jigsaw.model.d_trunk =
        static_cast<std::size_t>(jig.integer("d_trunk", static_cast<long>(cfg.jigsaw.model.d_trunk)));
    cfg.jigsaw.train.epochs =
        static_cast<std::size_t>(jig.integer("epochs", static_cast<long>(cfg.jigsaw.train.epochs)));
    cfg.jigsaw.train.batch_size = static_cast<std::size_t>(
        jig.integer("batch_size", static_cast<long>(cfg.jigsaw.train.batch_size)));
    cfg.jigsaw.train.lr = jig.num("lr", cfg.jigsaw.train.lr);
    cfg.jigsaw.train.seed = jig.seed("seed", cfg.jigsaw.train.seed);
    cfg.jigsaw.train.holdout_fraction = jig.num("holdout_fraction", cfg.jigsaw.train.holdout_fraction);
    cfg.jigsaw.train.eval_every =
        static_cast<std::size_t>(jig.integer("eval_every", static_cast<long>(cfg.jigsaw.train.eval_every)));
    cfg.jigsaw.train.early_stop_acc = jig.num("early_stop_acc", cfg.jigsaw.train.early_stop_acc);
    cfg.jigsaw.max_train_cubes = static_cast<std::size_t>(
        jig.integer("max_train_cubes", static_cast<long>(cfg.jigsaw.max_train_cubes)));
    jig.finish();

    SectionReader fus(map, "fusion");
    cfg.fusion.mode = parse_fusion_mode(fus.str("mode", fusion_mode_name(cfg.fusion.mode)));
    cfg.fusion.normalization =
        parse_normalization(fus.str("normalization", normalization_name(cfg.fusion.normalization)));
    cfg.fusion.missing_default = fus.num("missing_default", cfg.fusion.missing_default);
    fus.finish();

    cfg.synth.validate();
    cfg.jigsaw.model.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_text_file(path));
}

std::string default_config_ini() {
    ExperimentConfig d;
    std::ostringstream os;
    os << "# experiment configuration\n"
       << "[synth]\n"
       << "seed = " << d.synth_seed << "\n"
       << "image_size = " << d.synth.image_size << "\n"
       << "frames_per_video = " << d.synth.frames_per_video << "\n"
       << "train_videos = " << d.synth.train_videos << "\n"
       << "test_videos = " << d.synth.test_videos << "\n"
       << "actors_per_video = " << d.synth.actors_per_video << "\n"
       << "benign_objects_per_video = " << d.synth.benign_objects_per_video << "\n"
       << "keypoints = " << d.synth.keypoints << "\n"
       << "intervals_per_test_video = " << d.synth.intervals_per_test_video << "\n"
       << "interval_len = " << d.synth.interval_len << "\n"
       << "pose_fraction = " << d.synth.pose_fraction << "\n"
       << "weight_velocity_spike = " << d.synth.weight_velocity_spike << "\n"
       << "weight_joint_scramble = " << d.synth.weight_joint_scramble << "\n"
       << "weight_freeze = " << d.synth.weight_freeze << "\n"
       << "spike_multiplier = " << d.synth.spike_multiplier << "\n"
       << "\n[flow]\n"
       << "seed = " << d.flow.train.seed << "\n"
       << "window_len = " << d.flow.model.window_len << "\n"
       << "layers = " << d.flow.model.layers << "\n"
       << "hidden = " << d.flow.model.hidden << "\n"
       << "smax = " << d.flow.model.smax << "\n"
       << "epochs = " << d.flow.train.epochs << "\n"
       << "batch_size = " << d.flow.train.batch_size << "\n"
       << "lr = " << d.flow.train.lr << "\n"
       << "train_stride = " << d.flow.train_stride << "\n"
       << "test_stride = " << d.flow.test_stride << "\n"
       << "max_train_windows = " << d.flow.max_train_windows << "\n"
       << "\n[jigsaw]\n"
       << "seed = " << d.jigsaw.train.seed << "\n"
       << "T = " << d.jigsaw.model.T << "\n"
       << "S = " << d.jigsaw.model.S << "\n"
       << "G = " << d.jigsaw.model.G << "\n"
       << "T_sub = " << d.jigsaw.model.T_sub << "\n"
       << "filter = " << d.jigsaw.model.filter << "\n"
       << "epochs = " << d.jigsaw.train.epochs << "\n"
       << "batch_size = " << d.jigsaw.train.batch_size << "\n"
       << "lr = " << d.jigsaw.train.lr << "\n"
       << "holdout_fraction = " << d.jigsaw.train.holdout_fraction << "\n"
       << "eval_every = " << d.jigsaw.train.eval_every << "\n"
       << "early_stop_acc = " << d.jigsaw.train.early_stop_acc << "\n"
       << "max_train_cubes = " << d.jigsaw.max_train_cubes << "\n"
       << "\n[fusion]\n"
       << "mode = " << fusion_mode_name(d.fusion.mode) << "\n"
       << "normalization = " << normalization_name(d.fusion.normalization) << "\n"
       << "missing_default = " << d.fusion.missing_default << "\n";
    return os.str();
}

}  // namespace vad
