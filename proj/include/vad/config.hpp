#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vad/flow.hpp"
#include "vad/fusion.hpp"
#include "vad/jigsaw.hpp"
#include "vad/synth.hpp"

namespace vad {

struct FlowBranchConfig {
    FlowHyper model;
    FlowTrainHyper train;
    std::size_t train_stride = 4;
    std::size_t test_stride = 1;
    std::size_t max_train_windows = 512;
};

struct JigsawBranchConfig {
    JigsawHyper model;
    JigsawTrainHyper train;
    std::size_t max_train_cubes = 2000;
};

// One key-value file with [synth] / [flow] / [jigsaw] / [fusion] sections.
// The raw text is kept so `run` can echo it verbatim into the output dir.
struct ExperimentConfig {
    SynthConfig synth;
    std::uint64_t synth_seed = 11;
    FlowBranchConfig flow;
    JigsawBranchConfig jigsaw;
    FusionConfig fusion;
    std::string raw_text;

    // derives the three stage seeds from one master seed
    void override_master_seed(std::uint64_t seed);
};

ExperimentConfig parse_experiment_config(const std::string& ini_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string default_config_ini();

}  // namespace vad
