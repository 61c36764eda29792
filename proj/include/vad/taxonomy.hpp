#pragma once

#include <string>
#include <vector>

#include "vad/errors.hpp"

namespace vad {

// Six-dimensional divide-and-conquer classification of a detection method.
// All dimensions are 0/1 flags except branches, which counts modeling branches.
struct TaxonomyRecord {
    std::string venue;
    int in_mod = 0;        // multi-modal input data
    int train_focus = 0;   // training data split across entities
    int model_proc = 0;    // distinct modeling techniques per branch
    int model_branch = 1;  // number of modeling branches
    int out_mod = 0;       // multi-modal output data
    int test_focus = 0;    // test data split across entities

    bool operator==(const TaxonomyRecord&) const = default;
};

enum class TaxonomyDim { InMod, TrainFocus, ModelProc, ModelBranch, OutMod, TestFocus };

TaxonomyDim parse_dimension(const std::string& name);  // throws DataError on unknown
std::string dimension_name(TaxonomyDim dim);

// The ten reviewed methods, in publication-table order.
const std::vector<TaxonomyRecord>& builtin_registry();

std::vector<TaxonomyRecord> query(const std::vector<TaxonomyRecord>& records,
                                  TaxonomyDim dim, int value);

enum class FusionMode { WO_HUMAN, W_HUMAN };

// This pipeline's own classification: two input modalities, two distinct
// modeling processes, two branches; test focus differs only by fusion mode.
TaxonomyRecord classify_self(FusionMode mode);

std::string registry_csv(const std::vector<TaxonomyRecord>& records);
std::vector<TaxonomyRecord> registry_from_csv(const std::string& csv);

}  // namespace vad
